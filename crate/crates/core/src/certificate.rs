//! Persistency certificates.

use serde::Serialize;

use crate::mapping::{PixelwiseMapping, VerificationReport};
use crate::model::EnergyInstance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Some optimum avoids every eliminated label.
    Weak,
    /// Every optimum avoids every eliminated label.
    Strict,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Weak => "weak",
            Mode::Strict => "strict",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Method {
    #[serde(rename = "l1")]
    L1,
    #[serde(rename = "eps-l1")]
    EpsL1,
    #[serde(rename = "a2ou")]
    AllToOneUnknown,
    #[serde(rename = "maximprove")]
    MaxImprove,
    #[serde(rename = "dee1")]
    Dee1,
    #[serde(rename = "dee2")]
    Dee2,
    #[serde(rename = "window")]
    Window,
    #[serde(rename = "dee2+l1")]
    Dee2L1,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Dee1,
        Method::Dee2,
        Method::L1,
        Method::EpsL1,
        Method::AllToOneUnknown,
        Method::MaxImprove,
        Method::Window,
        Method::Dee2L1,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Method::L1 => "l1",
            Method::EpsL1 => "eps-l1",
            Method::AllToOneUnknown => "a2ou",
            Method::MaxImprove => "maximprove",
            Method::Dee1 => "dee1",
            Method::Dee2 => "dee2",
            Method::Window => "window",
            Method::Dee2L1 => "dee2+l1",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.tag() == tag)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Eliminated labels together with the mapping and check that justify them.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PersistencyCertificate {
    pub method: Method,
    pub mode: Mode,
    pub eliminated: Vec<(usize, usize)>,
    /// Excluded label pairs `(s, t, i, j)` on canonical edges.
    pub excluded_pairs: Vec<(usize, usize, usize, usize)>,
    pub mapping: PixelwiseMapping,
    pub verification: VerificationReport,
    /// Percentage of eliminable labels removed.
    pub completeness: f64,
    /// Test labeling of subset-to-one methods.
    pub y: Option<Vec<usize>>,
    /// Windows in the order their maps were composed.
    pub window_order: Vec<usize>,
}

impl PersistencyCertificate {
    pub fn new(
        inst: &EnergyInstance,
        method: Method,
        mode: Mode,
        mapping: PixelwiseMapping,
        verification: VerificationReport,
    ) -> Self {
        let eliminated = mapping.eliminated();
        PersistencyCertificate {
            method,
            mode,
            completeness: completeness_of(inst, eliminated.len()),
            eliminated,
            excluded_pairs: Vec::new(),
            mapping,
            verification,
            y: None,
            window_order: Vec::new(),
        }
    }

    pub fn num_eliminated(&self) -> usize {
        self.eliminated.len()
    }

    /// `alive[s][i]` is false for eliminated labels.
    pub fn alive(&self) -> Vec<Vec<bool>> {
        self.mapping.alive()
    }
}

/// `100 * n_elim / sum_s (K_s - 1)`.
pub fn completeness_of(inst: &EnergyInstance, n_elim: usize) -> f64 {
    let denom: usize = inst.label_counts().iter().map(|&k| k - 1).sum();
    if denom == 0 {
        0.0
    } else {
        100.0 * n_elim as f64 / denom as f64
    }
}

pub fn completeness(cert: &PersistencyCertificate, inst: &EnergyInstance) -> f64 {
    completeness_of(inst, cert.num_eliminated())
}

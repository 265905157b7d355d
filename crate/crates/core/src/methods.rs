//! One entry point for every persistency method.

use crate::certificate::{Method, Mode, PersistencyCertificate};
use crate::dee::{dee1, dee2, DeeOptions};
use crate::error::{invalid, Error, Result};
use crate::lp::{Restriction, Solver};
use crate::mapping::PixelwiseMapping;
use crate::mapping::{compose, default_eps, eliminate, verify_improving_on, VerificationReport};
use crate::model::{EnergyInstance, Labeling};
use crate::persistency::{
    max_improve, max_strong_all_to_one_unknown, schlesinger_facet, select_y, solve_eps_l1, solve_l1, solve_xi, XiVector,
};
use crate::window::{bfs_windows, grid_windows, window_persistency, Subproblem, TraceRow, WindowOptions};

/// Where the test labeling of subset-to-one methods comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum YChoice {
    /// Integral or most likely label of a maximum-support optimum of the relaxation.
    FromLp,
    /// The same label everywhere.
    Uniform(usize),
    Given(Labeling),
}

#[derive(Clone, Debug)]
pub struct WindowConfig {
    /// Rectangle size on grids; on other graphs `max(h, w) / 2` is the ball radius.
    pub size: (usize, usize),
    pub stride: usize,
    pub dee_first: bool,
    pub scans: usize,
    pub budget: usize,
    pub parallel: bool,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig { size: (8, 8), stride: 4, dee_first: false, scans: 1, budget: 10_000, parallel: false }
    }
}

#[derive(Clone, Debug)]
pub struct MethodConfig {
    pub y: YChoice,
    /// Strict margin; defaults to `1e-4 * max |f|`.
    pub eps: Option<f64>,
    pub window: WindowConfig,
    /// Grid shape of the instance, used to lay out windows.
    pub grid: Option<(usize, usize)>,
    pub dee1_mode: Mode,
    /// See [`DeeOptions::pair_feedback`].
    pub pair_feedback: bool,
}

impl Default for MethodConfig {
    fn default() -> Self {
        MethodConfig {
            y: YChoice::FromLp,
            eps: None,
            window: WindowConfig::default(),
            grid: None,
            dee1_mode: Mode::Weak,
            pair_feedback: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MethodRun {
    pub certificate: PersistencyCertificate,
    pub xi: Option<XiVector>,
    /// Remaining labels per node, for windowed runs.
    pub trace: Vec<TraceRow>,
}

impl MethodRun {
    fn plain(certificate: PersistencyCertificate) -> Self {
        MethodRun { certificate, xi: None, trace: Vec::new() }
    }
}

pub fn resolve_y(inst: &EnergyInstance, choice: &YChoice, solver: &Solver) -> Result<Labeling> {
    let y = match choice {
        YChoice::FromLp => select_y(&schlesinger_facet(inst, solver)?, solver.tol.supp),
        YChoice::Uniform(k) => Labeling(vec![*k; inst.num_nodes()]),
        YChoice::Given(y) => y.clone(),
    };
    inst.check_labeling(&y.0)?;
    Ok(y)
}

pub fn run_method(inst: &EnergyInstance, method: Method, cfg: &MethodConfig, solver: &Solver) -> Result<MethodRun> {
    match method {
        Method::L1 => {
            let out = solve_l1(inst, &resolve_y(inst, &cfg.y, solver)?, solver)?;
            Ok(MethodRun { certificate: out.certificate, xi: Some(out.xi), trace: Vec::new() })
        }
        Method::EpsL1 => {
            let eps = cfg.eps.unwrap_or_else(|| default_eps(inst));
            let out = solve_eps_l1(inst, &resolve_y(inst, &cfg.y, solver)?, eps, solver)?;
            Ok(MethodRun { certificate: out.certificate, xi: Some(out.xi), trace: Vec::new() })
        }
        Method::AllToOneUnknown => {
            let out = max_strong_all_to_one_unknown(inst, cfg.eps, solver)?;
            Ok(MethodRun { certificate: out.certificate, xi: Some(out.xi), trace: Vec::new() })
        }
        Method::MaxImprove => {
            let out = max_improve(inst, &resolve_y(inst, &cfg.y, solver)?, solver)?;
            Ok(MethodRun::plain(out.certificate))
        }
        Method::Dee1 => {
            let opts = DeeOptions { mode: cfg.dee1_mode, pair_feedback: cfg.pair_feedback };
            Ok(MethodRun::plain(dee1(inst, opts, solver)?.certificate))
        }
        Method::Dee2 => {
            let opts = DeeOptions { mode: Mode::Weak, pair_feedback: cfg.pair_feedback };
            Ok(MethodRun::plain(dee2(inst, opts, solver)?.certificate))
        }
        Method::Window => {
            let w = &cfg.window;
            let windows = match cfg.grid {
                Some((h, wd)) if h * wd == inst.num_nodes() => grid_windows(h, wd, w.size.0, w.size.1, w.stride),
                _ => bfs_windows(inst, w.size.0.max(w.size.1) / 2),
            };
            let y = match &cfg.y {
                YChoice::FromLp => None,
                other => Some(resolve_y(inst, other, solver)?),
            };
            let opts =
                WindowOptions { budget: w.budget, dee_first: w.dee_first, scans: w.scans, parallel: w.parallel, y };
            let out = window_persistency(inst, &windows, &opts, solver)?;
            Ok(MethodRun { certificate: out.certificate, xi: None, trace: out.trace })
        }
        Method::Dee2L1 => dee2_l1(inst, cfg, solver),
    }
}

/// DEE2, then the reduced program on the surviving labels. The test labeling
/// is chosen on the original instance; labels DEE removed are replaced by their
/// DEE image.
fn dee2_l1(inst: &EnergyInstance, cfg: &MethodConfig, solver: &Solver) -> Result<MethodRun> {
    let y = resolve_y(inst, &cfg.y, solver)?;
    let dee = dee2(inst, DeeOptions { mode: Mode::Weak, pair_feedback: cfg.pair_feedback }, solver)?;
    let p_dee = &dee.certificate.mapping;
    let red = Subproblem::reduced(inst, &dee.alive)?;
    let y_red = Labeling(
        (0..inst.num_nodes()).map(|s| red.local_label(s, p_dee.get(s, y[s])).expect("DEE images are alive")).collect(),
    );
    let (xi, _) = solve_xi(&red.inst, &y_red, None, None, solver)?;
    let local = PixelwiseMapping::subset_to_one(&y_red, &xi.moved)?;
    let p = compose(p_dee, &red.lift(inst, &local)?)?;
    let restriction =
        Restriction { dead: dee.alive.iter().map(|a| vec![false; a.len()]).collect(), excluded: dee.excluded.clone() };
    let report = verify_improving_on(inst, &p, Mode::Weak, None, Some(&restriction), solver)?;
    if !report.improving {
        return Err(Error::Verification(format!("DEE2+L1 mapping failed verification with value {:e}", report.value)));
    }
    let mut certificate = eliminate(inst, &p, &report, Method::Dee2L1)?;
    certificate.excluded_pairs = dee.certificate.excluded_pairs.clone();
    certificate.y = Some((0..inst.num_nodes()).map(|s| red.labels[s][y_red[s]]).collect());
    Ok(MethodRun { certificate, xi: Some(xi), trace: Vec::new() })
}

/// Runs the verification program again for a certificate, in its mode, with its
/// margin and, if it was checked on a restricted polytope, the same restriction.
pub fn reverify(inst: &EnergyInstance, cert: &PersistencyCertificate, solver: &Solver) -> Result<VerificationReport> {
    cert.mapping.check_shape(inst)?;
    let restriction = if cert.verification.restricted {
        let mut r = Restriction::none(inst);
        for &(s, t, i, j) in &cert.excluded_pairs {
            let Some(e) = inst.edge_index(s, t) else {
                return invalid(format!("certificate refers to a missing edge {s}-{t}"));
            };
            if inst.edges()[e] != (s, t) {
                return invalid(format!("excluded pair on {s}-{t} is not in edge orientation"));
            }
            r.excluded[e][i * inst.labels(t) + j] = true;
        }
        Some(r)
    } else {
        None
    };
    verify_improving_on(inst, &cert.mapping, cert.mode, cert.verification.strict_margin, restriction.as_ref(), solver)
}

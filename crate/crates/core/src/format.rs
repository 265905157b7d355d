//! Text formats for instances and mappings.
//!
//! Instance files are line oriented:
//!
//! ```text
//! nodes 2
//! labels 0 2
//! labels 1 2
//! f0 1
//! unary 0 1 2
//! edge 0 1
//! pair 0 1 0 1 1
//! ```
//!
//! Costs that are not listed are zero. Blank lines and lines starting with `#`
//! are ignored. Mapping files hold `map <s> <i> <p_s(i)>` lines; labels that
//! are not listed map to themselves.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mapping::PixelwiseMapping;
use crate::model::{EnergyInstance, Labeling};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn fields(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(k, l)| {
        let l = l.trim();
        (!l.is_empty() && !l.starts_with('#')).then(|| (k + 1, l.split_whitespace().collect()))
    })
}

fn arg<T: std::str::FromStr>(line: usize, parts: &[&str], k: usize) -> Result<T> {
    let s = parts.get(k).ok_or_else(|| parse_err(line, format!("`{}` needs more fields", parts[0])))?;
    s.parse().map_err(|_| parse_err(line, format!("cannot parse {s:?}")))
}

fn arity(line: usize, parts: &[&str], n: usize) -> Result<()> {
    if parts.len() != n {
        return Err(parse_err(line, format!("`{}` takes {} fields, found {}", parts[0], n - 1, parts.len() - 1)));
    }
    Ok(())
}

fn cost(line: usize, parts: &[&str], k: usize) -> Result<f64> {
    let v: f64 = arg(line, parts, k)?;
    if !v.is_finite() {
        return Err(parse_err(line, "costs must be finite"));
    }
    Ok(v)
}

pub fn parse_instance(text: &str) -> Result<EnergyInstance> {
    let lines: Vec<(usize, Vec<&str>)> = fields(text).collect();
    let mut n = None;
    for (line, parts) in &lines {
        if parts[0] == "nodes" {
            arity(*line, parts, 2)?;
            if n.is_some() {
                return Err(parse_err(*line, "duplicate `nodes` line"));
            }
            n = Some(arg::<usize>(*line, parts, 1)?);
        }
    }
    let n = n.ok_or_else(|| parse_err(1, "missing `nodes` line"))?;
    let mut labels = vec![0usize; n];
    for (line, parts) in &lines {
        if parts[0] == "labels" {
            arity(*line, parts, 3)?;
            let s: usize = arg(*line, parts, 1)?;
            let k: usize = arg(*line, parts, 2)?;
            if s >= n {
                return Err(parse_err(*line, format!("node {s} out of range")));
            }
            if labels[s] != 0 {
                return Err(parse_err(*line, format!("labels of node {s} given twice")));
            }
            if k == 0 {
                return Err(parse_err(*line, "a node needs at least one label"));
            }
            labels[s] = k;
        }
    }
    if let Some(s) = labels.iter().position(|&k| k == 0) {
        return Err(parse_err(1, format!("missing `labels` line for node {s}")));
    }
    let mut inst = EnergyInstance::new(labels)?;
    for (line, parts) in &lines {
        if parts[0] == "edge" {
            arity(*line, parts, 3)?;
            inst.add_edge(arg(*line, parts, 1)?, arg(*line, parts, 2)?).map_err(|e| parse_err(*line, e.to_string()))?;
        }
    }
    for (line, parts) in &lines {
        let line = *line;
        let wrap = |e: Error| parse_err(line, e.to_string());
        match parts[0] {
            "nodes" | "labels" | "edge" => {}
            "f0" => {
                arity(line, parts, 2)?;
                inst.set_f0(cost(line, parts, 1)?);
            }
            "unary" => {
                arity(line, parts, 4)?;
                inst.set_unary(arg(line, parts, 1)?, arg(line, parts, 2)?, cost(line, parts, 3)?).map_err(wrap)?;
            }
            "pair" => {
                arity(line, parts, 6)?;
                inst.set_pair(
                    arg(line, parts, 1)?,
                    arg(line, parts, 2)?,
                    arg(line, parts, 3)?,
                    arg(line, parts, 4)?,
                    cost(line, parts, 5)?,
                )
                .map_err(wrap)?;
            }
            other => return Err(parse_err(line, format!("unknown keyword {other:?}"))),
        }
    }
    Ok(inst)
}

/// Writes every label count and edge, and the nonzero costs.
pub fn write_instance(inst: &EnergyInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "nodes {}", inst.num_nodes());
    for s in 0..inst.num_nodes() {
        let _ = writeln!(out, "labels {s} {}", inst.labels(s));
    }
    if inst.f0() != 0.0 {
        let _ = writeln!(out, "f0 {}", inst.f0());
    }
    for s in 0..inst.num_nodes() {
        for (i, &v) in inst.unary(s).iter().enumerate() {
            if v != 0.0 {
                let _ = writeln!(out, "unary {s} {i} {v}");
            }
        }
    }
    for &(s, t) in inst.edges() {
        let _ = writeln!(out, "edge {s} {t}");
    }
    for (e, &(s, t)) in inst.edges().iter().enumerate() {
        for i in 0..inst.labels(s) {
            for j in 0..inst.labels(t) {
                let v = inst.pair(e, i, j);
                if v != 0.0 {
                    let _ = writeln!(out, "pair {s} {t} {i} {j} {v}");
                }
            }
        }
    }
    out
}

pub fn parse_mapping(text: &str, inst: &EnergyInstance) -> Result<PixelwiseMapping> {
    let mut maps: Vec<Vec<usize>> = (0..inst.num_nodes()).map(|s| (0..inst.labels(s)).collect()).collect();
    for (line, parts) in fields(text) {
        if parts[0] != "map" {
            return Err(parse_err(line, format!("unknown keyword {:?}", parts[0])));
        }
        arity(line, &parts, 4)?;
        let (s, i, p): (usize, usize, usize) = (arg(line, &parts, 1)?, arg(line, &parts, 2)?, arg(line, &parts, 3)?);
        if s >= inst.num_nodes() || i >= inst.labels(s) || p >= inst.labels(s) {
            return Err(parse_err(line, format!("map {s} {i} {p} is out of range")));
        }
        maps[s][i] = p;
    }
    PixelwiseMapping::for_instance(inst, maps)
}

/// Non-identity entries only.
pub fn write_mapping(p: &PixelwiseMapping) -> String {
    let mut out = String::new();
    for s in 0..p.num_nodes() {
        for (i, &pi) in p.table(s).iter().enumerate() {
            if pi != i {
                let _ = writeln!(out, "map {s} {i} {pi}");
            }
        }
    }
    out
}

/// A labeling as whitespace-separated labels in node order.
pub fn parse_labeling(text: &str) -> Result<Labeling> {
    text.split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(1, format!("cannot parse label {t:?}"))))
        .collect::<Result<Vec<usize>>>()
        .map(Labeling)
}

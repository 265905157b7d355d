//! Random instances, exact oracles and benchmark rows.
//!
//! Costs are integer draws from `U{0, ..., 100}` (unary, full pairwise) and
//! `U{0, ..., 50}` (Potts strengths) using ChaCha8 seeded with
//! `seed_from_u64`. Unaries are drawn node by node, then pairwise tables edge
//! by edge in edge order, row-major within a table.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::certificate::{Method, Mode, PersistencyCertificate};
use crate::error::{invalid, Error, Result};
use crate::lp::{build_schlesinger_lp, Solver};
use crate::mapping::advance;
use crate::methods::{reverify, run_method, MethodConfig};
use crate::model::{EnergyInstance, Labeling};

/// Default limit on enumerated labelings and on DP table sizes.
pub const DEFAULT_CAP: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Potts,
    Full,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Potts => "potts",
            Family::Full => "full",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "potts" => Ok(Family::Potts),
            "full" => Ok(Family::Full),
            _ => invalid(format!("unknown family {s:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct GenSpec {
    pub seed: u64,
    pub height: usize,
    pub width: usize,
    pub labels: usize,
    /// 4 or 8.
    pub connectivity: u8,
    pub family: Family,
    /// One Potts strength per edge instead of one per edge and label.
    pub potts_per_edge: bool,
}

impl GenSpec {
    pub fn grid(seed: u64, height: usize, width: usize, labels: usize, family: Family) -> Self {
        GenSpec { seed, height, width, labels, connectivity: 4, family, potts_per_edge: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return invalid("grid dimensions must be positive");
        }
        if self.labels < 2 {
            return invalid("at least two labels are needed");
        }
        if self.connectivity != 4 && self.connectivity != 8 {
            return invalid("connectivity must be 4 or 8");
        }
        Ok(())
    }
}

/// Row-major grid graph with zero costs. Edges per node: right, down, and for
/// 8-connectivity also down-right and down-left.
pub fn grid_instance(height: usize, width: usize, labels: usize, connectivity: u8) -> Result<EnergyInstance> {
    let mut inst = EnergyInstance::new(vec![labels; height * width])?;
    let id = |r: usize, c: usize| r * width + c;
    for r in 0..height {
        for c in 0..width {
            if c + 1 < width {
                inst.add_edge(id(r, c), id(r, c + 1))?;
            }
            if r + 1 < height {
                inst.add_edge(id(r, c), id(r + 1, c))?;
                if connectivity == 8 {
                    if c + 1 < width {
                        inst.add_edge(id(r, c), id(r + 1, c + 1))?;
                    }
                    if c > 0 {
                        inst.add_edge(id(r, c), id(r + 1, c - 1))?;
                    }
                }
            }
        }
    }
    Ok(inst)
}

pub fn generate(spec: &GenSpec) -> Result<EnergyInstance> {
    spec.validate()?;
    let mut inst = grid_instance(spec.height, spec.width, spec.labels, spec.connectivity)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for s in 0..inst.num_nodes() {
        for v in inst.unary_mut(s) {
            *v = rng.gen_range(0..=100u32) as f64;
        }
    }
    let k = spec.labels;
    for e in 0..inst.num_edges() {
        let table = inst.pair_table_mut(e);
        match spec.family {
            Family::Full => {
                for v in table.iter_mut() {
                    *v = rng.gen_range(0..=100u32) as f64;
                }
            }
            Family::Potts if spec.potts_per_edge => {
                let gamma = rng.gen_range(0..=50u32) as f64;
                for i in 0..k {
                    table[i * k + i] = -gamma;
                }
            }
            Family::Potts => {
                for i in 0..k {
                    table[i * k + i] = -(rng.gen_range(0..=50u32) as f64);
                }
            }
        }
    }
    Ok(inst)
}

/// Minimum energy and every labeling attaining it.
#[derive(Clone, Debug, PartialEq)]
pub struct BruteForce {
    pub value: f64,
    pub argmin: Vec<Labeling>,
}

fn tie_tol(v: f64) -> f64 {
    1e-9 * (1.0 + v.abs())
}

pub fn brute_force_minimize(inst: &EnergyInstance, cap: u64) -> Result<BruteForce> {
    let states = inst.state_count();
    if states > cap as f64 {
        return Err(Error::CapExceeded { states, cap });
    }
    let mut x = vec![0usize; inst.num_nodes()];
    let mut best = f64::INFINITY;
    let mut argmin: Vec<Labeling> = Vec::new();
    loop {
        let v = inst.eval(&x);
        if argmin.is_empty() || v < best - tie_tol(best) {
            best = v;
            argmin.clear();
        }
        if v <= best + tie_tol(best) {
            argmin.push(Labeling(x.clone()));
        }
        if !advance(&mut x, inst.label_counts()) {
            break;
        }
    }
    argmin.retain(|x| inst.eval(&x.0) <= best + tie_tol(best));
    Ok(BruteForce { value: best, argmin })
}

/// Minimum energy over labelings using only `alive` labels and no `excluded`
/// pair, by dynamic programming over the node order; `None` when no labeling
/// qualifies. Table sizes are limited by `cap`.
pub fn dp_minimize(
    inst: &EnergyInstance,
    alive: Option<&[Vec<bool>]>,
    excluded: Option<&[Vec<bool>]>,
    cap: u64,
) -> Result<Option<f64>> {
    let [a, b] = dp_split(inst, alive, excluded, None, cap)?;
    let v = a.min(b);
    Ok((v < f64::INFINITY).then_some(v))
}

/// Like [`dp_minimize`], split by use of `marked` labels: the minimum over
/// labelings using none of them and the minimum over those using at least one.
pub fn dp_split(
    inst: &EnergyInstance,
    alive: Option<&[Vec<bool>]>,
    excluded: Option<&[Vec<bool>]>,
    marked: Option<&[Vec<bool>]>,
    cap: u64,
) -> Result<[f64; 2]> {
    let n = inst.num_nodes();
    let last: Vec<usize> = (0..n).map(|u| inst.neighbors(u).iter().map(|&(t, _)| t).fold(u, usize::max)).collect();
    let mut active: Vec<usize> = Vec::new();
    let mut table = vec![[inst.f0(), f64::INFINITY]];
    for v in 0..n {
        let kv = inst.labels(v);
        let work = table.len() as u64 * kv as u64;
        if work > cap {
            return Err(Error::CapExceeded { states: work as f64, cap });
        }
        // Pair costs to earlier neighbors as `[x_u * kv + l]`, infinite where excluded.
        let earlier: Vec<(usize, Vec<f64>)> = inst
            .neighbors(v)
            .iter()
            .filter(|&&(t, _)| t < v)
            .map(|&(u, e)| {
                let pos = active.iter().position(|&a| a == u).expect("earlier neighbor is active");
                let (s, t) = inst.edges()[e];
                let mut tab = Vec::with_capacity(inst.labels(u) * kv);
                for xu in 0..inst.labels(u) {
                    for l in 0..kv {
                        let (i, j) = if s == u { (xu, l) } else { (l, xu) };
                        let banned = excluded.is_some_and(|x| x[e][i * inst.labels(t) + j]);
                        tab.push(if banned { f64::INFINITY } else { inst.pair(e, i, j) });
                    }
                }
                (pos, tab)
            })
            .collect();
        let labels: Vec<usize> = (0..kv).filter(|&l| alive.map_or(true, |a| a[v][l])).collect();
        let unary = inst.unary(v);
        let radices: Vec<usize> = active.iter().map(|&a| inst.labels(a)).collect();
        // Nodes with no neighbor after `v` are minimized out in this step.
        let kept: Vec<usize> = (0..active.len()).filter(|&p| last[active[p]] > v).collect();
        let keep_v = last[v] > v;
        let next_size = kept.iter().map(|&p| radices[p]).product::<usize>() * if keep_v { kv } else { 1 };
        let mut next = vec![[f64::INFINITY; 2]; next_size];
        let mut digits = vec![0usize; active.len()];
        for (idx, base) in table.iter().enumerate() {
            if idx > 0 {
                let mut p = digits.len();
                while p > 0 {
                    p -= 1;
                    digits[p] += 1;
                    if digits[p] < radices[p] {
                        break;
                    }
                    digits[p] = 0;
                }
            }
            if base[0] == f64::INFINITY && base[1] == f64::INFINITY {
                continue;
            }
            let partial = kept.iter().fold(0, |acc, &p| acc * radices[p] + digits[p]);
            for &l in &labels {
                let c = earlier.iter().fold(unary[l], |c, (pos, tab)| c + tab[digits[*pos] * kv + l]);
                let cell = &mut next[if keep_v { partial * kv + l } else { partial }];
                if marked.is_some_and(|m| m[v][l]) {
                    cell[1] = cell[1].min(base[0] + c).min(base[1] + c);
                } else {
                    cell[0] = cell[0].min(base[0] + c);
                    cell[1] = cell[1].min(base[1] + c);
                }
            }
        }
        active = kept.iter().map(|&p| active[p]).collect();
        if keep_v {
            active.push(v);
        }
        table = next;
    }
    Ok(table.iter().fold([f64::INFINITY; 2], |m, c| [m[0].min(c[0]), m[1].min(c[1])]))
}

/// Exact minimum energy, by enumeration under the cap and DP otherwise.
pub fn min_energy(inst: &EnergyInstance, cap: u64) -> Result<f64> {
    if inst.state_count() <= cap as f64 {
        return Ok(brute_force_minimize(inst, cap)?.value);
    }
    dp_minimize(inst, None, None, cap)?.ok_or_else(|| Error::Solver("no labeling".into()))
}

/// Brute-force minimum minus the optimum of the relaxation.
pub fn integrality_gap(inst: &EnergyInstance, solver: &Solver, cap: u64) -> Result<f64> {
    let lp = solver.solve(&build_schlesinger_lp(inst).lp)?.expect_optimal("relaxation")?;
    Ok(min_energy(inst, cap)? - lp.value)
}

/// Checks a certificate against exact minimization: for weak certificates some
/// optimum avoids every eliminated label (and, for DEE2, every excluded pair);
/// for strict ones every optimum does.
pub fn oracle_certify(inst: &EnergyInstance, cert: &PersistencyCertificate, cap: u64) -> Result<bool> {
    let alive = cert.alive();
    let excluded = (cert.method == Method::Dee2).then(|| excluded_table(inst, &cert.excluded_pairs));
    let in_range = |x: &Labeling| {
        (0..inst.num_nodes()).all(|s| alive[s][x[s]])
            && excluded.as_ref().map_or(true, |ex| {
                inst.edges().iter().enumerate().all(|(e, &(s, t))| !ex[e][x[s] * inst.labels(t) + x[t]])
            })
    };
    if inst.state_count() <= cap as f64 {
        let bf = brute_force_minimize(inst, cap)?;
        return Ok(match cert.mode {
            Mode::Weak => bf.argmin.iter().any(in_range),
            Mode::Strict => bf.argmin.iter().all(|x| (0..inst.num_nodes()).all(|s| alive[s][x[s]])),
        });
    }
    let best = dp_minimize(inst, None, None, cap)?.ok_or_else(|| Error::Solver("no labeling".into()))?;
    match cert.mode {
        Mode::Weak => {
            let r = dp_minimize(inst, Some(&alive), excluded.as_deref(), cap)?;
            Ok(r.is_some_and(|v| v <= best + tie_tol(best)))
        }
        Mode::Strict => {
            let dead: Vec<Vec<bool>> = alive.iter().map(|a| a.iter().map(|&b| !b).collect()).collect();
            let [_, touching] = dp_split(inst, None, None, Some(&dead), cap)?;
            Ok(touching > best + tie_tol(best))
        }
    }
}

fn excluded_table(inst: &EnergyInstance, pairs: &[(usize, usize, usize, usize)]) -> Vec<Vec<bool>> {
    let mut ex: Vec<Vec<bool>> =
        inst.edges().iter().map(|&(s, t)| vec![false; inst.labels(s) * inst.labels(t)]).collect();
    for &(s, t, i, j) in pairs {
        if let Some(e) = inst.edge_index(s, t) {
            ex[e][i * inst.labels(t) + j] = true;
        }
    }
    ex
}

/// Seeds from `start` upwards whose instances have a gap above `0.5`, with the gaps.
pub fn gapped_seeds(
    template: &GenSpec,
    start: u64,
    count: usize,
    solver: &Solver,
    cap: u64,
) -> Result<Vec<(u64, f64)>> {
    let mut out = Vec::with_capacity(count);
    let mut seed = start;
    let limit = start + 100 * count as u64 + 1000;
    while out.len() < count {
        if seed >= limit {
            return Err(Error::Solver(format!("only {} gapped instances among seeds {start}..{limit}", out.len())));
        }
        let inst = generate(&GenSpec { seed, ..template.clone() })?;
        let gap = integrality_gap(&inst, solver, cap)?;
        if gap > 0.5 {
            out.push((seed, gap));
        }
        seed += 1;
    }
    Ok(out)
}

/// One line of the benchmark table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub seed: u64,
    pub family: Family,
    #[serde(rename = "K")]
    pub k: usize,
    pub conn: u8,
    pub method: String,
    pub mode: String,
    pub completeness: String,
    pub gap: String,
    pub wall_ms: String,
    pub certified: bool,
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub template: GenSpec,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub method_config: MethodConfig,
    /// Keep only instances whose gap exceeds `0.5`.
    pub gap_filter: bool,
    pub cap: u64,
    /// Fill the wall-clock column; off keeps output reproducible.
    pub timing: bool,
}

fn bench_seed(cfg: &BenchConfig, seed: u64, solver: &Solver) -> Result<Vec<BenchRow>> {
    let spec = GenSpec { seed, ..cfg.template.clone() };
    let inst = generate(&spec)?;
    let gap = integrality_gap(&inst, solver, cfg.cap).ok();
    if cfg.gap_filter && !gap.is_some_and(|g| g > 0.5) {
        return Ok(Vec::new());
    }
    let mut rows = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let t0 = Instant::now();
        let run = run_method(&inst, method, &cfg.method_config, solver)?;
        let wall = t0.elapsed().as_secs_f64() * 1e3;
        let cert = &run.certificate;
        let relaxed = reverify(&inst, cert, solver)?.improving;
        let oracle = match oracle_certify(&inst, cert, cfg.cap) {
            Ok(v) => v,
            Err(Error::CapExceeded { .. }) => true,
            Err(e) => return Err(e),
        };
        rows.push(BenchRow {
            seed,
            family: spec.family,
            k: spec.labels,
            conn: spec.connectivity,
            method: method.tag().to_string(),
            mode: cert.mode.to_string(),
            completeness: format!("{:.4}", cert.completeness),
            gap: gap.map_or(String::new(), |g| format!("{:.4}", g.max(0.0))),
            wall_ms: if cfg.timing { format!("{wall:.1}") } else { String::new() },
            certified: relaxed && oracle,
        });
    }
    rows.sort_by(|a, b| a.method.cmp(&b.method));
    Ok(rows)
}

/// Runs every method on every seed; rows are ordered by seed, then method tag.
pub fn bench(cfg: &BenchConfig, solver: &Solver) -> Result<Vec<BenchRow>> {
    let mut seeds = cfg.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    let per_seed: Vec<Result<Vec<BenchRow>>> = seeds.par_iter().map(|&s| bench_seed(cfg, s, solver)).collect();
    let mut rows = Vec::new();
    for r in per_seed {
        rows.extend(r?);
    }
    Ok(rows)
}

pub fn write_bench_csv<W: std::io::Write>(rows: &[BenchRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    out.flush()?;
    Ok(())
}

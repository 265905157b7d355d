//! Pixel-wise idempotent mappings, their linear extensions and the
//! relaxed-improving check.

use serde::Serialize;

use crate::certificate::{Method, Mode, PersistencyCertificate};
use crate::error::{invalid, Error, Result};
use crate::lp::{local_polytope_lp, solve_local, LinearProgram, LpStatus, Restriction, Sense, Solver};
use crate::model::{reparametrize, EnergyInstance, Labeling, RelaxedLabeling, Reparametrization};

/// Per-node label maps `p_s`, each idempotent.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PixelwiseMapping {
    maps: Vec<Vec<usize>>,
}

impl PixelwiseMapping {
    /// Validates range and idempotency; non-idempotent tables are rejected.
    pub fn new(maps: Vec<Vec<usize>>) -> Result<Self> {
        for (s, m) in maps.iter().enumerate() {
            for (i, &pi) in m.iter().enumerate() {
                if pi >= m.len() {
                    return invalid(format!("p_{s}({i}) = {pi} is out of range"));
                }
                if m[pi] != pi {
                    return invalid(format!("p_{s} is not idempotent at label {i}"));
                }
            }
        }
        Ok(PixelwiseMapping { maps })
    }

    /// Like [`PixelwiseMapping::new`] and checks the label counts of `inst`.
    pub fn for_instance(inst: &EnergyInstance, maps: Vec<Vec<usize>>) -> Result<Self> {
        let p = Self::new(maps)?;
        p.check_shape(inst)?;
        Ok(p)
    }

    pub fn identity(inst: &EnergyInstance) -> Self {
        PixelwiseMapping { maps: (0..inst.num_nodes()).map(|s| (0..inst.labels(s)).collect()).collect() }
    }

    /// Subset-to-one map: `p_s(i) = y_s` where `moved[s][i]`, identity elsewhere.
    pub fn subset_to_one(y: &Labeling, moved: &[Vec<bool>]) -> Result<Self> {
        let maps = moved
            .iter()
            .enumerate()
            .map(|(s, m)| (0..m.len()).map(|i| if m[i] && i != y[s] { y[s] } else { i }).collect())
            .collect();
        Self::new(maps)
    }

    pub fn check_shape(&self, inst: &EnergyInstance) -> Result<()> {
        let ok =
            self.maps.len() == inst.num_nodes() && self.maps.iter().enumerate().all(|(s, m)| m.len() == inst.labels(s));
        if ok {
            Ok(())
        } else {
            invalid("mapping shape does not match the instance")
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.maps.len()
    }

    #[inline]
    pub fn get(&self, s: usize, i: usize) -> usize {
        self.maps[s][i]
    }

    pub fn table(&self, s: usize) -> &[usize] {
        &self.maps[s]
    }

    pub fn moved(&self, s: usize, i: usize) -> bool {
        self.maps[s][i] != i
    }

    /// Pairs `(s, i)` with `p_s(i) != i`, in node then label order.
    pub fn eliminated(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (s, m) in self.maps.iter().enumerate() {
            for (i, &pi) in m.iter().enumerate() {
                if pi != i {
                    out.push((s, i));
                }
            }
        }
        out
    }

    pub fn num_eliminated(&self) -> usize {
        self.maps.iter().map(|m| m.iter().enumerate().filter(|&(i, &pi)| pi != i).count()).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.num_eliminated() == 0
    }

    /// Labels fixed by the map, i.e. the image.
    pub fn alive(&self) -> Vec<Vec<bool>> {
        self.maps.iter().map(|m| m.iter().enumerate().map(|(i, &pi)| pi == i).collect()).collect()
    }

    pub fn apply(&self, x: &Labeling) -> Labeling {
        Labeling(x.0.iter().enumerate().map(|(s, &xs)| self.maps[s][xs]).collect())
    }
}

pub fn apply_mapping(p: &PixelwiseMapping, x: &Labeling) -> Labeling {
    p.apply(x)
}

/// `[p] mu`: node marginals are pushed forward along `p_s`, edge marginals along `p_s x p_t`.
pub fn linear_extension_apply(inst: &EnergyInstance, p: &PixelwiseMapping, mu: &RelaxedLabeling) -> RelaxedLabeling {
    let mut out = RelaxedLabeling::zeros(inst);
    out.mu0 = mu.mu0;
    for s in 0..inst.num_nodes() {
        for i in 0..inst.labels(s) {
            out.node[s][p.get(s, i)] += mu.node[s][i];
        }
    }
    for (e, &(s, t)) in inst.edges().iter().enumerate() {
        let kt = inst.labels(t);
        for i in 0..inst.labels(s) {
            let pi = p.get(s, i);
            for j in 0..kt {
                out.edge[e][pi * kt + p.get(t, j)] += mu.edge[e][i * kt + j];
            }
        }
    }
    out
}

/// `(I - [p]^T) f`, so that `<g, mu> = <f, mu> - <f, [p] mu>`.
pub fn improvement_costs(inst: &EnergyInstance, p: &PixelwiseMapping) -> EnergyInstance {
    let mut g = inst.zeros_like();
    for s in 0..inst.num_nodes() {
        let u = inst.unary(s);
        for (i, v) in g.unary_mut(s).iter_mut().enumerate() {
            *v = u[i] - u[p.get(s, i)];
        }
    }
    for (e, &(s, t)) in inst.edges().iter().enumerate() {
        let kt = inst.labels(t);
        for i in 0..inst.labels(s) {
            for j in 0..kt {
                g.pair_table_mut(e)[i * kt + j] = inst.pair(e, i, j) - inst.pair(e, p.get(s, i), p.get(t, j));
            }
        }
    }
    g
}

/// Result of the verification program.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub value: f64,
    pub improving: bool,
    pub mode: Mode,
    /// LP minimizer when the check fails.
    #[serde(skip)]
    pub witness: Option<RelaxedLabeling>,
    /// The margin `eps` certified in strict mode.
    pub strict_margin: Option<f64>,
    /// Whether the program was restricted by excluded pairs.
    pub restricted: bool,
}

/// Default strict margin: `1e-4` times the largest cost magnitude.
pub fn default_eps(inst: &EnergyInstance) -> f64 {
    let m = inst.max_abs_cost();
    1e-4 * if m > 0.0 { m } else { 1.0 }
}

/// Checks `min_{mu in Lambda} <(I - [p]^T) f, mu> >= -tau` (weak), or the same
/// with `eps * h` subtracted, `h_s(i) = [[p_s(i) != i]]` (strict).
pub fn verify_improving(
    inst: &EnergyInstance,
    p: &PixelwiseMapping,
    mode: Mode,
    eps: Option<f64>,
    solver: &Solver,
) -> Result<VerificationReport> {
    verify_improving_on(inst, p, mode, eps, None, solver)
}

/// [`verify_improving`] over the local polytope with some coordinates forced to zero.
pub fn verify_improving_on(
    inst: &EnergyInstance,
    p: &PixelwiseMapping,
    mode: Mode,
    eps: Option<f64>,
    restriction: Option<&Restriction>,
    solver: &Solver,
) -> Result<VerificationReport> {
    p.check_shape(inst)?;
    let mut g = improvement_costs(inst, p);
    let margin = match mode {
        Mode::Weak => None,
        Mode::Strict => {
            let eps = eps.unwrap_or_else(|| default_eps(inst));
            if !(eps > 0.0) {
                return invalid("strict verification needs a positive margin");
            }
            for s in 0..inst.num_nodes() {
                for i in 0..inst.labels(s) {
                    if p.moved(s, i) {
                        g.unary_mut(s)[i] -= eps;
                    }
                }
            }
            Some(eps)
        }
    };
    let restriction = restriction.filter(|r| !r.is_empty());
    let (value, mu, _) = solve_local(&g, restriction, solver)?;
    let improving = value >= -solver.tol.verify;
    Ok(VerificationReport {
        value,
        improving,
        mode,
        witness: if improving { None } else { Some(mu) },
        strict_margin: margin,
        restricted: restriction.is_some(),
    })
}

/// Exhaustive check of `E(p(x)) <= E(x)` (weak) or `p(x) != x => E(p(x)) < E(x)` (strict).
pub fn verify_improving_bruteforce(inst: &EnergyInstance, p: &PixelwiseMapping, mode: Mode, cap: u64) -> Result<bool> {
    p.check_shape(inst)?;
    let states = inst.state_count();
    if states > cap as f64 {
        return Err(Error::CapExceeded { states, cap });
    }
    let n = inst.num_nodes();
    let mut x = vec![0usize; n];
    let mut px = vec![0usize; n];
    loop {
        for s in 0..n {
            px[s] = p.get(s, x[s]);
        }
        let (ex, epx) = (inst.eval(&x), inst.eval(&px));
        let tol = 1e-9 * (1.0 + ex.abs());
        let ok = match mode {
            Mode::Weak => epx <= ex + tol,
            Mode::Strict => px == x || epx < ex - tol,
        };
        if !ok {
            return Ok(false);
        }
        if !advance(&mut x, inst.label_counts()) {
            return Ok(true);
        }
    }
}

/// Mixed-radix increment; false after the last labeling.
pub(crate) fn advance(x: &mut [usize], k: &[usize]) -> bool {
    for s in (0..x.len()).rev() {
        x[s] += 1;
        if x[s] < k[s] {
            return true;
        }
        x[s] = 0;
    }
    false
}

/// Checks `f^phi_s(p_s(i)) <= f^phi_s(i)` and `f^phi_st(p_s(i), p_t(j)) <= f^phi_st(i, j)` within `tol`.
pub fn component_wise_sufficient(
    inst: &EnergyInstance,
    p: &PixelwiseMapping,
    phi: &Reparametrization,
    tol: f64,
) -> Result<bool> {
    p.check_shape(inst)?;
    let fp = reparametrize(inst, phi)?;
    for s in 0..inst.num_nodes() {
        let u = fp.unary(s);
        if (0..inst.labels(s)).any(|i| u[p.get(s, i)] > u[i] + tol) {
            return Ok(false);
        }
    }
    for (e, &(s, t)) in inst.edges().iter().enumerate() {
        for i in 0..inst.labels(s) {
            for j in 0..inst.labels(t) {
                if fp.pair(e, p.get(s, i), p.get(t, j)) > fp.pair(e, i, j) + tol {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Finds `phi` with `(I - [p]^T) f^phi >= 0` component-wise, or `None` if none exists.
///
/// This is the dual of the verification program over the cone
/// `{mu >= 0 : A (I - [p]) mu = 0}`, whose value is zero exactly when `p` is
/// relaxed-improving. The node offsets cancel and are returned as zero.
pub fn extract_componentwise_reparametrization(
    inst: &EnergyInstance,
    p: &PixelwiseMapping,
    solver: &Solver,
) -> Result<Option<Reparametrization>> {
    p.check_shape(inst)?;
    let mut lp = LinearProgram::new(Sense::Minimize);
    let free = (f64::NEG_INFINITY, f64::INFINITY);
    let msg: Vec<(Vec<usize>, Vec<usize>)> = inst
        .edges()
        .iter()
        .map(|&(s, t)| {
            let a = (0..inst.labels(s)).map(|i| lp.add_var(format!("phi_{s}_{t}_{i}"), free.0, free.1, 0.0)).collect();
            let b = (0..inst.labels(t)).map(|j| lp.add_var(format!("phi_{t}_{s}_{j}"), free.0, free.1, 0.0)).collect();
            (a, b)
        })
        .collect();
    let var = |e: usize, from: usize, i: usize| {
        if inst.edges()[e].0 == from {
            msg[e].0[i]
        } else {
            msg[e].1[i]
        }
    };
    for s in 0..inst.num_nodes() {
        for i in 0..inst.labels(s) {
            let pi = p.get(s, i);
            if pi == i {
                continue;
            }
            let mut c = Vec::new();
            for &(_, e) in inst.neighbors(s) {
                c.push((var(e, s, i), 1.0));
                c.push((var(e, s, pi), -1.0));
            }
            lp.add_ge(c, inst.unary(s)[pi] - inst.unary(s)[i]);
        }
    }
    for (e, &(s, t)) in inst.edges().iter().enumerate() {
        for i in 0..inst.labels(s) {
            for j in 0..inst.labels(t) {
                let (pi, pj) = (p.get(s, i), p.get(t, j));
                if (pi, pj) == (i, j) {
                    continue;
                }
                let mut c = vec![(msg[e].0[i], -1.0), (msg[e].1[j], -1.0)];
                c.push((msg[e].0[pi], 1.0));
                c.push((msg[e].1[pj], 1.0));
                let c = merge(c);
                let rhs = inst.pair(e, pi, pj) - inst.pair(e, i, j);
                if c.is_empty() {
                    if rhs > solver.tol.verify {
                        return Ok(None);
                    }
                    continue;
                }
                lp.add_ge(c, rhs);
            }
        }
    }
    let sol = solver.solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Ok(None);
    }
    let mut phi = Reparametrization::zeros(inst);
    for (e, (a, b)) in msg.iter().enumerate() {
        phi.messages[e].0 = a.iter().map(|&k| sol.primal[k]).collect();
        phi.messages[e].1 = b.iter().map(|&k| sol.primal[k]).collect();
    }
    Ok(Some(phi))
}

fn merge(mut c: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    c.sort_by_key(|&(k, _)| k);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(c.len());
    for (k, a) in c {
        match out.last_mut() {
            Some(last) if last.0 == k => last.1 += a,
            _ => out.push((k, a)),
        }
    }
    out.retain(|&(_, a)| a != 0.0);
    out
}

/// `p2 o p1` closed to an idempotent map by following each label to its fixpoint.
pub fn compose(p1: &PixelwiseMapping, p2: &PixelwiseMapping) -> Result<PixelwiseMapping> {
    if p1.maps.len() != p2.maps.len() || p1.maps.iter().zip(&p2.maps).any(|(a, b)| a.len() != b.len()) {
        return invalid("composed mappings have different shapes");
    }
    let mut maps = Vec::with_capacity(p1.maps.len());
    for (s, (a, b)) in p1.maps.iter().zip(&p2.maps).enumerate() {
        let q: Vec<usize> = a.iter().map(|&i| b[i]).collect();
        let mut closed = Vec::with_capacity(q.len());
        for i in 0..q.len() {
            let mut cur = i;
            let mut steps = 0;
            while q[cur] != cur {
                cur = q[cur];
                steps += 1;
                if steps > q.len() {
                    return invalid(format!("composition cycles at node {s}, label {i}"));
                }
            }
            closed.push(cur);
        }
        maps.push(closed);
    }
    PixelwiseMapping::new(maps)
}

/// Turns a verified mapping into a certificate; unverified mappings are refused.
pub fn eliminate(
    inst: &EnergyInstance,
    p: &PixelwiseMapping,
    report: &VerificationReport,
    method: Method,
) -> Result<PersistencyCertificate> {
    p.check_shape(inst)?;
    if !report.improving {
        return Err(Error::Refused(format!("mapping failed verification with value {:e}", report.value)));
    }
    Ok(PersistencyCertificate::new(inst, method, report.mode, p.clone(), report.clone()))
}

/// Relaxed program of the verification check, exposed for export.
pub fn verification_lp(inst: &EnergyInstance, p: &PixelwiseMapping) -> LinearProgram {
    local_polytope_lp(&improvement_costs(inst, p), None).lp
}

//! Maximum persistency for subset-to-one mappings.
//!
//! For a test labeling `y`, the map `p_xi` sends label `i` of node `s` to `y_s`
//! exactly when `xi_si = 1`. After zero-top normalization the pair indicators
//! `xi_stij` can be optimized out, which leaves a program in `xi` and the
//! dual messages `phi` only. Its optimum is integral.

use serde::Serialize;

use crate::certificate::{Method, Mode, PersistencyCertificate};
use crate::error::{Error, Result};
use crate::lp::{
    build_schlesinger_lp, local_polytope_lp, relative_interior_optimum, LinearProgram, OptimalFacetPoint, Sense, Solver,
};
use crate::mapping::{default_eps, eliminate, improvement_costs, verify_improving, PixelwiseMapping};
use crate::model::{zero_top_normalize, EnergyInstance, Labeling, RelaxedLabeling};

/// Node indicators `xi_si` for a test labeling.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct XiVector {
    pub y: Vec<usize>,
    /// Raw values reported by the solver.
    pub values: Vec<Vec<f64>>,
    /// `values` rounded to the nearest integer.
    pub moved: Vec<Vec<bool>>,
}

impl XiVector {
    pub fn num_moved(&self) -> usize {
        self.moved.iter().flatten().filter(|&&b| b).count()
    }
}

/// The reduced program together with its variable layout.
#[derive(Clone, Debug)]
pub struct L1Program {
    pub lp: LinearProgram,
    /// `xi_vars[s][i]` is `None` for `i = y_s` and for nodes outside the window.
    pub xi_vars: Vec<Vec<Option<usize>>>,
}

/// Builds the reduced program for `y`. Costs are normalized internally; with
/// `eps`, every `f_s(y_s)` is raised by `eps` first. With `window`, indicators
/// outside the window are fixed to zero.
pub fn l1_program(inst: &EnergyInstance, y: &Labeling, eps: Option<f64>, window: Option<&[bool]>) -> Result<L1Program> {
    inst.check_labeling(&y.0)?;
    let mut shifted = inst.clone();
    if let Some(eps) = eps {
        for s in 0..inst.num_nodes() {
            shifted.unary_mut(s)[y[s]] += eps;
        }
    }
    let f = zero_top_normalize(&shifted, y)?;
    let n = f.num_nodes();
    let mut lp = LinearProgram::new(Sense::Maximize);
    let xi_vars: Vec<Vec<Option<usize>>> = (0..n)
        .map(|s| {
            let inside = window.map_or(true, |w| w[s]);
            (0..f.labels(s))
                .map(|i| (inside && i != y[s]).then(|| lp.add_var(format!("xi_{s}_{i}"), 0.0, 1.0, 1.0)))
                .collect()
        })
        .collect();
    let free = f64::INFINITY;
    let msgs: Vec<(Vec<usize>, Vec<usize>)> = f
        .edges()
        .iter()
        .map(|&(s, t)| {
            let a = (0..f.labels(s)).map(|i| lp.add_var(format!("phi_{s}_{t}_{i}"), -free, free, 0.0)).collect();
            let b = (0..f.labels(t)).map(|j| lp.add_var(format!("phi_{t}_{s}_{j}"), -free, free, 0.0)).collect();
            (a, b)
        })
        .collect();
    let offsets: Vec<usize> = (0..n).map(|s| lp.add_var(format!("phi_{s}"), -free, free, 0.0)).collect();

    for s in 0..n {
        for i in 0..f.labels(s) {
            let mut c = Vec::new();
            if let Some(x) = xi_vars[s][i] {
                let fs = f.unary(s)[i];
                if fs != 0.0 {
                    c.push((x, fs));
                }
            }
            for &(_, e) in f.neighbors(s) {
                let m = if f.edges()[e].0 == s { msgs[e].0[i] } else { msgs[e].1[i] };
                c.push((m, 1.0));
            }
            c.push((offsets[s], -1.0));
            lp.add_ge(c, 0.0);
        }
    }
    for (e, &(s, t)) in f.edges().iter().enumerate() {
        for i in 0..f.labels(s) {
            for j in 0..f.labels(t) {
                let v = f.pair(e, i, j);
                let phi = [(msgs[e].0[i], -1.0), (msgs[e].1[j], -1.0)];
                let (xs, xt) = (xi_vars[s][i], xi_vars[t][j]);
                if v <= 0.0 {
                    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(2);
                    for x in [xs, xt] {
                        let mut c = phi.to_vec();
                        if let (Some(x), true) = (x, v != 0.0) {
                            c.push((x, v));
                        }
                        if !rows.contains(&c) {
                            rows.push(c);
                        }
                    }
                    for c in rows {
                        lp.add_ge(c, 0.0);
                    }
                } else {
                    lp.add_ge(phi.to_vec(), -v);
                    let mut c = phi.to_vec();
                    c.extend(xs.map(|x| (x, v)));
                    c.extend(xt.map(|x| (x, v)));
                    lp.add_ge(c, 0.0);
                }
            }
        }
    }
    lp.add_ge(offsets.iter().map(|&k| (k, 1.0)).collect(), 0.0);
    Ok(L1Program { lp, xi_vars })
}

/// Outcome of the reduced program.
#[derive(Clone, Debug)]
pub struct L1Outcome {
    pub xi: XiVector,
    pub certificate: PersistencyCertificate,
    pub lp_value: f64,
}

/// Solves the reduced program and rounds `xi`; fails when an indicator is not
/// within `tol.int` of `{0, 1}` or the rounded point violates a constraint.
pub(crate) fn solve_xi(
    inst: &EnergyInstance,
    y: &Labeling,
    eps: Option<f64>,
    window: Option<&[bool]>,
    solver: &Solver,
) -> Result<(XiVector, f64)> {
    let prog = l1_program(inst, y, eps, window)?;
    let sol = solver.solve(&prog.lp)?.expect_optimal("maximum persistency program")?;
    let mut x = sol.primal.clone();
    let mut values = Vec::with_capacity(inst.num_nodes());
    let mut moved = Vec::with_capacity(inst.num_nodes());
    for (s, vars) in prog.xi_vars.iter().enumerate() {
        let mut vs = Vec::with_capacity(vars.len());
        let mut ms = Vec::with_capacity(vars.len());
        for (i, var) in vars.iter().enumerate() {
            let v = var.map_or(0.0, |k| sol.primal[k]);
            let r = v.round();
            if (v - r).abs() > solver.tol.int || !(r == 0.0 || r == 1.0) {
                return Err(Error::NonIntegral { node: s, label: i, value: v });
            }
            if let Some(k) = *var {
                x[k] = r;
            }
            vs.push(v);
            ms.push(r == 1.0);
        }
        values.push(vs);
        moved.push(ms);
    }
    let viol = prog.lp.max_violation(&x);
    if viol > 1e-6 * (1.0 + inst.max_abs_cost()) {
        return Err(Error::Solver(format!("rounded indicator point violates the program by {viol:e}")));
    }
    Ok((XiVector { y: y.0.clone(), values, moved }, sol.value))
}

fn certify_xi(
    inst: &EnergyInstance,
    xi: XiVector,
    lp_value: f64,
    eps: Option<f64>,
    method: Method,
    solver: &Solver,
) -> Result<L1Outcome> {
    let y = Labeling(xi.y.clone());
    let p = PixelwiseMapping::subset_to_one(&y, &xi.moved)?;
    let mode = if eps.is_some() { Mode::Strict } else { Mode::Weak };
    let report = verify_improving(inst, &p, mode, eps, solver)?;
    if !report.improving {
        return Err(Error::Verification(format!(
            "{method} mapping failed re-verification with value {:e}",
            report.value
        )));
    }
    let mut certificate = eliminate(inst, &p, &report, method)?;
    certificate.y = Some(xi.y.clone());
    Ok(L1Outcome { xi, certificate, lp_value })
}

/// Maximum weak persistency for subset-to-one maps onto `y`.
pub fn solve_l1(inst: &EnergyInstance, y: &Labeling, solver: &Solver) -> Result<L1Outcome> {
    let (xi, v) = solve_xi(inst, y, None, None, solver)?;
    certify_xi(inst, xi, v, None, Method::L1, solver)
}

/// Maximum strict persistency: [`solve_l1`] with every `f_s(y_s)` raised by `eps`.
pub fn solve_eps_l1(inst: &EnergyInstance, y: &Labeling, eps: f64, solver: &Solver) -> Result<L1Outcome> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    let (xi, v) = solve_xi(inst, y, Some(eps), None, solver)?;
    certify_xi(inst, xi, v, Some(eps), Method::EpsL1, solver)
}

/// Test labeling from a maximum-support optimum of the relaxation: the integral
/// label where `mu_s` is integral, else the lowest index attaining `max_i mu_s(i)`.
pub fn select_y(facet: &OptimalFacetPoint, tol: f64) -> Labeling {
    Labeling(
        facet
            .mu
            .node
            .iter()
            .map(|m| {
                let best = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                m.iter().position(|&v| v >= best - tol).unwrap_or(0)
            })
            .collect(),
    )
}

/// Solves the relaxation and returns its maximum-support optimum.
pub fn schlesinger_facet(inst: &EnergyInstance, solver: &Solver) -> Result<OptimalFacetPoint> {
    relative_interior_optimum(&build_schlesinger_lp(inst), solver)
}

/// Strict persistency with the test labeling read off the relaxation.
pub fn max_strong_all_to_one_unknown(inst: &EnergyInstance, eps: Option<f64>, solver: &Solver) -> Result<L1Outcome> {
    let facet = schlesinger_facet(inst, solver)?;
    let y = select_y(&facet, solver.tol.supp);
    let eps = eps.unwrap_or_else(|| default_eps(inst));
    let (xi, v) = solve_xi(inst, &y, Some(eps), None, solver)?;
    certify_xi(inst, xi, v, Some(eps), Method::AllToOneUnknown, solver)
}

#[derive(Clone, Debug)]
pub struct MaxImproveOutcome {
    pub certificate: PersistencyCertificate,
    pub iterations: usize,
    pub moved: Vec<Vec<bool>>,
}

/// `mu_st(i, j)` support seen from `s` along edge `e`.
fn edge_support(inst: &EnergyInstance, facet: &OptimalFacetPoint, e: usize, s: usize, i: usize, j: usize) -> bool {
    let (a, b) = inst.edges()[e];
    if a == s {
        facet.edge_support[e][i * inst.labels(b) + j]
    } else {
        facet.edge_support[e][j * inst.labels(b) + i]
    }
}

/// Prunes `xi` against a maximum-support point of the facet problem; returns
/// whether anything changed.
fn prune(inst: &EnergyInstance, y: &Labeling, xi: &mut [Vec<bool>], facet: &OptimalFacetPoint) -> bool {
    let mut changed = false;
    for s in 0..inst.num_nodes() {
        let os = &facet.node_support[s];
        if !os[y[s]] {
            for i in 0..inst.labels(s) {
                if xi[s][i] && os[i] {
                    xi[s][i] = false;
                    changed = true;
                }
            }
        }
        for &(t, e) in inst.neighbors(s) {
            for i in 0..inst.labels(s) {
                if !xi[s][i] {
                    continue;
                }
                for j in 0..inst.labels(t) {
                    if !edge_support(inst, facet, e, s, i, j) {
                        continue;
                    }
                    let drop = if xi[t][j] {
                        !edge_support(inst, facet, e, s, y[s], y[t])
                    } else {
                        !edge_support(inst, facet, e, s, y[s], j)
                    };
                    if drop {
                        xi[s][i] = false;
                        changed = true;
                        break;
                    }
                }
            }
        }
    }
    changed
}

/// Shrinks the all-to-`y` map until the relaxed-improving check passes.
pub fn max_improve(inst: &EnergyInstance, y: &Labeling, solver: &Solver) -> Result<MaxImproveOutcome> {
    inst.check_labeling(&y.0)?;
    let mut xi: Vec<Vec<bool>> =
        (0..inst.num_nodes()).map(|s| (0..inst.labels(s)).map(|i| i != y[s]).collect()).collect();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let p = PixelwiseMapping::subset_to_one(y, &xi)?;
        let local = local_polytope_lp(&improvement_costs(inst, &p), None);
        let sol = solver.solve(&local.lp)?.expect_optimal("facet problem")?;
        if sol.value >= -solver.tol.verify {
            let report = verify_improving(inst, &p, Mode::Weak, None, solver)?;
            if !report.improving {
                return Err(Error::Verification("MaxImprove mapping failed re-verification".into()));
            }
            let mut certificate = eliminate(inst, &p, &report, Method::MaxImprove)?;
            certificate.y = Some(y.0.clone());
            return Ok(MaxImproveOutcome { certificate, iterations, moved: xi });
        }
        let facet = relative_interior_optimum(&local, solver)?;
        if !prune(inst, y, &mut xi, &facet) {
            return Err(Error::Solver(format!("MaxImprove made no progress with facet value {:e}", sol.value)));
        }
    }
}

/// Keeps the candidates compatible with the supports `O_s` of a maximum-support
/// optimum: `p_s(O_s)` inside `O_s` (weak) or `p_s` fixing `O_s` (strict).
pub fn necessary_condition_filter<'a>(
    facet: &OptimalFacetPoint,
    candidates: &'a [PixelwiseMapping],
    mode: Mode,
) -> Vec<&'a PixelwiseMapping> {
    candidates.iter().filter(|p| passes_necessary(facet, p, mode)).collect()
}

pub fn passes_necessary(facet: &OptimalFacetPoint, p: &PixelwiseMapping, mode: Mode) -> bool {
    facet.node_support.iter().enumerate().all(|(s, os)| {
        (0..os.len()).filter(|&i| os[i]).all(|i| match mode {
            Mode::Weak => os[p.get(s, i)],
            Mode::Strict => p.get(s, i) == i,
        })
    })
}

/// Fractional indicators: node values `xi_si` plus one value `xi_stij` per
/// edge and label pair standing in for the product `xi_si * xi_tj`.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalXi {
    pub y: Labeling,
    pub node: Vec<Vec<f64>>,
    /// Row-major over the labels of `s` and `t`, like the pair tables.
    pub edge: Vec<Vec<f64>>,
}

impl FractionalXi {
    /// Pair values set to the product, which is always admissible.
    pub fn from_nodes(inst: &EnergyInstance, y: &Labeling, node: Vec<Vec<f64>>) -> Self {
        let edge = inst
            .edges()
            .iter()
            .map(|&(s, t)| {
                let kt = inst.labels(t);
                (0..inst.labels(s) * kt).map(|k| node[s][k / kt] * node[t][k % kt]).collect()
            })
            .collect();
        FractionalXi { y: y.clone(), node, edge }
    }

    /// Largest violation of the box, `xi_{s y_s} = 0` and the pair bounds
    /// `max(0, a + b - 1) <= xi_stij <= min(a, b)`.
    pub fn max_violation(&self, inst: &EnergyInstance) -> f64 {
        let mut worst: f64 = 0.0;
        for (s, row) in self.node.iter().enumerate() {
            worst = worst.max(row[self.y.0[s]].abs());
            for &v in row {
                worst = worst.max(-v).max(v - 1.0);
            }
        }
        for (e, &(s, t)) in inst.edges().iter().enumerate() {
            let kt = inst.labels(t);
            for (k, &v) in self.edge[e].iter().enumerate() {
                let (a, b) = (self.node[s][k / kt], self.node[t][k % kt]);
                worst = worst.max((a + b - 1.0).max(0.0) - v).max(v - a.min(b));
            }
        }
        worst
    }
}

/// `P_xi mu` for fractional `xi`. Node mass `xi_si' mu_s(i')` moves to `y_s`;
/// edge mass of `(i', j')` is split over `(y_s, y_t)`, `(i', y_t)`, `(y_s, j')`
/// and `(i', j')`. For integral `xi` this equals the linear extension of `p_xi`.
pub fn apply_fractional_xi(inst: &EnergyInstance, xi: &FractionalXi, mu: &RelaxedLabeling) -> RelaxedLabeling {
    let y = &xi.y.0;
    let mut out = RelaxedLabeling::zeros(inst);
    out.mu0 = mu.mu0;
    for s in 0..inst.num_nodes() {
        for (i, &m) in mu.node[s].iter().enumerate() {
            let x = xi.node[s][i];
            out.node[s][y[s]] += x * m;
            out.node[s][i] += (1.0 - x) * m;
        }
    }
    for (e, &(s, t)) in inst.edges().iter().enumerate() {
        let kt = inst.labels(t);
        let (ys, yt) = (y[s], y[t]);
        let dst = &mut out.edge[e];
        for (k, &m) in mu.edge[e].iter().enumerate() {
            let (i, j) = (k / kt, k % kt);
            let (a, b, c) = (xi.node[s][i], xi.node[t][j], xi.edge[e][k]);
            dst[ys * kt + yt] += c * m;
            dst[i * kt + yt] += (b - c) * m;
            dst[ys * kt + j] += (a - c) * m;
            dst[k] += (1.0 - a - b + c) * m;
        }
    }
    out
}

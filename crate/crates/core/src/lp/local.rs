//! Programs over the local polytope.

use super::{relative_interior, LinearProgram, LpSolution, Sense, Solver};
use crate::error::{invalid, Result};
use crate::model::{EnergyInstance, RelaxedLabeling, Reparametrization};

/// Coordinates forced to zero: dead labels and excluded label pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Restriction {
    /// `dead[s][i]` removes label `i` of node `s`.
    pub dead: Vec<Vec<bool>>,
    /// Per canonical edge, row-major like the cost tables.
    pub excluded: Vec<Vec<bool>>,
}

impl Restriction {
    pub fn none(inst: &EnergyInstance) -> Self {
        Restriction {
            dead: (0..inst.num_nodes()).map(|s| vec![false; inst.labels(s)]).collect(),
            excluded: inst.edges().iter().map(|&(s, t)| vec![false; inst.labels(s) * inst.labels(t)]).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.dead.iter().flatten().chain(self.excluded.iter().flatten()).all(|&b| !b)
    }
}

/// A local polytope program `min <g, mu>` with its variable and row layout.
#[derive(Clone, Debug)]
pub struct LocalLp {
    pub lp: LinearProgram,
    pub node_vars: Vec<Vec<usize>>,
    pub edge_vars: Vec<Vec<usize>>,
    pub mu0_var: usize,
    /// Per edge: marginalization rows for each label of `s`, then of `t`.
    marg_rows: Vec<(Vec<usize>, Vec<usize>)>,
    norm_rows: Vec<usize>,
    shape: EnergyInstance,
}

/// Schlesinger's relaxation `min <f, mu>` over the local polytope.
pub fn build_schlesinger_lp(inst: &EnergyInstance) -> LocalLp {
    local_polytope_lp(inst, None)
}

/// `min <g, mu>` over the local polytope of `g`'s graph, optionally restricted.
pub fn local_polytope_lp(g: &EnergyInstance, restriction: Option<&Restriction>) -> LocalLp {
    let mut lp = LinearProgram::new(Sense::Minimize);
    let n = g.num_nodes();
    let mu0_var = lp.add_var("mu0", 0.0, f64::INFINITY, g.f0());
    let mut node_vars = Vec::with_capacity(n);
    for s in 0..n {
        let vars = (0..g.labels(s))
            .map(|i| {
                let dead = restriction.is_some_and(|r| r.dead[s][i]);
                lp.add_var(format!("mu_{s}_{i}"), 0.0, if dead { 0.0 } else { f64::INFINITY }, g.unary(s)[i])
            })
            .collect::<Vec<_>>();
        node_vars.push(vars);
    }
    let mut edge_vars = Vec::with_capacity(g.num_edges());
    for (e, &(s, t)) in g.edges().iter().enumerate() {
        let kt = g.labels(t);
        let mut vars = Vec::with_capacity(g.labels(s) * kt);
        for i in 0..g.labels(s) {
            for j in 0..kt {
                let off = restriction.is_some_and(|r| r.excluded[e][i * kt + j] || r.dead[s][i] || r.dead[t][j]);
                let hi = if off { 0.0 } else { f64::INFINITY };
                vars.push(lp.add_var(format!("mu_{s}_{t}_{i}_{j}"), 0.0, hi, g.pair(e, i, j)));
            }
        }
        edge_vars.push(vars);
    }
    let mut marg_rows = Vec::with_capacity(g.num_edges());
    for (e, &(s, t)) in g.edges().iter().enumerate() {
        let (ks, kt) = (g.labels(s), g.labels(t));
        let ev = &edge_vars[e];
        let srows = (0..ks)
            .map(|i| {
                let mut c: Vec<(usize, f64)> = (0..kt).map(|j| (ev[i * kt + j], 1.0)).collect();
                c.push((node_vars[s][i], -1.0));
                lp.add_eq(c, 0.0)
            })
            .collect();
        let trows = (0..kt)
            .map(|j| {
                let mut c: Vec<(usize, f64)> = (0..ks).map(|i| (ev[i * kt + j], 1.0)).collect();
                c.push((node_vars[t][j], -1.0));
                lp.add_eq(c, 0.0)
            })
            .collect();
        marg_rows.push((srows, trows));
    }
    let norm_rows = (0..n)
        .map(|s| {
            let mut c: Vec<(usize, f64)> = node_vars[s].iter().map(|&v| (v, 1.0)).collect();
            c.push((mu0_var, -1.0));
            lp.add_eq(c, 0.0)
        })
        .collect();
    lp.add_eq(vec![(mu0_var, 1.0)], 1.0);
    LocalLp { lp, node_vars, edge_vars, mu0_var, marg_rows, norm_rows, shape: g.zeros_like() }
}

impl LocalLp {
    /// Reads a relaxed labeling out of a primal vector.
    pub fn relaxed(&self, x: &[f64]) -> RelaxedLabeling {
        RelaxedLabeling {
            mu0: x[self.mu0_var],
            node: self.node_vars.iter().map(|v| v.iter().map(|&k| x[k]).collect()).collect(),
            edge: self.edge_vars.iter().map(|v| v.iter().map(|&k| x[k]).collect()).collect(),
        }
    }

    fn support_of(&self, support: &[bool]) -> (Vec<Vec<bool>>, Vec<Vec<bool>>) {
        (
            self.node_vars.iter().map(|v| v.iter().map(|&k| support[k]).collect()).collect(),
            self.edge_vars.iter().map(|v| v.iter().map(|&k| support[k]).collect()).collect(),
        )
    }

    /// The reparametrization carried by the duals: reduced costs equal `g^phi`.
    pub fn reparametrization(&self, sol: &LpSolution) -> Reparametrization {
        let mut phi = Reparametrization::zeros(&self.shape);
        for (e, (srows, trows)) in self.marg_rows.iter().enumerate() {
            phi.messages[e].0 = srows.iter().map(|&r| sol.eq_duals[r]).collect();
            phi.messages[e].1 = trows.iter().map(|&r| sol.eq_duals[r]).collect();
        }
        phi.offsets = self.norm_rows.iter().map(|&r| sol.eq_duals[r]).collect();
        phi
    }
}

/// A maximum-support optimum of a local polytope program.
#[derive(Clone, Debug)]
pub struct OptimalFacetPoint {
    pub value: f64,
    pub mu: RelaxedLabeling,
    /// `O_s`: labels positive somewhere on the optimal face.
    pub node_support: Vec<Vec<bool>>,
    pub edge_support: Vec<Vec<bool>>,
    /// Dual reparametrization of the first optimal vertex.
    pub phi: Reparametrization,
}

impl OptimalFacetPoint {
    /// Label set `O_s` as indices.
    pub fn support_labels(&self, s: usize) -> Vec<usize> {
        (0..self.node_support[s].len()).filter(|&i| self.node_support[s][i]).collect()
    }
}

pub fn relative_interior_optimum(local: &LocalLp, solver: &Solver) -> Result<OptimalFacetPoint> {
    let face = relative_interior(&local.lp, solver)?;
    let (node_support, edge_support) = local.support_of(&face.support);
    Ok(OptimalFacetPoint {
        value: face.value,
        mu: local.relaxed(&face.x),
        node_support,
        edge_support,
        phi: local.reparametrization(&face.vertex),
    })
}

/// Optimal value, an optimal vertex and the dual reparametrization of `min <g, mu>`.
pub fn solve_local(
    g: &EnergyInstance,
    restriction: Option<&Restriction>,
    solver: &Solver,
) -> Result<(f64, RelaxedLabeling, Reparametrization)> {
    if !g.is_finite() {
        return invalid("cost vector has non-finite entries");
    }
    let local = local_polytope_lp(g, restriction);
    let sol = solver.solve(&local.lp)?.expect_optimal("local polytope program")?;
    Ok((sol.value, local.relaxed(&sol.primal), local.reparametrization(&sol)))
}

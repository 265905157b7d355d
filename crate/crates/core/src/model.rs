//! Pairwise energies, labelings, relaxed labelings and equivalent transformations.
//!
//! An instance stores a constant `f0`, one unary table per node and one dense
//! `K_s x K_t` table per edge. Edges are kept in their canonical orientation;
//! [`EnergyInstance::pair_directed`] reads a table from either side.

use std::collections::HashMap;

use crate::error::{invalid, Error, Result};

/// Feasibility tolerance for floating relaxed labelings.
pub const TAU_FEAS: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyInstance {
    labels: Vec<usize>,
    edges: Vec<(usize, usize)>,
    f0: f64,
    unary: Vec<Vec<f64>>,
    pairwise: Vec<Vec<f64>>,
    adjacency: Vec<Vec<(usize, usize)>>,
    lookup: HashMap<(usize, usize), usize>,
}

impl EnergyInstance {
    /// Creates an instance without edges and with all costs zero.
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        if let Some(s) = labels.iter().position(|&k| k == 0) {
            return invalid(format!("node {s} has an empty label set"));
        }
        let n = labels.len();
        Ok(EnergyInstance {
            unary: labels.iter().map(|&k| vec![0.0; k]).collect(),
            labels,
            edges: Vec::new(),
            f0: 0.0,
            pairwise: Vec::new(),
            adjacency: vec![Vec::new(); n],
            lookup: HashMap::new(),
        })
    }

    /// Adds edge `st` with a zero cost table and returns its index.
    pub fn add_edge(&mut self, s: usize, t: usize) -> Result<usize> {
        let n = self.num_nodes();
        if s >= n || t >= n {
            return invalid(format!("edge ({s},{t}) references a missing node"));
        }
        if s == t {
            return invalid(format!("self-loop at node {s}"));
        }
        if self.lookup.contains_key(&(s, t)) || self.lookup.contains_key(&(t, s)) {
            return invalid(format!("duplicate edge ({s},{t})"));
        }
        let e = self.edges.len();
        self.edges.push((s, t));
        self.pairwise.push(vec![0.0; self.labels[s] * self.labels[t]]);
        self.adjacency[s].push((t, e));
        self.adjacency[t].push((s, e));
        self.lookup.insert((s, t), e);
        Ok(e)
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Number of labels `K_s`.
    pub fn labels(&self, s: usize) -> usize {
        self.labels[s]
    }

    pub fn label_counts(&self) -> &[usize] {
        &self.labels
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Neighbours of `s` as `(t, edge index)` pairs in insertion order.
    pub fn neighbors(&self, s: usize) -> &[(usize, usize)] {
        &self.adjacency[s]
    }

    /// Index of the edge joining `s` and `t` in either orientation.
    pub fn edge_index(&self, s: usize, t: usize) -> Option<usize> {
        self.lookup.get(&(s, t)).or_else(|| self.lookup.get(&(t, s))).copied()
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn set_f0(&mut self, v: f64) {
        self.f0 = v;
    }

    pub fn unary(&self, s: usize) -> &[f64] {
        &self.unary[s]
    }

    pub fn unary_mut(&mut self, s: usize) -> &mut [f64] {
        &mut self.unary[s]
    }

    pub fn set_unary(&mut self, s: usize, i: usize, v: f64) -> Result<()> {
        self.check_label(s, i)?;
        self.unary[s][i] = v;
        Ok(())
    }

    /// Row-major table of edge `e` in its canonical orientation.
    pub fn pair_table(&self, e: usize) -> &[f64] {
        &self.pairwise[e]
    }

    pub fn pair_table_mut(&mut self, e: usize) -> &mut [f64] {
        &mut self.pairwise[e]
    }

    /// `f_st(i,j)` for canonical edge `e = (s,t)`.
    #[inline]
    pub fn pair(&self, e: usize, i: usize, j: usize) -> f64 {
        let kt = self.labels[self.edges[e].1];
        self.pairwise[e][i * kt + j]
    }

    /// `f_st(i,j)` with `i` the label of `s`, for either orientation of the edge.
    pub fn pair_directed(&self, s: usize, t: usize, i: usize, j: usize) -> Option<f64> {
        let e = self.edge_index(s, t)?;
        Some(if self.edges[e].0 == s { self.pair(e, i, j) } else { self.pair(e, j, i) })
    }

    /// Sets `f_st(i,j)`; `(t,s)` addresses the same table transposed.
    pub fn set_pair(&mut self, s: usize, t: usize, i: usize, j: usize, v: f64) -> Result<()> {
        self.check_label(s, i)?;
        self.check_label(t, j)?;
        let e = self.edge_index(s, t).ok_or_else(|| Error::InvalidInput(format!("no edge between {s} and {t}")))?;
        let (a, b) = if self.edges[e].0 == s { (i, j) } else { (j, i) };
        let kt = self.labels[self.edges[e].1];
        self.pairwise[e][a * kt + b] = v;
        Ok(())
    }

    /// Same graph and label sets with every cost zero.
    pub fn zeros_like(&self) -> EnergyInstance {
        let mut out = self.clone();
        out.f0 = 0.0;
        out.unary.iter_mut().for_each(|u| u.iter_mut().for_each(|v| *v = 0.0));
        out.pairwise.iter_mut().for_each(|p| p.iter_mut().for_each(|v| *v = 0.0));
        out
    }

    /// Largest absolute cost component, `f0` included.
    pub fn max_abs_cost(&self) -> f64 {
        let u = self.unary.iter().flatten();
        let p = self.pairwise.iter().flatten();
        u.chain(p).fold(self.f0.abs(), |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.f0.is_finite()
            && self.unary.iter().flatten().all(|v| v.is_finite())
            && self.pairwise.iter().flatten().all(|v| v.is_finite())
    }

    /// Number of labelings as a float (may overflow integer types).
    pub fn state_count(&self) -> f64 {
        self.labels.iter().map(|&k| k as f64).product()
    }

    fn check_label(&self, s: usize, i: usize) -> Result<()> {
        if s >= self.num_nodes() {
            return invalid(format!("node {s} out of range"));
        }
        if i >= self.labels[s] {
            return invalid(format!("label {i} out of range at node {s}"));
        }
        Ok(())
    }

    /// Validates that `x` assigns an existing label to every node.
    pub fn check_labeling(&self, x: &[usize]) -> Result<()> {
        if x.len() != self.num_nodes() {
            return invalid(format!("labeling has {} entries, instance has {} nodes", x.len(), self.num_nodes()));
        }
        for (s, &xs) in x.iter().enumerate() {
            self.check_label(s, xs)?;
        }
        Ok(())
    }

    /// Energy of a labeling without validation.
    pub fn eval(&self, x: &[usize]) -> f64 {
        let mut v = self.f0;
        for (s, &xs) in x.iter().enumerate() {
            v += self.unary[s][xs];
        }
        for (e, &(s, t)) in self.edges.iter().enumerate() {
            v += self.pair(e, x[s], x[t]);
        }
        v
    }

    /// `E_f(x) = f0 + sum_s f_s(x_s) + sum_st f_st(x_s, x_t)`.
    pub fn energy(&self, x: &Labeling) -> Result<f64> {
        self.check_labeling(&x.0)?;
        Ok(self.eval(&x.0))
    }
}

/// A complete assignment of labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Labeling(pub Vec<usize>);

impl Labeling {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

impl std::ops::Index<usize> for Labeling {
    type Output = usize;
    fn index(&self, s: usize) -> &usize {
        &self.0[s]
    }
}

/// A point of the local polytope: node and edge pseudo-marginals.
#[derive(Clone, Debug, PartialEq)]
pub struct RelaxedLabeling {
    pub mu0: f64,
    pub node: Vec<Vec<f64>>,
    /// Row-major per canonical edge, same layout as the cost tables.
    pub edge: Vec<Vec<f64>>,
}

impl RelaxedLabeling {
    /// All-zero vector shaped like `inst` (not feasible).
    pub fn zeros(inst: &EnergyInstance) -> Self {
        RelaxedLabeling {
            mu0: 0.0,
            node: (0..inst.num_nodes()).map(|s| vec![0.0; inst.labels(s)]).collect(),
            edge: inst.edges().iter().map(|&(s, t)| vec![0.0; inst.labels(s) * inst.labels(t)]).collect(),
        }
    }

    /// Product of uniform node marginals.
    pub fn uniform(inst: &EnergyInstance) -> Self {
        let mut mu = Self::zeros(inst);
        mu.mu0 = 1.0;
        for (s, m) in mu.node.iter_mut().enumerate() {
            m.fill(1.0 / inst.labels(s) as f64);
        }
        for (e, &(s, t)) in inst.edges().iter().enumerate() {
            mu.edge[e].fill(1.0 / (inst.labels(s) * inst.labels(t)) as f64);
        }
        mu
    }

    /// Largest violation of the local polytope constraints.
    pub fn max_violation(&self, inst: &EnergyInstance) -> f64 {
        let mut worst = (self.mu0 - 1.0).abs();
        for m in self.node.iter().chain(self.edge.iter()) {
            for &v in m {
                worst = worst.max(-v);
            }
        }
        for m in &self.node {
            worst = worst.max((m.iter().sum::<f64>() - self.mu0).abs());
        }
        for (e, &(s, t)) in inst.edges().iter().enumerate() {
            let (ks, kt) = (inst.labels(s), inst.labels(t));
            let tab = &self.edge[e];
            for i in 0..ks {
                let row: f64 = tab[i * kt..(i + 1) * kt].iter().sum();
                worst = worst.max((row - self.node[s][i]).abs());
            }
            for j in 0..kt {
                let col: f64 = (0..ks).map(|i| tab[i * kt + j]).sum();
                worst = worst.max((col - self.node[t][j]).abs());
            }
        }
        worst
    }

    /// Checks membership in the local polytope within `tol`.
    pub fn check_feasible(&self, inst: &EnergyInstance, tol: f64) -> Result<()> {
        self.check_shape(inst)?;
        let v = self.max_violation(inst);
        if v > tol {
            return invalid(format!("relaxed labeling violates the local polytope by {v:e}"));
        }
        Ok(())
    }

    pub fn check_shape(&self, inst: &EnergyInstance) -> Result<()> {
        let nodes_ok =
            self.node.len() == inst.num_nodes() && self.node.iter().enumerate().all(|(s, m)| m.len() == inst.labels(s));
        let edges_ok = self.edge.len() == inst.num_edges()
            && inst
                .edges()
                .iter()
                .enumerate()
                .all(|(e, &(s, t))| self.edge[e].len() == inst.labels(s) * inst.labels(t));
        if nodes_ok && edges_ok {
            Ok(())
        } else {
            invalid("relaxed labeling shape does not match the instance")
        }
    }

    /// Nonzero pattern of the node marginals above `tol`.
    pub fn node_support(&self, tol: f64) -> Vec<Vec<bool>> {
        self.node.iter().map(|m| m.iter().map(|&v| v > tol).collect()).collect()
    }
}

/// `<f, mu>` including the constant term `f0 * mu0`.
pub fn inner(inst: &EnergyInstance, mu: &RelaxedLabeling) -> f64 {
    let mut v = inst.f0() * mu.mu0;
    for s in 0..inst.num_nodes() {
        v += inst.unary(s).iter().zip(&mu.node[s]).map(|(a, b)| a * b).sum::<f64>();
    }
    for e in 0..inst.num_edges() {
        v += inst.pair_table(e).iter().zip(&mu.edge[e]).map(|(a, b)| a * b).sum::<f64>();
    }
    v
}

/// The indicator vector of a labeling.
pub fn delta_embed(inst: &EnergyInstance, x: &Labeling) -> Result<RelaxedLabeling> {
    inst.check_labeling(&x.0)?;
    let mut mu = RelaxedLabeling::zeros(inst);
    mu.mu0 = 1.0;
    for (s, &xs) in x.0.iter().enumerate() {
        mu.node[s][xs] = 1.0;
    }
    for (e, &(s, t)) in inst.edges().iter().enumerate() {
        mu.edge[e][x[s] * inst.labels(t) + x[t]] = 1.0;
    }
    Ok(mu)
}

/// Dual vector: a message per edge direction and label, and an offset per node.
#[derive(Clone, Debug, PartialEq)]
pub struct Reparametrization {
    /// Per canonical edge `(s,t)`: `phi_st` over `L_s` and `phi_ts` over `L_t`.
    pub messages: Vec<(Vec<f64>, Vec<f64>)>,
    pub offsets: Vec<f64>,
}

impl Reparametrization {
    pub fn zeros(inst: &EnergyInstance) -> Self {
        Reparametrization {
            messages: inst
                .edges()
                .iter()
                .map(|&(s, t)| (vec![0.0; inst.labels(s)], vec![0.0; inst.labels(t)]))
                .collect(),
            offsets: vec![0.0; inst.num_nodes()],
        }
    }

    /// `phi_st(i)` seen from node `s` along edge `e`.
    pub fn message(&self, inst: &EnergyInstance, e: usize, from: usize, i: usize) -> f64 {
        if inst.edges()[e].0 == from {
            self.messages[e].0[i]
        } else {
            self.messages[e].1[i]
        }
    }

    fn check_shape(&self, inst: &EnergyInstance) -> Result<()> {
        let ok = self.offsets.len() == inst.num_nodes()
            && self.messages.len() == inst.num_edges()
            && inst
                .edges()
                .iter()
                .zip(&self.messages)
                .all(|(&(s, t), (a, b))| a.len() == inst.labels(s) && b.len() == inst.labels(t));
        if ok {
            Ok(())
        } else {
            invalid("reparametrization shape does not match the instance")
        }
    }
}

/// Equivalent transformation `f^phi`.
pub fn reparametrize(inst: &EnergyInstance, phi: &Reparametrization) -> Result<EnergyInstance> {
    phi.check_shape(inst)?;
    let mut out = inst.clone();
    out.f0 = inst.f0 + phi.offsets.iter().sum::<f64>();
    for s in 0..inst.num_nodes() {
        for i in 0..inst.labels(s) {
            let incoming: f64 = inst.neighbors(s).iter().map(|&(_, e)| phi.message(inst, e, s, i)).sum();
            out.unary[s][i] = inst.unary[s][i] + incoming - phi.offsets[s];
        }
    }
    for (e, &(s, t)) in inst.edges().iter().enumerate() {
        let kt = inst.labels(t);
        let (a, b) = &phi.messages[e];
        for i in 0..inst.labels(s) {
            for j in 0..kt {
                out.pairwise[e][i * kt + j] = inst.pairwise[e][i * kt + j] - a[i] - b[j];
            }
        }
    }
    Ok(out)
}

/// Equivalent instance whose costs vanish at `y`: `f_s(y_s) = 0` and
/// `f_st(i, y_t) = f_st(y_s, j) = 0`, with the shift moved into `f0`.
pub fn zero_top_normalize(inst: &EnergyInstance, y: &Labeling) -> Result<EnergyInstance> {
    inst.check_labeling(&y.0)?;
    let mut out = inst.clone();
    let mut f0 = inst.f0;
    for s in 0..inst.num_nodes() {
        f0 += inst.unary[s][y[s]];
    }
    for (e, &(s, t)) in inst.edges().iter().enumerate() {
        f0 += inst.pair(e, y[s], y[t]);
    }
    for s in 0..inst.num_nodes() {
        let base = inst.unary[s][y[s]];
        for i in 0..inst.labels(s) {
            let mut v = inst.unary[s][i] - base;
            for &(t, e) in inst.neighbors(s) {
                let (a, b) = if inst.edges[e].0 == s {
                    (inst.pair(e, i, y[t]), inst.pair(e, y[s], y[t]))
                } else {
                    (inst.pair(e, y[t], i), inst.pair(e, y[t], y[s]))
                };
                v += a - b;
            }
            out.unary[s][i] = v;
        }
    }
    for (e, &(s, t)) in inst.edges().iter().enumerate() {
        let kt = inst.labels(t);
        let corner = inst.pair(e, y[s], y[t]);
        for i in 0..inst.labels(s) {
            for j in 0..kt {
                out.pairwise[e][i * kt + j] = if i == y[s] || j == y[t] {
                    0.0
                } else {
                    inst.pair(e, i, j) - inst.pair(e, i, y[t]) - inst.pair(e, y[s], j) + corner
                };
            }
        }
    }
    out.f0 = f0;
    Ok(out)
}

//! Persistency on windows.
//!
//! Each window is solved on its star-extended subproblem: the window, its
//! neighbors and every edge touching the window, with labels restricted to the
//! ones still alive. A map that moves labels only inside the window has
//! improvement costs supported on that star, so checking it there is the same
//! as checking it on the whole (label-reduced) instance. Local maps are folded
//! into one global mapping, which is verified once more on the full instance.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::Serialize;

use crate::certificate::{Method, Mode, PersistencyCertificate};
use crate::dee::{dee1, DeeOptions};
use crate::error::{invalid, Error, Result};
use crate::lp::{local_polytope_lp, relative_interior_optimum, OptimalFacetPoint, Solver};
use crate::mapping::{compose, eliminate, improvement_costs, verify_improving, PixelwiseMapping};
use crate::model::{EnergyInstance, Labeling};
use crate::persistency::{l1_program, select_y, solve_xi};

/// A nonempty set of nodes, sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Window {
    nodes: Vec<usize>,
}

impl Window {
    pub fn new(inst: &EnergyInstance, mut nodes: Vec<usize>) -> Result<Self> {
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.is_empty() {
            return invalid("empty window");
        }
        if let Some(&s) = nodes.iter().find(|&&s| s >= inst.num_nodes()) {
            return invalid(format!("window node {s} does not exist"));
        }
        Ok(Window { nodes })
    }

    pub fn all(inst: &EnergyInstance) -> Self {
        Window { nodes: (0..inst.num_nodes()).collect() }
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &s in &self.nodes {
            m[s] = true;
        }
        m
    }

    /// The window together with its neighbors.
    pub fn star(&self, inst: &EnergyInstance) -> Vec<usize> {
        let mut m = self.mask(inst.num_nodes());
        for &s in &self.nodes {
            for &(t, _) in inst.neighbors(s) {
                m[t] = true;
            }
        }
        (0..m.len()).filter(|&s| m[s]).collect()
    }
}

fn positions(dim: usize, size: usize, stride: usize) -> Vec<usize> {
    if size >= dim {
        return vec![0];
    }
    let mut out: Vec<usize> = (0..=dim - size).step_by(stride.max(1)).collect();
    if *out.last().unwrap() != dim - size {
        out.push(dim - size);
    }
    out
}

/// Rectangles of `size_h x size_w` on a row-major `height x width` grid, placed
/// every `stride` cells and flush with the far border.
pub fn grid_windows(height: usize, width: usize, size_h: usize, size_w: usize, stride: usize) -> Vec<Window> {
    let mut out = Vec::new();
    for r0 in positions(height, size_h, stride) {
        for c0 in positions(width, size_w, stride) {
            let nodes = (r0..(r0 + size_h).min(height))
                .flat_map(|r| (c0..(c0 + size_w).min(width)).map(move |c| r * width + c))
                .collect();
            out.push(Window { nodes });
        }
    }
    out
}

/// Graph balls of the given radius around centers picked in index order among
/// nodes not yet covered.
pub fn bfs_windows(inst: &EnergyInstance, radius: usize) -> Vec<Window> {
    let n = inst.num_nodes();
    let mut covered = vec![false; n];
    let mut out = Vec::new();
    for c in 0..n {
        if covered[c] {
            continue;
        }
        let mut dist = vec![usize::MAX; n];
        dist[c] = 0;
        let mut queue = VecDeque::from([c]);
        let mut nodes = Vec::new();
        while let Some(s) = queue.pop_front() {
            nodes.push(s);
            covered[s] = true;
            if dist[s] == radius {
                continue;
            }
            for &(t, _) in inst.neighbors(s) {
                if dist[t] == usize::MAX {
                    dist[t] = dist[s] + 1;
                    queue.push_back(t);
                }
            }
        }
        nodes.sort_unstable();
        out.push(Window { nodes });
    }
    out
}

/// An instance cut out of a larger one, with node and label correspondences.
#[derive(Clone, Debug)]
pub struct Subproblem {
    pub inst: EnergyInstance,
    /// Sub node to global node.
    pub nodes: Vec<usize>,
    /// Sub label to global label, per sub node.
    pub labels: Vec<Vec<usize>>,
    /// Nodes whose labels may be moved.
    pub inside: Vec<bool>,
}

impl Subproblem {
    /// Keeps `nodes`, the alive labels of each, and every edge between kept
    /// nodes that touches an `inside` node.
    pub fn new(inst: &EnergyInstance, nodes: &[usize], inside: &[bool], alive: &[Vec<bool>]) -> Result<Self> {
        let mut local = vec![usize::MAX; inst.num_nodes()];
        for (k, &s) in nodes.iter().enumerate() {
            local[s] = k;
        }
        let labels: Vec<Vec<usize>> =
            nodes.iter().map(|&s| (0..inst.labels(s)).filter(|&i| alive[s][i]).collect()).collect();
        if let Some(k) = labels.iter().position(|l| l.is_empty()) {
            return invalid(format!("node {} has no alive label", nodes[k]));
        }
        let mut sub = EnergyInstance::new(labels.iter().map(Vec::len).collect())?;
        for (k, &s) in nodes.iter().enumerate() {
            for (a, &i) in labels[k].iter().enumerate() {
                sub.unary_mut(k)[a] = inst.unary(s)[i];
            }
        }
        for (e, &(s, t)) in inst.edges().iter().enumerate() {
            let (ks, kt) = (local[s], local[t]);
            if ks == usize::MAX || kt == usize::MAX || !(inside[s] || inside[t]) {
                continue;
            }
            let se = sub.add_edge(ks, kt)?;
            let width = labels[kt].len();
            let table = sub.pair_table_mut(se);
            for (a, &i) in labels[ks].iter().enumerate() {
                for (b, &j) in labels[kt].iter().enumerate() {
                    table[a * width + b] = inst.pair(e, i, j);
                }
            }
        }
        Ok(Subproblem { inst: sub, nodes: nodes.to_vec(), labels, inside: nodes.iter().map(|&s| inside[s]).collect() })
    }

    /// All nodes, alive labels only; energies of surviving labelings are kept.
    pub fn reduced(inst: &EnergyInstance, alive: &[Vec<bool>]) -> Result<Self> {
        let nodes: Vec<usize> = (0..inst.num_nodes()).collect();
        let mut sub = Self::new(inst, &nodes, &vec![true; inst.num_nodes()], alive)?;
        sub.inst.set_f0(inst.f0());
        Ok(sub)
    }

    /// Extends a map of the subproblem to the whole instance by the identity.
    pub fn lift(&self, inst: &EnergyInstance, local: &PixelwiseMapping) -> Result<PixelwiseMapping> {
        local.check_shape(&self.inst)?;
        let mut maps: Vec<Vec<usize>> = (0..inst.num_nodes()).map(|s| (0..inst.labels(s)).collect()).collect();
        for (k, &s) in self.nodes.iter().enumerate() {
            for (a, &i) in self.labels[k].iter().enumerate() {
                maps[s][i] = self.labels[k][local.get(k, a)];
            }
        }
        PixelwiseMapping::for_instance(inst, maps)
    }

    /// Global labeling to sub labels; `None` where the label is not kept.
    pub fn local_label(&self, k: usize, global: usize) -> Option<usize> {
        self.labels[k].iter().position(|&i| i == global)
    }
}

/// Relative-interior point of `min <f, (I - Q) mu>`, where `q` sends every
/// label of a window node to the first one and fixes all others.
pub fn window_test_problem(sub: &Subproblem, solver: &Solver) -> Result<OptimalFacetPoint> {
    let maps = (0..sub.inst.num_nodes())
        .map(|k| (0..sub.inst.labels(k)).map(|a| if sub.inside[k] { 0 } else { a }).collect())
        .collect();
    let q = PixelwiseMapping::new(maps)?;
    relative_interior_optimum(&local_polytope_lp(&improvement_costs(&sub.inst, &q), None), solver)
}

#[derive(Clone, Debug)]
pub struct WindowOptions {
    /// Upper limit on variables and on rows of a window program.
    pub budget: usize,
    /// Run DEE1 before each scan.
    pub dee_first: bool,
    pub scans: usize,
    /// Solve windows with disjoint stars concurrently.
    pub parallel: bool,
    /// Fixed test labeling; otherwise it is read off each window's test problem.
    pub y: Option<Labeling>,
}

impl Default for WindowOptions {
    fn default() -> Self {
        WindowOptions { budget: 10_000, dee_first: false, scans: 1, parallel: false, y: None }
    }
}

/// Remaining labels of one node after a stage.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub stage: &'static str,
    pub node: usize,
    pub remaining: usize,
}

#[derive(Clone, Debug)]
pub struct WindowOutcome {
    pub certificate: PersistencyCertificate,
    pub trace: Vec<TraceRow>,
    /// Windows skipped for exceeding the budget, with the reason.
    pub rejected: Vec<(usize, String)>,
}

enum Local {
    Map(PixelwiseMapping),
    Rejected(String),
}

fn solve_window(
    inst: &EnergyInstance,
    alive: &[Vec<bool>],
    w: &Window,
    opts: &WindowOptions,
    solver: &Solver,
) -> Result<Local> {
    let n = inst.num_nodes();
    let sub = Subproblem::new(inst, &w.star(inst), &w.mask(n), alive)?;
    if sub.inside.iter().zip(&sub.labels).all(|(&inside, l)| !inside || l.len() < 2) {
        return Ok(Local::Map(PixelwiseMapping::identity(inst)));
    }
    let facet = window_test_problem(&sub, solver)?;
    let mut y = select_y(&facet, solver.tol.supp);
    if let Some(given) = &opts.y {
        for (k, &s) in sub.nodes.iter().enumerate() {
            if let Some(a) = sub.local_label(k, given[s]) {
                y.0[k] = a;
            }
        }
    }
    let prog = l1_program(&sub.inst, &y, None, Some(&sub.inside))?;
    let (vars, rows) = (prog.lp.num_vars(), prog.lp.num_rows());
    if vars > opts.budget || rows > opts.budget {
        return Ok(Local::Rejected(format!("{vars} variables and {rows} rows exceed the budget {}", opts.budget)));
    }
    let (xi, _) = solve_xi(&sub.inst, &y, None, Some(&sub.inside), solver)?;
    let local = PixelwiseMapping::subset_to_one(&y, &xi.moved)?;
    let report = verify_improving(&sub.inst, &local, Mode::Weak, None, solver)?;
    if !report.improving {
        return Err(Error::Verification(format!("window map failed its local check with value {:e}", report.value)));
    }
    Ok(Local::Map(sub.lift(inst, &local)?))
}

/// Batches of windows whose stars are pairwise disjoint, greedy in index order.
fn color_batches(inst: &EnergyInstance, windows: &[Window]) -> Vec<Vec<usize>> {
    let mut batches: Vec<(Vec<usize>, Vec<bool>)> = Vec::new();
    for (k, w) in windows.iter().enumerate() {
        let star = w.star(inst);
        match batches.iter_mut().find(|(_, used)| star.iter().all(|&s| !used[s])) {
            Some((members, used)) => {
                members.push(k);
                star.iter().for_each(|&s| used[s] = true);
            }
            None => {
                let mut used = vec![false; inst.num_nodes()];
                star.iter().for_each(|&s| used[s] = true);
                batches.push((vec![k], used));
            }
        }
    }
    batches.into_iter().map(|(m, _)| m).collect()
}

fn record(trace: &mut Vec<TraceRow>, iteration: usize, stage: &'static str, alive: &[Vec<bool>]) {
    for (node, a) in alive.iter().enumerate() {
        trace.push(TraceRow { iteration, stage, node, remaining: a.iter().filter(|&&b| b).count() });
    }
}

fn dee_step(inst: &EnergyInstance, global: &PixelwiseMapping, solver: &Solver) -> Result<PixelwiseMapping> {
    let red = Subproblem::reduced(inst, &global.alive())?;
    let out = dee1(&red.inst, DeeOptions { mode: Mode::Weak, pair_feedback: false }, solver)?;
    compose(global, &red.lift(inst, &out.certificate.mapping)?)
}

/// Folds window maps into one weakly improving global mapping.
pub fn window_persistency(
    inst: &EnergyInstance,
    windows: &[Window],
    opts: &WindowOptions,
    solver: &Solver,
) -> Result<WindowOutcome> {
    let mut global = PixelwiseMapping::identity(inst);
    let mut trace = Vec::new();
    let mut rejected = Vec::new();
    let mut order = Vec::new();
    record(&mut trace, 0, "initial", &global.alive());
    let batches: Vec<Vec<usize>> =
        if opts.parallel { color_batches(inst, windows) } else { (0..windows.len()).map(|k| vec![k]).collect() };
    for scan in 1..=opts.scans.max(1) {
        if opts.dee_first {
            global = dee_step(inst, &global, solver)?;
            record(&mut trace, scan, "dee", &global.alive());
        }
        for batch in &batches {
            let alive = global.alive();
            let solved: Vec<Result<Local>> = if opts.parallel {
                batch.par_iter().map(|&k| solve_window(inst, &alive, &windows[k], opts, solver)).collect()
            } else {
                batch.iter().map(|&k| solve_window(inst, &alive, &windows[k], opts, solver)).collect()
            };
            for (&k, res) in batch.iter().zip(solved) {
                match res? {
                    Local::Map(p) => {
                        global = compose(&global, &p)?;
                        order.push(k);
                    }
                    Local::Rejected(why) => rejected.push((k, why)),
                }
            }
        }
        record(&mut trace, scan, "windows", &global.alive());
    }
    let report = verify_improving(inst, &global, Mode::Weak, None, solver)?;
    if !report.improving {
        return Err(Error::Verification(format!(
            "composed window mapping failed global verification with value {:e}",
            report.value
        )));
    }
    let mut certificate = eliminate(inst, &global, &report, Method::Window)?;
    certificate.window_order = order;
    if let Some(y) = &opts.y {
        certificate.y = Some(y.0.clone());
    }
    Ok(WindowOutcome { certificate, trace, rejected })
}

pub fn write_trace_csv<W: std::io::Write>(rows: &[TraceRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    out.flush()?;
    Ok(())
}

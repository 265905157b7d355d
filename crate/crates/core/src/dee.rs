//! Dead-end elimination.
//!
//! DEE1 removes label `alpha` of node `s` when swapping it for some `beta`
//! never increases the energy, judged locally on the star of `s`. DEE2 adds
//! the same test for label pairs on an edge. Both iterate to a fixpoint and
//! take earlier eliminations into account.

use serde::Serialize;

use crate::certificate::{Method, Mode, PersistencyCertificate};
use crate::error::Result;
use crate::lp::{Restriction, Solver};
use crate::mapping::{default_eps, eliminate, verify_improving_on, PixelwiseMapping};
use crate::model::EnergyInstance;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeeOptions {
    pub mode: Mode,
    /// DEE2 alternates label and pair passes, so pair exclusions can kill
    /// labels. Off: pair passes only run after the label fixpoint.
    ///
    /// With feedback each step keeps some optimum, but the composed label map
    /// is not always accepted by the verification program on the pair-restricted
    /// polytope; such runs are refused rather than certified.
    pub pair_feedback: bool,
}

impl Default for DeeOptions {
    fn default() -> Self {
        DeeOptions { mode: Mode::Weak, pair_feedback: false }
    }
}

/// One label elimination `node: from -> to`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Swap {
    pub node: usize,
    pub from: usize,
    pub to: usize,
    pub slack: f64,
}

#[derive(Clone, Debug)]
pub struct DeeOutcome {
    pub certificate: PersistencyCertificate,
    pub alive: Vec<Vec<bool>>,
    /// Per canonical edge, row-major.
    pub excluded: Vec<Vec<bool>>,
    pub swaps: Vec<Swap>,
    pub passes: usize,
}

struct State<'a> {
    f: &'a EnergyInstance,
    opts: DeeOptions,
    tol: f64,
    alive: Vec<Vec<bool>>,
    excluded: Vec<Vec<bool>>,
    swaps: Vec<Swap>,
}

impl<'a> State<'a> {
    fn new(f: &'a EnergyInstance, opts: DeeOptions) -> Self {
        let r = Restriction::none(f);
        State {
            f,
            opts,
            tol: 1e-9 * (1.0 + f.max_abs_cost()),
            alive: r.dead.iter().map(|d| vec![true; d.len()]).collect(),
            excluded: r.excluded,
            swaps: Vec::new(),
        }
    }

    fn is_excluded(&self, e: usize, s: usize, i: usize, j: usize) -> bool {
        let (a, b) = self.f.edges()[e];
        if a == s {
            self.excluded[e][i * self.f.labels(b) + j]
        } else {
            self.excluded[e][j * self.f.labels(s) + i]
        }
    }

    /// `min_{x_t} [f_st(alpha, x_t) - f_st(beta, x_t)]` over alive `x_t` with
    /// `(alpha, x_t)` allowed; `None` when some such `(beta, x_t)` is excluded.
    fn star_min(&self, s: usize, t: usize, e: usize, alpha: usize, beta: usize) -> Option<f64> {
        let mut m = f64::INFINITY;
        for j in 0..self.f.labels(t) {
            if !self.alive[t][j] || self.is_excluded(e, s, alpha, j) {
                continue;
            }
            if self.is_excluded(e, s, beta, j) {
                return None;
            }
            let d = self.f.pair_directed(s, t, alpha, j).unwrap_or(0.0)
                - self.f.pair_directed(s, t, beta, j).unwrap_or(0.0);
            m = m.min(d);
        }
        Some(m)
    }

    fn accepts(&self, slack: f64) -> bool {
        match self.opts.mode {
            Mode::Weak => slack >= -self.tol,
            Mode::Strict => slack > self.tol,
        }
    }

    fn single_slack(&self, s: usize, alpha: usize, beta: usize) -> Option<f64> {
        let mut total = self.f.unary(s)[alpha] - self.f.unary(s)[beta];
        for &(t, e) in self.f.neighbors(s) {
            total += self.star_min(s, t, e, alpha, beta)?;
        }
        Some(total)
    }

    fn single_pass(&mut self) -> bool {
        let mut changed = false;
        for s in 0..self.f.num_nodes() {
            for alpha in 0..self.f.labels(s) {
                if !self.alive[s][alpha] {
                    continue;
                }
                for beta in 0..self.f.labels(s) {
                    if beta == alpha || !self.alive[s][beta] {
                        continue;
                    }
                    match self.single_slack(s, alpha, beta) {
                        Some(slack) if self.accepts(slack) => {
                            self.alive[s][alpha] = false;
                            self.swaps.push(Swap { node: s, from: alpha, to: beta, slack });
                            changed = true;
                            break;
                        }
                        _ => {}
                    }
                }
            }
        }
        changed
    }

    fn side_sum(&self, s: usize, skip: usize, alpha: usize, beta: usize) -> Option<f64> {
        let mut total = 0.0;
        for &(u, e) in self.f.neighbors(s) {
            if u != skip {
                total += self.star_min(s, u, e, alpha, beta)?;
            }
        }
        Some(total)
    }

    fn pair_pass(&mut self) -> bool {
        let f = self.f;
        let mut changed = false;
        for (e, &(s, t)) in f.edges().iter().enumerate() {
            let kt = f.labels(t);
            for a_s in 0..f.labels(s) {
                for a_t in 0..kt {
                    if !self.alive[s][a_s] || !self.alive[t][a_t] || self.excluded[e][a_s * kt + a_t] {
                        continue;
                    }
                    'target: for b_s in 0..f.labels(s) {
                        for b_t in 0..kt {
                            if (b_s, b_t) == (a_s, a_t)
                                || !self.alive[s][b_s]
                                || !self.alive[t][b_t]
                                || self.excluded[e][b_s * kt + b_t]
                            {
                                continue;
                            }
                            let (Some(ls), Some(lt)) = (self.side_sum(s, t, a_s, b_s), self.side_sum(t, s, a_t, b_t))
                            else {
                                continue;
                            };
                            let slack = f.unary(s)[a_s] - f.unary(s)[b_s] + f.unary(t)[a_t] - f.unary(t)[b_t]
                                + f.pair(e, a_s, a_t)
                                - f.pair(e, b_s, b_t)
                                + ls
                                + lt;
                            if self.accepts(slack) {
                                self.excluded[e][a_s * kt + a_t] = true;
                                changed = true;
                                break 'target;
                            }
                        }
                    }
                }
            }
        }
        changed
    }

    fn finish(self, method: Method, passes: usize, solver: &Solver) -> Result<DeeOutcome> {
        let f = self.f;
        let mut maps: Vec<Vec<usize>> = (0..f.num_nodes()).map(|s| (0..f.labels(s)).collect()).collect();
        for sw in &self.swaps {
            for target in maps[sw.node].iter_mut() {
                if *target == sw.from {
                    *target = sw.to;
                }
            }
        }
        let p = PixelwiseMapping::new(maps)?;
        let restriction = Restriction {
            dead: self.alive.iter().map(|a| vec![false; a.len()]).collect(),
            excluded: self.excluded.clone(),
        };
        let eps = match self.opts.mode {
            Mode::Weak => None,
            Mode::Strict => {
                let slack = self.swaps.iter().map(|s| s.slack).fold(f64::INFINITY, f64::min);
                Some(slack.min(default_eps(f)))
            }
        };
        let report = verify_improving_on(f, &p, self.opts.mode, eps, Some(&restriction), solver)?;
        let mut certificate = eliminate(f, &p, &report, method)?;
        for (e, &(s, t)) in f.edges().iter().enumerate() {
            let kt = f.labels(t);
            for (k, &x) in self.excluded[e].iter().enumerate() {
                if x {
                    certificate.excluded_pairs.push((s, t, k / kt, k % kt));
                }
            }
        }
        Ok(DeeOutcome { certificate, alive: self.alive, excluded: self.excluded, swaps: self.swaps, passes })
    }
}

/// Goldstein's simple DEE iterated to a fixpoint.
pub fn dee1(inst: &EnergyInstance, opts: DeeOptions, solver: &Solver) -> Result<DeeOutcome> {
    let mut st = State::new(inst, opts);
    let mut passes = 1;
    while st.single_pass() {
        passes += 1;
    }
    st.finish(Method::Dee1, passes, solver)
}

/// DEE1 interleaved with the pairwise condition until neither changes anything.
pub fn dee2(inst: &EnergyInstance, opts: DeeOptions, solver: &Solver) -> Result<DeeOutcome> {
    let mut st = State::new(inst, opts);
    let mut passes = 0;
    if opts.pair_feedback {
        loop {
            passes += 1;
            let a = st.single_pass();
            let b = st.pair_pass();
            if !a && !b {
                break;
            }
        }
    } else {
        passes += 1;
        while st.single_pass() {
            passes += 1;
        }
        while st.pair_pass() {
            passes += 1;
        }
    }
    st.finish(Method::Dee2, passes, solver)
}

//! Linear programs, solver backends and relative-interior optima.
//!
//! Dual multipliers follow one convention for every backend and both senses:
//! `y_r` is the sensitivity of the optimal value to the right-hand side of row
//! `r`, and reduced costs are `d = c - A^T y`.

mod highs_backend;
mod interior;
mod local;
mod rational;

use std::fmt::Write as _;
use std::io::Write;

pub use highs_backend::HighsSimplex;
pub use interior::{relative_interior, FacePoint};
pub use local::{
    build_schlesinger_lp, local_polytope_lp, relative_interior_optimum, solve_local, LocalLp, OptimalFacetPoint,
    Restriction,
};
pub use rational::RationalSimplex;

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Sparse row `sum_k a_k x_k (= | >=) rhs`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(k, a)| a * x[k]).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub names: Vec<String>,
    pub eq: Vec<Row>,
    /// Rows of the form `a.x >= rhs`.
    pub ge: Vec<Row>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            sense,
            objective: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            names: Vec::new(),
            eq: Vec::new(),
            ge: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lo: f64, hi: f64, cost: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lo);
        self.upper.push(hi);
        self.names.push(name.into());
        self.objective.len() - 1
    }

    pub fn add_eq(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.eq.push(Row { coeffs, rhs });
        self.eq.len() - 1
    }

    pub fn add_ge(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.ge.push(Row { coeffs, rhs });
        self.ge.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.eq.len() + self.ge.len()
    }

    pub fn nonzeros(&self) -> usize {
        self.eq.iter().chain(&self.ge).map(|r| r.coeffs.len()).sum()
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n || self.names.len() != n {
            return invalid("variable arrays have inconsistent lengths");
        }
        if let Some(k) = self.objective.iter().position(|c| !c.is_finite()) {
            return invalid(format!("objective coefficient of {} is not finite", self.names[k]));
        }
        for k in 0..n {
            if self.lower[k].is_nan() || self.upper[k].is_nan() || self.lower[k] > self.upper[k] {
                return invalid(format!(
                    "variable {} has bounds [{}, {}]",
                    self.names[k], self.lower[k], self.upper[k]
                ));
            }
        }
        for r in self.eq.iter().chain(&self.ge) {
            if !r.rhs.is_finite() {
                return invalid("row with non-finite right-hand side");
            }
            for &(k, a) in &r.coeffs {
                if k >= n {
                    return invalid(format!("row references undeclared variable {k}"));
                }
                if !a.is_finite() {
                    return invalid("row with non-finite coefficient");
                }
            }
        }
        Ok(())
    }

    /// Largest violation of rows and bounds at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.num_vars() {
            worst = worst.max(self.lower[k] - x[k]).max(x[k] - self.upper[k]);
        }
        for r in &self.eq {
            worst = worst.max((r.activity(x) - r.rhs).abs());
        }
        for r in &self.ge {
            worst = worst.max(r.rhs - r.activity(x));
        }
        worst
    }

    /// Writes the program in CPLEX LP text format.
    pub fn write_lp_format<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let names: Vec<String> = self.names.iter().enumerate().map(|(k, n)| sanitize(n, k)).collect();
        let term_list = |coeffs: &mut dyn Iterator<Item = (usize, f64)>| -> String {
            let mut s = String::new();
            let mut width = 0;
            for (k, a) in coeffs {
                let piece = if a < 0.0 { format!(" - {} {}", -a, names[k]) } else { format!(" + {} {}", a, names[k]) };
                width += piece.len();
                s.push_str(&piece);
                if width > 200 {
                    s.push_str("\n   ");
                    width = 0;
                }
            }
            if s.is_empty() {
                s.push_str(" 0");
            }
            s
        };
        writeln!(w, "\\ exported by maxpersist")?;
        writeln!(w, "{}", if self.sense == Sense::Minimize { "Minimize" } else { "Maximize" })?;
        let mut obj = self.objective.iter().copied().enumerate().filter(|&(_, c)| c != 0.0);
        writeln!(w, " obj:{}", term_list(&mut obj))?;
        writeln!(w, "Subject To")?;
        for (r, row) in self.eq.iter().enumerate() {
            let mut it = row.coeffs.iter().copied();
            writeln!(w, " e{r}:{} = {}", term_list(&mut it), row.rhs)?;
        }
        for (r, row) in self.ge.iter().enumerate() {
            let mut it = row.coeffs.iter().copied();
            writeln!(w, " g{r}:{} >= {}", term_list(&mut it), row.rhs)?;
        }
        writeln!(w, "Bounds")?;
        for k in 0..self.num_vars() {
            let (lo, hi) = (self.lower[k], self.upper[k]);
            let n = &names[k];
            let line = match (lo.is_finite(), hi.is_finite()) {
                (false, false) => format!(" {n} free"),
                (true, true) if lo == hi => format!(" {n} = {lo}"),
                (true, true) => format!(" {lo} <= {n} <= {hi}"),
                (true, false) if lo == 0.0 => continue,
                (true, false) => format!(" {n} >= {lo}"),
                (false, true) => format!(" -inf <= {n} <= {hi}"),
            };
            writeln!(w, "{line}")?;
        }
        writeln!(w, "End")
    }
}

fn sanitize(name: &str, k: usize) -> String {
    let mut s = String::new();
    for c in name.chars() {
        s.push(if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' });
    }
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit() || c == '.') || s.eq_ignore_ascii_case("e") {
        let _ = write!(s, "_{k}");
        s = format!("x{s}");
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: f64,
    pub primal: Vec<f64>,
    pub eq_duals: Vec<f64>,
    pub ge_duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
}

impl LpSolution {
    pub(crate) fn without_optimum(status: LpStatus) -> Self {
        LpSolution {
            status,
            value: f64::NAN,
            primal: Vec::new(),
            eq_duals: Vec::new(),
            ge_duals: Vec::new(),
            reduced_costs: Vec::new(),
        }
    }

    pub fn expect_optimal(self, what: &str) -> Result<LpSolution> {
        match self.status {
            LpStatus::Optimal => Ok(self),
            s => Err(Error::Solver(format!("{what}: unexpected status {s:?}"))),
        }
    }
}

/// Tolerances used across the crate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Local polytope feasibility of relaxed labelings.
    pub feas: f64,
    /// Primal feasibility of a reported LP optimum, relative to row scale.
    pub lp: f64,
    /// Duality gap of a reported LP optimum, relative to `1 + |value|`.
    pub gap: f64,
    /// Threshold for a coordinate to count as positive.
    pub supp: f64,
    /// Distance of an indicator from `{0, 1}`.
    pub int: f64,
    /// Verification LP values at or above `-verify` count as nonnegative.
    pub verify: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { feas: 1e-8, lp: 1e-7, gap: 1e-7, supp: 1e-7, int: 1e-6, verify: 1e-7 }
    }
}

/// Pluggable LP solver.
pub trait LpBackend: Send + Sync {
    fn name(&self) -> &'static str;
    /// Solves `lp`; duals and reduced costs must follow the module convention.
    fn solve_raw(&self, lp: &LinearProgram) -> Result<LpSolution>;
}

/// Backend selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    /// Exact rational simplex with Bland's rule.
    Rational,
    /// HiGHS dual simplex in double precision.
    Highs,
    /// Rational when `(rows + 1) * (columns + 1)` is at most the limit, HiGHS otherwise.
    Auto { rational_limit: usize },
}

impl Default for Backend {
    fn default() -> Self {
        Backend::Auto { rational_limit: 400 }
    }
}

/// Backend plus tolerances; every LP in the crate goes through [`Solver::solve`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Solver {
    pub backend: Backend,
    pub tol: Tolerances,
}

impl Solver {
    pub fn new(backend: Backend) -> Self {
        Solver { backend, tol: Tolerances::default() }
    }

    pub fn rational() -> Self {
        Solver::new(Backend::Rational)
    }

    pub fn highs() -> Self {
        Solver::new(Backend::Highs)
    }

    fn pick(&self, lp: &LinearProgram) -> &'static dyn LpBackend {
        static RATIONAL: RationalSimplex = RationalSimplex;
        static HIGHS: HighsSimplex = HighsSimplex { presolve: true };
        match self.backend {
            Backend::Rational => &RATIONAL,
            Backend::Highs => &HIGHS,
            Backend::Auto { rational_limit } => {
                if (lp.num_rows() + 1) * (lp.num_vars() + 1) <= rational_limit {
                    &RATIONAL
                } else {
                    &HIGHS
                }
            }
        }
    }

    /// Solves and checks the reported optimum; a failed check is a solver error.
    pub fn solve(&self, lp: &LinearProgram) -> Result<LpSolution> {
        lp.validate()?;
        if lp.num_vars() == 0 {
            return Ok(empty_program(lp));
        }
        let backend = self.pick(lp);
        let sol = backend.solve_raw(lp)?;
        if sol.status != LpStatus::Optimal {
            return Ok(sol);
        }
        match certify(lp, &sol, &self.tol) {
            Ok(()) => Ok(sol),
            Err(first) if backend.name() == "highs" => {
                let sol = HighsSimplex { presolve: false }.solve_raw(lp)?;
                if sol.status == LpStatus::Optimal {
                    certify(lp, &sol, &self.tol).map_err(|e| Error::Solver(format!("{first}; retry: {e}")))?;
                }
                Ok(sol)
            }
            Err(e) => Err(Error::Solver(e)),
        }
    }
}

fn empty_program(lp: &LinearProgram) -> LpSolution {
    let feasible = lp.eq.iter().all(|r| r.rhs == 0.0) && lp.ge.iter().all(|r| r.rhs <= 0.0);
    if !feasible {
        return LpSolution::without_optimum(LpStatus::Infeasible);
    }
    LpSolution {
        status: LpStatus::Optimal,
        value: 0.0,
        primal: Vec::new(),
        eq_duals: vec![0.0; lp.eq.len()],
        ge_duals: vec![0.0; lp.ge.len()],
        reduced_costs: Vec::new(),
    }
}

/// Dual objective `b.y + sum_k bound_k d_k`; `None` when a reduced cost points at an infinite bound.
pub fn dual_value(lp: &LinearProgram, sol: &LpSolution, tol: f64) -> Option<f64> {
    let mut v: f64 = lp.eq.iter().zip(&sol.eq_duals).map(|(r, y)| r.rhs * y).sum();
    v += lp.ge.iter().zip(&sol.ge_duals).map(|(r, y)| r.rhs * y).sum::<f64>();
    for k in 0..lp.num_vars() {
        let d = sol.reduced_costs[k];
        if d.abs() <= tol {
            continue;
        }
        let at_lower = (d > 0.0) == (lp.sense == Sense::Minimize);
        let b = if at_lower { lp.lower[k] } else { lp.upper[k] };
        if !b.is_finite() {
            return None;
        }
        v += b * d;
    }
    Some(v)
}

fn certify(lp: &LinearProgram, sol: &LpSolution, tol: &Tolerances) -> std::result::Result<(), String> {
    let n = lp.num_vars();
    if sol.primal.len() != n || sol.reduced_costs.len() != n {
        return Err("solution has the wrong length".into());
    }
    if sol.eq_duals.len() != lp.eq.len() || sol.ge_duals.len() != lp.ge.len() {
        return Err("dual vector has the wrong length".into());
    }
    let scale = |r: &Row| 1.0 + r.rhs.abs() + r.coeffs.iter().map(|c| c.1.abs()).fold(0.0, f64::max);
    for k in 0..n {
        let x = sol.primal[k];
        let slack = tol.lp * (1.0 + x.abs());
        if x < lp.lower[k] - slack || x > lp.upper[k] + slack {
            return Err(format!("variable {} = {x} violates its bounds", lp.names[k]));
        }
    }
    for (kind, rows) in [("equality", &lp.eq), ("inequality", &lp.ge)] {
        for (r, row) in rows.iter().enumerate() {
            let a = row.activity(&sol.primal);
            let viol = if kind == "equality" { (a - row.rhs).abs() } else { row.rhs - a };
            if viol > tol.lp * scale(row) {
                return Err(format!("{kind} row {r} violated by {viol:e}"));
            }
        }
    }
    let cmax = lp.objective.iter().fold(1.0f64, |m, c| m.max(c.abs()));
    let dtol = tol.gap * cmax;
    let sign = if lp.sense == Sense::Minimize { 1.0 } else { -1.0 };
    if let Some(r) = sol.ge_duals.iter().position(|&y| sign * y < -dtol) {
        return Err(format!("inequality dual {r} has the wrong sign"));
    }
    let dual = dual_value(lp, sol, dtol).ok_or("reduced cost points at an infinite bound")?;
    let gap = (sol.value - dual).abs();
    if gap > tol.gap * (1.0 + sol.value.abs()) {
        return Err(format!("duality gap {gap:e} between {} and {dual}", sol.value));
    }
    if (lp.objective_at(&sol.primal) - sol.value).abs() > tol.gap * (1.0 + sol.value.abs()) {
        return Err("reported value differs from the primal objective".into());
    }
    Ok(())
}

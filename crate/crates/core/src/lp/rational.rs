//! Dense two-phase tableau simplex over exact rationals with Bland's rule.

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{LinearProgram, LpBackend, LpSolution, LpStatus, Sense};
use crate::error::{Error, Result};

type Q = BigRational;

/// Exact reference solver; intended for small programs.
#[derive(Clone, Copy, Debug, Default)]
pub struct RationalSimplex;

fn q(v: f64) -> Q {
    Q::from_float(v).expect("finite value")
}

fn f(v: &Q) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// How an original variable is expressed through nonnegative columns.
enum Repr {
    /// `x = lo + u`
    Shift(f64, usize),
    /// `x = hi - u`
    Flip(f64, usize),
    /// `x = u - v`
    Split(usize, usize),
}

struct Tableau {
    rows: Vec<Vec<Q>>,
    rhs: Vec<Q>,
    basis: Vec<usize>,
    obj: Vec<Q>,
    obj_rhs: Q,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        if !p.is_one() {
            let inv = p.recip();
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v *= &inv;
                }
            }
            self.rhs[r] *= &inv;
        }
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r].clone();
        let nz: Vec<usize> = (0..prow.len()).filter(|&j| !prow[j].is_zero()).collect();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let factor = self.rows[i][c].clone();
            for &j in &nz {
                let d = &factor * &prow[j];
                self.rows[i][j] -= d;
            }
            self.rhs[i] -= &factor * &prhs;
        }
        if !self.obj[c].is_zero() {
            let factor = self.obj[c].clone();
            for &j in &nz {
                let d = &factor * &prow[j];
                self.obj[j] -= d;
            }
            self.obj_rhs -= &factor * &prhs;
        }
        self.basis[r] = c;
    }

    /// Runs Bland's rule on columns `< allowed`; returns false when unbounded.
    fn run(&mut self, allowed: usize) -> bool {
        loop {
            let Some(c) = (0..allowed).find(|&j| self.obj[j].is_negative()) else {
                return true;
            };
            let mut best: Option<(usize, Q)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[r] / a;
                let better = match &best {
                    None => true,
                    Some((br, bv)) => ratio < *bv || (ratio == *bv && self.basis[r] < self.basis[*br]),
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }
}

impl LpBackend for RationalSimplex {
    fn name(&self) -> &'static str {
        "rational"
    }

    fn solve_raw(&self, lp: &LinearProgram) -> Result<LpSolution> {
        let n = lp.num_vars();
        let sign = if lp.sense == Sense::Minimize { 1.0 } else { -1.0 };

        // Nonnegative columns and bound rows.
        let mut reprs = Vec::with_capacity(n);
        let mut ncols = 0;
        let mut bound_rows: Vec<(usize, f64)> = Vec::new();
        for k in 0..n {
            let (lo, hi) = (lp.lower[k], lp.upper[k]);
            if lo.is_finite() {
                reprs.push(Repr::Shift(lo, ncols));
                if hi.is_finite() {
                    bound_rows.push((ncols, hi - lo));
                }
                ncols += 1;
            } else if hi.is_finite() {
                reprs.push(Repr::Flip(hi, ncols));
                ncols += 1;
            } else {
                reprs.push(Repr::Split(ncols, ncols + 1));
                ncols += 2;
            }
        }
        let m_orig = lp.eq.len() + lp.ge.len();
        let m = m_orig + bound_rows.len();
        let n_surplus = lp.ge.len() + bound_rows.len();
        let n_struct = ncols + n_surplus;
        let width = n_struct + m;

        let mut rows = vec![vec![Q::zero(); width]; m];
        let mut rhs = vec![Q::zero(); m];
        let mut cost = vec![Q::zero(); n_struct];
        for k in 0..n {
            let c = q(sign * lp.objective[k]);
            match reprs[k] {
                Repr::Shift(_, u) => cost[u] = c,
                Repr::Flip(_, u) => cost[u] = -c,
                Repr::Split(u, v) => {
                    cost[v] = -c.clone();
                    cost[u] = c;
                }
            }
        }
        let all_rows = lp.eq.iter().chain(&lp.ge);
        for (r, row) in all_rows.enumerate() {
            let mut b = q(row.rhs);
            for &(k, a) in &row.coeffs {
                let a = q(a);
                match reprs[k] {
                    Repr::Shift(lo, u) => {
                        b -= &a * q(lo);
                        rows[r][u] += a;
                    }
                    Repr::Flip(hi, u) => {
                        b -= &a * q(hi);
                        rows[r][u] -= a;
                    }
                    Repr::Split(u, v) => {
                        rows[r][v] -= a.clone();
                        rows[r][u] += a;
                    }
                }
            }
            rhs[r] = b;
        }
        for g in 0..lp.ge.len() {
            rows[lp.eq.len() + g][ncols + g] = -Q::one();
        }
        for (b, &(u, width_b)) in bound_rows.iter().enumerate() {
            let r = m_orig + b;
            rows[r][u] = Q::one();
            rows[r][ncols + lp.ge.len() + b] = Q::one();
            rhs[r] = q(width_b);
        }
        let mut negated = vec![false; m];
        for r in 0..m {
            if rhs[r].is_negative() {
                negated[r] = true;
                rhs[r] = -rhs[r].clone();
                for v in rows[r].iter_mut() {
                    *v = -v.clone();
                }
            }
            rows[r][n_struct + r] = Q::one();
        }

        // Phase 1: minimize the sum of artificials.
        let mut obj = vec![Q::zero(); width];
        let mut obj_rhs = Q::zero();
        for r in 0..m {
            for j in 0..n_struct {
                obj[j] -= &rows[r][j];
            }
            obj_rhs -= &rhs[r];
        }
        let mut t = Tableau { rows, rhs, basis: (n_struct..n_struct + m).collect(), obj, obj_rhs };
        t.run(width);
        if t.obj_rhs.is_negative() {
            return Ok(LpSolution::without_optimum(LpStatus::Infeasible));
        }
        for r in 0..m {
            if t.basis[r] >= n_struct {
                if let Some(c) = (0..n_struct).find(|&j| !t.rows[r][j].is_zero()) {
                    t.pivot(r, c);
                }
            }
        }

        // Phase 2 on the original costs; artificials never re-enter.
        let mut obj = vec![Q::zero(); width];
        obj[..n_struct].clone_from_slice(&cost);
        let mut obj_rhs = Q::zero();
        for r in 0..m {
            let b = t.basis[r];
            if b < n_struct && !cost[b].is_zero() {
                let cb = cost[b].clone();
                for j in 0..width {
                    if !t.rows[r][j].is_zero() {
                        obj[j] -= &cb * &t.rows[r][j];
                    }
                }
                obj_rhs -= &cb * &t.rhs[r];
            }
        }
        t.obj = obj;
        t.obj_rhs = obj_rhs;
        if !t.run(n_struct) {
            return Ok(LpSolution::without_optimum(LpStatus::Unbounded));
        }

        let mut u = vec![Q::zero(); n_struct];
        for r in 0..m {
            if t.basis[r] < n_struct {
                u[t.basis[r]] = t.rhs[r].clone();
            }
        }
        let x: Vec<Q> = reprs
            .iter()
            .map(|rep| match *rep {
                Repr::Shift(lo, c) => q(lo) + &u[c],
                Repr::Flip(hi, c) => q(hi) - &u[c],
                Repr::Split(a, b) => &u[a] - &u[b],
            })
            .collect();

        // y_min = c_B B^-1; the artificial columns hold B^-1.
        let mut y = vec![Q::zero(); m_orig];
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = Q::zero();
            for r in 0..m {
                let b = t.basis[r];
                if b < n_struct && !cost[b].is_zero() {
                    acc += &cost[b] * &t.rows[r][n_struct + i];
                }
            }
            if negated[i] {
                acc = -acc;
            }
            if sign < 0.0 {
                acc = -acc;
            }
            *yi = acc;
        }
        let mut d: Vec<Q> = lp.objective.iter().map(|&c| q(c)).collect();
        for (r, row) in lp.eq.iter().chain(&lp.ge).enumerate() {
            if y[r].is_zero() {
                continue;
            }
            for &(k, a) in &row.coeffs {
                d[k] -= q(a) * &y[r];
            }
        }
        let mut value = Q::zero();
        for k in 0..n {
            value += q(lp.objective[k]) * &x[k];
        }
        let yf: Vec<f64> = y.iter().map(f).collect();
        let sol = LpSolution {
            status: LpStatus::Optimal,
            value: f(&value),
            primal: x.iter().map(f).collect(),
            eq_duals: yf[..lp.eq.len()].to_vec(),
            ge_duals: yf[lp.eq.len()..].to_vec(),
            reduced_costs: d.iter().map(f).collect(),
        };
        if sol.primal.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver("rational solution does not fit a double".into()));
        }
        Ok(sol)
    }
}

//! Maximum-support points of the optimal face.
//!
//! The face is cut out exactly by complementary slackness against the dual
//! solution of the first solve: columns with nonzero reduced cost are fixed to
//! their active bound and inequality rows with nonzero duals become equalities.
//! Support is then grown in batched rounds, each maximizing the sum of capped
//! slack variables `t_k <= x_k` over coordinates not yet seen positive. A round
//! with optimum zero proves no point of the face reaches the remaining
//! coordinates. The returned point is the average of all collected points.

use super::{LinearProgram, LpSolution, LpStatus, Row, Sense, Solver};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct FacePoint {
    pub value: f64,
    pub x: Vec<f64>,
    /// Coordinates with a nonnegative domain that are positive somewhere on the face.
    pub support: Vec<bool>,
    /// The first optimum found, before support growth.
    pub vertex: LpSolution,
    pub rounds: usize,
}

fn face_program(lp: &LinearProgram, sol: &LpSolution, solver: &Solver) -> LinearProgram {
    let cmax = lp.objective.iter().fold(1.0f64, |m, c| m.max(c.abs()));
    let rc_tol = solver.tol.gap * cmax;
    let mut face = lp.clone();
    face.objective.iter_mut().for_each(|c| *c = 0.0);
    face.sense = Sense::Maximize;
    for k in 0..lp.num_vars() {
        let d = sol.reduced_costs[k];
        if d.abs() <= rc_tol {
            continue;
        }
        let at_lower = (d > 0.0) == (lp.sense == Sense::Minimize);
        if at_lower && lp.lower[k].is_finite() {
            face.upper[k] = face.lower[k];
        } else if !at_lower && lp.upper[k].is_finite() {
            face.lower[k] = face.upper[k];
        }
    }
    let mut kept = Vec::new();
    for (r, row) in lp.ge.iter().enumerate() {
        if sol.ge_duals[r].abs() > rc_tol {
            face.eq.push(row.clone());
        } else {
            kept.push(row.clone());
        }
    }
    face.ge = kept;
    face
}

/// Optimal face cut by the objective value; used when the dual-based face is
/// inconsistent with the primal optimum (solver noise).
fn value_face(lp: &LinearProgram, sol: &LpSolution, solver: &Solver) -> LinearProgram {
    let mut face = lp.clone();
    let slack = solver.tol.gap * (1.0 + sol.value.abs());
    let coeffs: Vec<(usize, f64)> = lp.objective.iter().copied().enumerate().filter(|&(_, c)| c != 0.0).collect();
    match lp.sense {
        Sense::Minimize => {
            face.ge.push(Row { coeffs: coeffs.iter().map(|&(k, c)| (k, -c)).collect(), rhs: -sol.value - slack })
        }
        Sense::Maximize => face.ge.push(Row { coeffs, rhs: sol.value - slack }),
    }
    face.objective.iter_mut().for_each(|c| *c = 0.0);
    face.sense = Sense::Maximize;
    face
}

/// Solves `lp` and returns an optimal point whose support is maximal over the optimal face.
pub fn relative_interior(lp: &LinearProgram, solver: &Solver) -> Result<FacePoint> {
    let sol = solver.solve(lp)?.expect_optimal("relative interior")?;
    let n = lp.num_vars();
    let tol = solver.tol.supp;
    let mut face = face_program(lp, &sol, solver);
    if face.max_violation(&sol.primal) > solver.tol.lp * 10.0 {
        face = value_face(lp, &sol, solver);
    }
    let eligible: Vec<bool> = (0..n).map(|k| lp.lower[k] == 0.0 && face.upper[k] > 0.0).collect();
    let mut support: Vec<bool> = (0..n).map(|k| lp.lower[k] == 0.0 && sol.primal[k] > tol).collect();
    let mut points = vec![sol.primal.clone()];
    let mut rounds = 0;
    loop {
        let remaining: Vec<usize> = (0..n).filter(|&k| eligible[k] && !support[k]).collect();
        if remaining.is_empty() {
            break;
        }
        let mut grow = face.clone();
        for &k in &remaining {
            let t = grow.add_var(format!("t_{k}"), 0.0, 1.0, 1.0);
            grow.add_ge(vec![(k, 1.0), (t, -1.0)], 0.0);
        }
        let round = solver.solve(&grow)?;
        rounds += 1;
        if round.status != LpStatus::Optimal {
            return Err(Error::Solver(format!("support growth round ended with {:?}", round.status)));
        }
        if round.value <= tol {
            break;
        }
        let x = round.primal[..n].to_vec();
        let fresh: Vec<usize> = remaining.iter().copied().filter(|&k| x[k] > tol).collect();
        if fresh.is_empty() {
            break;
        }
        for k in fresh {
            support[k] = true;
        }
        points.push(x);
    }
    let m = points.len() as f64;
    let mut x = vec![0.0; n];
    for p in &points {
        for k in 0..n {
            x[k] += p[k] / m;
        }
    }
    Ok(FacePoint { value: sol.value, x, support, vertex: sol, rounds })
}

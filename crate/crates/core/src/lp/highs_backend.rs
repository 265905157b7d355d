//! HiGHS dual simplex backend.

use highs::{HighsModelStatus, RowProblem};

use super::{LinearProgram, LpBackend, LpSolution, LpStatus, Sense};
use crate::error::{Error, Result};

/// Double-precision simplex through HiGHS.
#[derive(Clone, Copy, Debug)]
pub struct HighsSimplex {
    pub presolve: bool,
}

impl Default for HighsSimplex {
    fn default() -> Self {
        HighsSimplex { presolve: true }
    }
}

/// Feasibility tolerances tried in turn: at the tightest setting HiGHS
/// occasionally aborts on degenerate programs. Every optimum is re-checked by
/// [`crate::lp::Solver::solve`] regardless.
const TOLERANCES: [f64; 3] = [1e-9, 1e-8, 1e-7];

impl LpBackend for HighsSimplex {
    fn name(&self) -> &'static str {
        "highs"
    }

    fn solve_raw(&self, lp: &LinearProgram) -> Result<LpSolution> {
        let mut last = Error::Solver("HiGHS was not run".into());
        for tol in TOLERANCES {
            let mut attempt = run(lp, self.presolve, tol);
            // Presolve may stop at "unbounded or infeasible"; the simplex tells which.
            if matches!(attempt, Ok(None)) {
                attempt = run(lp, false, tol);
            }
            match attempt {
                Ok(Some(sol)) => return Ok(sol),
                Ok(None) => last = Error::Solver("HiGHS could not classify the program".into()),
                Err(e) => last = e,
            }
        }
        Err(last)
    }
}

/// One HiGHS run; `None` for "unbounded or infeasible".
fn run(lp: &LinearProgram, presolve: bool, tol: f64) -> Result<Option<LpSolution>> {
    let mut pb = RowProblem::default();
    let cols: Vec<_> = (0..lp.num_vars()).map(|k| pb.add_column(lp.objective[k], lp.lower[k]..=lp.upper[k])).collect();
    let terms = |r: &super::Row| r.coeffs.iter().map(|&(k, a)| (cols[k], a)).collect::<Vec<_>>();
    for r in &lp.eq {
        pb.add_row(r.rhs..=r.rhs, terms(r));
    }
    for r in &lp.ge {
        pb.add_row(r.rhs.., terms(r));
    }
    let sense = match lp.sense {
        Sense::Minimize => highs::Sense::Minimise,
        Sense::Maximize => highs::Sense::Maximise,
    };
    let mut model = pb.try_optimise(sense).map_err(|s| Error::Solver(format!("HiGHS load: {s:?}")))?;
    model.make_quiet();
    model.set_option("primal_feasibility_tolerance", tol);
    model.set_option("dual_feasibility_tolerance", tol);
    model.set_option("presolve", if presolve { "on" } else { "off" });
    let solved = model.try_solve().map_err(|s| Error::Solver(format!("HiGHS run: {s:?}")))?;
    match solved.status() {
        HighsModelStatus::Optimal => {}
        HighsModelStatus::Infeasible => return Ok(Some(LpSolution::without_optimum(LpStatus::Infeasible))),
        HighsModelStatus::Unbounded => return Ok(Some(LpSolution::without_optimum(LpStatus::Unbounded))),
        HighsModelStatus::UnboundedOrInfeasible => return Ok(None),
        s => return Err(Error::Solver(format!("HiGHS status {s:?}"))),
    }
    let sol = solved.get_solution();
    let neq = lp.eq.len();
    let row_duals = sol.dual_rows();
    Ok(Some(LpSolution {
        status: LpStatus::Optimal,
        value: solved.objective_value(),
        primal: sol.columns().to_vec(),
        eq_duals: row_duals[..neq].to_vec(),
        ge_duals: row_duals[neq..].to_vec(),
        reduced_costs: sol.dual_columns().to_vec(),
    }))
}

//! Optimality certificates for LP results.
//!
//! Primal feasibility, dual feasibility, and complementary slackness
//! together certify optimality without reference to the solve path, which
//! makes them an independent check on the simplex.

use super::SolveResult;
use crate::problem::Problem;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct LpCertificate<S> {
    /// Worst bound/row violation of the primal point.
    pub primal_infeasibility: S,
    /// Worst sign violation of a reduced cost or row dual against its
    /// variable's resting bound.
    pub dual_infeasibility: S,
    /// Worst complementary-slackness residual.
    pub complementary_slackness: S,
}

impl<S: Scalar> LpCertificate<S> {
    pub fn within(&self, tol: S) -> bool {
        self.primal_infeasibility <= tol
            && self.dual_infeasibility <= tol
            && self.complementary_slackness <= tol
    }
}

/// Evaluate the certificate for an LP result carrying duals.
pub fn lp_certificate<S: Scalar>(problem: &Problem<S>, res: &SolveResult<S>) -> LpCertificate<S> {
    let x = &res.primal;
    let y = res.duals.as_ref().expect("LP result with duals");
    let tol = S::feas_tol();

    let primal = problem.max_violation(x);

    // Structural reduced costs.
    let mut d: Vec<S> = problem.objective.clone();
    for r in 0..problem.num_rows() {
        let yr = y[r];
        if yr != S::zero() {
            for (c, v) in problem.row(r) {
                d[c] -= yr * v;
            }
        }
    }

    let mut dual_infeas = S::zero();
    let mut comp_slack = S::zero();
    for c in 0..problem.num_cols() {
        let lo = problem.col_lower[c];
        let hi = problem.col_upper[c];
        let at_lo = x[c] <= lo + tol;
        let at_hi = x[c] >= hi - tol;
        if at_lo && at_hi {
            continue; // fixed: any sign admissible
        }
        if at_lo {
            dual_infeas = dual_infeas.max(-d[c]);
        } else if at_hi {
            dual_infeas = dual_infeas.max(d[c]);
        } else {
            dual_infeas = dual_infeas.max(d[c].abs());
        }
        // d > 0 requires x at lower; d < 0 requires x at upper.
        if d[c] > tol {
            comp_slack = comp_slack.max(x[c] - lo);
        } else if d[c] < -tol {
            comp_slack = comp_slack.max(hi - x[c]);
        }
    }
    for (r, act) in problem.row_activity(x).into_iter().enumerate() {
        let lo = problem.row_lower[r];
        let hi = problem.row_upper[r];
        let at_lo = act <= lo + tol;
        let at_hi = act >= hi - tol;
        if at_lo && at_hi {
            continue;
        }
        if at_lo {
            dual_infeas = dual_infeas.max(-y[r]);
        } else if at_hi {
            dual_infeas = dual_infeas.max(y[r]);
        } else {
            dual_infeas = dual_infeas.max(y[r].abs());
        }
        if y[r] > tol {
            comp_slack = comp_slack.max(act - lo);
        } else if y[r] < -tol {
            comp_slack = comp_slack.max(hi - act);
        }
    }

    LpCertificate {
        primal_infeasibility: primal,
        dual_infeasibility: dual_infeas,
        complementary_slackness: comp_slack,
    }
}

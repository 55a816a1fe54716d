//! Scalar abstraction for the optimization kernel.
//!
//! The LP/MILP machinery is generic over the floating-point type so the
//! same code paths run in `f32` or `f64`. Everything domain-facing uses the
//! `f64` aliases exported from the crate root.

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display};

/// Floating-point scalar usable by the simplex and branch-and-bound kernels.
pub trait Scalar:
    Float + NumAssign + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Primal/dual feasibility tolerance for the simplex.
    fn feas_tol() -> Self;
    /// Reduced-cost optimality tolerance.
    fn opt_tol() -> Self;
    /// Magnitude below which a pivot element is rejected as unstable.
    fn pivot_tol() -> Self;

    /// Lossless-enough conversion from an `f64` constant.
    fn c(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable in scalar type")
    }
    /// Widen to `f64` for reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn feas_tol() -> Self {
        1e-7
    }
    // Below ~5e-7 the entering rule starts chasing dual round-off on
    // penalty-scale objectives and the simplex dribbles without progress;
    // the dual-feasibility contract is 1e-6, so this stays inside it.
    fn opt_tol() -> Self {
        5e-7
    }
    fn pivot_tol() -> Self {
        1e-10
    }
}

impl Scalar for f32 {
    fn feas_tol() -> Self {
        1e-4
    }
    fn opt_tol() -> Self {
        1e-4
    }
    fn pivot_tol() -> Self {
        1e-6
    }
}

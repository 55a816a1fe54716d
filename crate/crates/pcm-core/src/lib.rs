//! Rolling-horizon production cost model for grids with high renewable
//! shares and short/long-duration storage.
//!
//! The crate builds nodal unit-commitment windows as sparse MILPs, solves
//! them with a deterministic in-crate simplex + branch-and-bound engine,
//! rolls them forward with state propagation, prices committed hours by
//! fixed-binary LP duals, and quantifies how equal-objective alternate
//! optima push otherwise-identical runs apart.
//!
//! The optimization kernel is generic over the scalar type (see
//! [`scalar::Scalar`]); the aliases below pin the `f64` instantiation the
//! rest of the crate works with.

pub mod calendar;
pub mod degeneracy;
pub mod formulation;
pub mod horizon;
pub mod io;
pub mod metrics;
pub mod pricing;
pub mod problem;
pub mod rng;
pub mod scalar;
pub mod series;
pub mod solver;
pub mod synth;
pub mod system;

pub use calendar::Timestamp;
pub use degeneracy::{
    build_degenerate_instance, detect_alternate_optima, myopia_certified_gap, twin_run,
    ComparisonReport, DegenerateKind, TwinConfig,
};
pub use formulation::{
    build_window, perturb_storage_costs, solve_window, CostConfig, EfficiencyConvention,
    FormulationOptions, InitialConditions, VariableCatalog, WindowMilp,
};
pub use horizon::{
    audit_ledger, propagate_state, run_simulation, splice_committed, HorizonPolicy,
    SimulationLedger,
};
pub use metrics::{
    cumulative_tpc_delta, curtailment, equivalent_cycles, metric_report, soc_delta,
    storage_revenue, total_production_cost, MetricReport,
};
pub use pricing::{compute_lmps, price_stats, price_stats_weighted, PriceSeries};
pub use scalar::Scalar;
pub use series::TimeSeriesFrame;
pub use solver::{
    enumerate_binaries_oracle, solve_lp, solve_milp, PivotRule, SolveError, SolveSettings,
    SolveStatus, TieBreak,
};
pub use synth::{synth_system, SynthParams};
pub use system::{net_load, validate_system, SystemSpec, ValidationReport};

/// Concrete `f64` MILP instance used throughout the simulation pipeline.
pub type MilpProblem = problem::Problem<f64>;
/// Concrete `f64` solver result.
pub type SolveResult = solver::SolveResult<f64>;

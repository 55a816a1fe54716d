//! Deterministic LP/MILP solver.
//!
//! A bounded-variable revised simplex (sparse LU + product-form updates)
//! under best-first branch-and-bound. Determinism is the design driver:
//! identical `(problem, settings)` produce bit-identical results, and the
//! tie-break policy is the only thing that distinguishes two otherwise
//! equivalent solver "personalities".

mod bnb;
mod lu;
mod simplex;

pub use bnb::{enumerate_binaries_oracle, solve_milp, solve_milp_with, ProposeFn};
pub use simplex::{solve_lp, Basis, VarStatus};

use crate::rng::SplitMix64;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Exploration/tie-break policy: fixes the scan order of columns in
/// simplex pricing and ratio ties, the branching variable tie-break, and
/// which branch child is explored first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    LexForward,
    LexReverse,
    SeededShuffle(u64),
}

impl TieBreak {
    /// Column scan order over `n` columns.
    pub fn order(&self, n: usize) -> Vec<u32> {
        let mut order: Vec<u32> = (0..n as u32).collect();
        match self {
            TieBreak::LexForward => {}
            TieBreak::LexReverse => order.reverse(),
            TieBreak::SeededShuffle(seed) => {
                let mut rng = SplitMix64::new(*seed);
                rng.shuffle(&mut order);
            }
        }
        order
    }

    /// True when the down-branch (floor) is explored before the up-branch.
    pub fn branch_down_first(&self) -> bool {
        !matches!(self, TieBreak::LexReverse)
    }
}

impl fmt::Display for TieBreak {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TieBreak::LexForward => write!(f, "lex_forward"),
            TieBreak::LexReverse => write!(f, "lex_reverse"),
            TieBreak::SeededShuffle(s) => write!(f, "seeded_shuffle:{s}"),
        }
    }
}

impl std::str::FromStr for TieBreak {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lex_forward" => Ok(TieBreak::LexForward),
            "lex_reverse" => Ok(TieBreak::LexReverse),
            other => {
                if let Some(seed) = other.strip_prefix("seeded_shuffle:") {
                    seed.parse::<u64>()
                        .map(TieBreak::SeededShuffle)
                        .map_err(|_| format!("bad seeded_shuffle seed in `{other}`"))
                } else {
                    Err(format!(
                        "unknown tie-break `{other}` (expected lex_forward, lex_reverse, seeded_shuffle:<seed>)"
                    ))
                }
            }
        }
    }
}

/// Entering-variable selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PivotRule {
    /// Bland's least-index rule (in policy order). Anti-cycling by itself.
    Bland,
    /// Dantzig pricing with policy-order tie-breaking; falls back to
    /// Bland's rule after a run of degenerate steps so cycling terminates.
    DantzigLexico,
}

impl fmt::Display for PivotRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PivotRule::Bland => write!(f, "bland"),
            PivotRule::DantzigLexico => write!(f, "dantzig_lexico"),
        }
    }
}

impl std::str::FromStr for PivotRule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bland" => Ok(PivotRule::Bland),
            "dantzig_lexico" => Ok(PivotRule::DantzigLexico),
            other => Err(format!("unknown pivot rule `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveSettings {
    /// Relative MIP gap at which branch-and-bound terminates.
    pub rel_gap: f64,
    /// Wall-clock limit in seconds.
    pub time_limit: f64,
    pub tie_break: TieBreak,
    pub pivot_rule: PivotRule,
    /// One line per branch-and-bound node on stderr.
    pub trace: bool,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            rel_gap: 1e-4,
            time_limit: 1000.0,
            tie_break: TieBreak::LexForward,
            pivot_rule: PivotRule::DantzigLexico,
            trace: false,
        }
    }
}

impl SolveSettings {
    pub fn with_tie_break(mut self, tb: TieBreak) -> Self {
        self.tie_break = tb;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    OptimalWithinGap,
    TimeLimitIncumbent,
    Infeasible,
    Unbounded,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::OptimalWithinGap => "optimal_within_gap",
            SolveStatus::TimeLimitIncumbent => "time_limit_incumbent",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("time limit reached with no incumbent")]
    TimeLimitNoIncumbent,
    #[error("binary count {count} exceeds oracle guard {guard}")]
    OracleGuard { count: usize, guard: usize },
    #[error("numerical failure in simplex: {0}")]
    Numerical(String),
    #[error("problem is malformed: {0}")]
    Malformed(#[from] crate::problem::ProblemError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<S> {
    pub status: SolveStatus,
    pub objective: S,
    pub best_bound: S,
    /// Primal values per problem column (catalog order).
    pub primal: Vec<S>,
    /// Row duals; present for LP solves only.
    pub duals: Option<Vec<S>>,
    /// Relative gap `(objective - best_bound) / max(1, |objective|)`.
    pub gap: S,
    pub wall_time: f64,
    pub node_count: u64,
    pub simplex_iterations: u64,
    /// Rows still violated when status is `Infeasible` (certificate summary).
    pub infeasible_rows: Vec<String>,
}

impl<S: Scalar> SolveResult<S> {
    pub fn rel_gap_of(objective: S, bound: S) -> S {
        (objective - bound) / S::one().max(objective.abs())
    }
}

pub mod verify;

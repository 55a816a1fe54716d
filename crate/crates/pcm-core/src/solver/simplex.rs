//! Bounded-variable revised primal simplex.
//!
//! Internally every row `lo <= a.x <= hi` gets a logical variable with
//! those bounds (`a.x - s = 0`), so the augmented system is `[A -I] v = 0`
//! and all structure lives in the bounds. Phase 1 minimizes the sum of
//! bound violations of basic variables with a short-step ratio test;
//! phase 2 runs the configured pricing rule with a Bland fallback after a
//! run of degenerate steps, which guarantees termination.
//!
//! All scans run in the tie-break policy's column order and every tie has
//! a deterministic resolution, so two settings that differ only in policy
//! are two reproducible solver "personalities".

use super::lu::{LuFactor, SparseVec};
use super::{PivotRule, SolveError, SolveResult, SolveSettings, SolveStatus};
use crate::problem::Problem;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable parked at zero.
    Free,
}

/// Warm-start basis: one status per column of the augmented system
/// (structural columns first, then one logical per row).
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub status: Vec<VarStatus>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpOutcome<S> {
    pub status: LpStatus,
    /// Structural primal values.
    pub x: Vec<S>,
    /// Row duals (original row order).
    pub row_duals: Vec<S>,
    pub objective: S,
    pub iterations: u64,
    pub basis: Basis,
    /// Rows whose logical is still out of bounds at a phase-1 optimum.
    pub infeasible_rows: Vec<usize>,
}

pub(crate) struct LpTask<'a, S> {
    pub problem: &'a Problem<S>,
    pub col_lower: &'a [S],
    pub col_upper: &'a [S],
    pub order: &'a [u32],
    pub pivot_rule: PivotRule,
    pub warm: Option<&'a Basis>,
}

const REFACTOR_EVERY: u64 = 64;
const STALL_LIMIT: u64 = 400;

struct Eta<S> {
    pos: usize,
    entries: Vec<(usize, S)>,
    pivot: S,
}

struct Simplex<'a, S> {
    n: usize,
    m: usize,
    nn: usize,
    cols: Vec<SparseVec<S>>,
    cost: Vec<S>,
    lower: Vec<S>,
    upper: Vec<S>,
    order: &'a [u32],
    order_pos: Vec<u32>,
    pivot_rule: PivotRule,

    x: Vec<S>,
    status: Vec<VarStatus>,
    basic: Vec<usize>,
    lu: Option<LuFactor<S>>,
    etas: Vec<Eta<S>>,
    pivots_since_factor: u64,
    iterations: u64,
    degenerate_run: u64,
    bland_mode: bool,

    // scratch
    row_work: Vec<S>,
    ftran_out: Vec<S>,
    w: Vec<S>,
    y: Vec<S>,
    cb: Vec<S>,
}

enum Entering {
    None,
    Col(usize),
}

enum RatioOutcome<S> {
    Flip(S),
    Pivot { tau: S, pos: usize, to_upper: bool },
    Unblocked,
}

impl<'a, S: Scalar> Simplex<'a, S> {
    fn new(task: &LpTask<'a, S>) -> Self {
        let p = task.problem;
        let n = p.num_cols();
        let m = p.num_rows();
        let nn = n + m;
        let mut cols: Vec<SparseVec<S>> = (0..nn).map(|_| SparseVec::default()).collect();
        for r in 0..m {
            for (c, v) in p.row(r) {
                cols[c].push(r, v);
            }
            cols[n + r].push(r, -S::one());
        }
        let mut order_pos = vec![0u32; nn];
        for (pos, &c) in task.order.iter().enumerate() {
            order_pos[c as usize] = pos as u32;
        }
        let mut cost = vec![S::zero(); nn];
        cost[..n].copy_from_slice(&p.objective);
        let mut lower = vec![S::zero(); nn];
        let mut upper = vec![S::zero(); nn];
        lower[..n].copy_from_slice(task.col_lower);
        upper[..n].copy_from_slice(task.col_upper);
        for r in 0..m {
            lower[n + r] = p.row_lower[r];
            upper[n + r] = p.row_upper[r];
        }
        Simplex {
            n,
            m,
            nn,
            cols,
            cost,
            lower,
            upper,
            order: task.order,
            order_pos,
            pivot_rule: task.pivot_rule,
            x: vec![S::zero(); nn],
            status: vec![VarStatus::AtLower; nn],
            basic: Vec::with_capacity(m),
            lu: None,
            etas: Vec::new(),
            pivots_since_factor: 0,
            iterations: 0,
            degenerate_run: 0,
            bland_mode: false,
            row_work: vec![S::zero(); m],
            ftran_out: Vec::with_capacity(m),
            w: Vec::with_capacity(m),
            y: Vec::with_capacity(m),
            cb: vec![S::zero(); m],
        }
    }

    fn nonbasic_rest_value(&self, j: usize) -> (VarStatus, S) {
        let lo = self.lower[j];
        let hi = self.upper[j];
        if lo > -S::infinity() {
            (VarStatus::AtLower, lo)
        } else if hi < S::infinity() {
            (VarStatus::AtUpper, hi)
        } else {
            (VarStatus::Free, S::zero())
        }
    }

    fn slack_basis(&mut self) {
        for j in 0..self.nn {
            let (st, v) = self.nonbasic_rest_value(j);
            self.status[j] = st;
            self.x[j] = v;
        }
        self.basic.clear();
        for r in 0..self.m {
            self.basic.push(self.n + r);
            self.status[self.n + r] = VarStatus::Basic;
        }
    }

    fn load_basis(&mut self, warm: &Basis) -> bool {
        if warm.status.len() != self.nn {
            return false;
        }
        let count = warm
            .status
            .iter()
            .filter(|&&s| s == VarStatus::Basic)
            .count();
        if count != self.m {
            return false;
        }
        self.basic.clear();
        for j in 0..self.nn {
            match warm.status[j] {
                VarStatus::Basic => {
                    self.status[j] = VarStatus::Basic;
                    self.basic.push(j);
                }
                VarStatus::AtLower => {
                    // Bounds may have changed since the basis was saved.
                    if self.lower[j] > -S::infinity() {
                        self.status[j] = VarStatus::AtLower;
                        self.x[j] = self.lower[j];
                    } else {
                        let (st, v) = self.nonbasic_rest_value(j);
                        self.status[j] = st;
                        self.x[j] = v;
                    }
                }
                VarStatus::AtUpper => {
                    if self.upper[j] < S::infinity() {
                        self.status[j] = VarStatus::AtUpper;
                        self.x[j] = self.upper[j];
                    } else {
                        let (st, v) = self.nonbasic_rest_value(j);
                        self.status[j] = st;
                        self.x[j] = v;
                    }
                }
                VarStatus::Free => {
                    self.status[j] = VarStatus::Free;
                    self.x[j] = S::zero();
                }
            }
        }
        true
    }

    /// Factorize the current basis; deterministic band-friendly ordering.
    fn refactor(&mut self) -> Result<(), SolveError> {
        self.basic.sort_unstable_by_key(|&j| {
            let first = self.cols[j].idx.first().copied().unwrap_or(usize::MAX);
            (first, j)
        });
        let col_refs: Vec<&SparseVec<S>> = self.basic.iter().map(|&j| &self.cols[j]).collect();
        match LuFactor::factorize(self.m, &col_refs) {
            Ok(lu) => {
                self.lu = Some(lu);
                self.etas.clear();
                self.pivots_since_factor = 0;
                Ok(())
            }
            Err(e) => Err(SolveError::Numerical(format!(
                "singular basis at column {}",
                e.column
            ))),
        }
    }

    fn recompute_basic_values(&mut self) {
        for v in self.row_work.iter_mut() {
            *v = S::zero();
        }
        for j in 0..self.nn {
            if self.status[j] != VarStatus::Basic && self.x[j] != S::zero() {
                let xj = self.x[j];
                let col = &self.cols[j];
                for (&r, &v) in col.idx.iter().zip(&col.val) {
                    self.row_work[r] -= v * xj;
                }
            }
        }
        self.ftran_full_from_row_work();
        for p in 0..self.m {
            self.x[self.basic[p]] = self.ftran_out[p];
        }
    }

    /// FTRAN of whatever is loaded in `row_work` (consumed).
    fn ftran_full_from_row_work(&mut self) {
        let lu = self.lu.as_ref().expect("factorized");
        lu.ftran(&mut self.row_work, &mut self.ftran_out);
        for eta in &self.etas {
            let xr = self.ftran_out[eta.pos] / eta.pivot;
            if xr != S::zero() {
                for &(i, d) in &eta.entries {
                    self.ftran_out[i] -= d * xr;
                }
            }
            self.ftran_out[eta.pos] = xr;
        }
    }

    fn ftran_col(&mut self, j: usize) {
        let col = &self.cols[j];
        for (&r, &v) in col.idx.iter().zip(&col.val) {
            self.row_work[r] = v;
        }
        self.ftran_full_from_row_work();
        std::mem::swap(&mut self.w, &mut self.ftran_out);
    }

    /// BTRAN of the basis-position cost vector in `cb` into row duals `y`.
    fn btran_cb(&mut self) {
        let mut c = self.cb.clone();
        for eta in self.etas.iter().rev() {
            let mut acc = c[eta.pos];
            for &(i, d) in &eta.entries {
                acc -= d * c[i];
            }
            c[eta.pos] = acc / eta.pivot;
        }
        let lu = self.lu.as_ref().expect("factorized");
        lu.btran(&c, &mut self.y);
    }

    fn reduced_cost(&self, j: usize, phase1: bool) -> S {
        let cj = if phase1 { S::zero() } else { self.cost[j] };
        let col = &self.cols[j];
        let mut dot = S::zero();
        for (&r, &v) in col.idx.iter().zip(&col.val) {
            dot += v * self.y[r];
        }
        cj - dot
    }

    fn violation(&self, j: usize) -> S {
        let v = self.x[j];
        (self.lower[j] - v).max(v - self.upper[j]).max(S::zero())
    }

    fn max_infeasibility(&self) -> S {
        let mut worst = S::zero();
        for &j in &self.basic {
            worst = worst.max(self.violation(j));
        }
        worst
    }

    /// Phase-1 cost per basis position: -1 below lower, +1 above upper.
    fn phase1_costs(&mut self) -> bool {
        let ftol = S::feas_tol();
        let mut any = false;
        for p in 0..self.m {
            let j = self.basic[p];
            let v = self.x[j];
            self.cb[p] = if v < self.lower[j] - ftol {
                any = true;
                -S::one()
            } else if v > self.upper[j] + ftol {
                any = true;
                S::one()
            } else {
                S::zero()
            };
        }
        any
    }

    fn phase2_costs(&mut self) {
        for p in 0..self.m {
            self.cb[p] = self.cost[self.basic[p]];
        }
    }

    fn price(&mut self, phase1: bool) -> Entering {
        let tol = S::opt_tol().max(S::feas_tol() * S::c(0.01));
        let bland = self.bland_mode || self.pivot_rule == PivotRule::Bland;
        let mut best: Option<(usize, S)> = None;
        for &jo in self.order {
            let j = jo as usize;
            if self.status[j] == VarStatus::Basic {
                continue;
            }
            if self.upper[j] - self.lower[j] <= S::zero() {
                continue; // fixed
            }
            let d = self.reduced_cost(j, phase1);
            let score = match self.status[j] {
                VarStatus::AtLower => -d,
                VarStatus::AtUpper => d,
                VarStatus::Free => d.abs(),
                VarStatus::Basic => unreachable!(),
            };
            if score > tol {
                if bland {
                    return Entering::Col(j);
                }
                match best {
                    Some((_, s)) if score <= s => {}
                    _ => best = Some((j, score)),
                }
            }
        }
        match best {
            Some((j, _)) => Entering::Col(j),
            None => Entering::None,
        }
    }

    /// Two-pass (Harris) ratio test: pass 1 finds the tightest step with
    /// every blocking bound relaxed by the feasibility tolerance, pass 2
    /// picks the largest pivot among candidates whose strict ratio fits
    /// under that relaxed step. Tiny pivots are what destabilize the eta
    /// chain, so stability wins over the exact minimum ratio.
    fn ratio_test(&self, q: usize, sigma: S, phase1: bool, bland: bool) -> RatioOutcome<S> {
        let ftol = S::feas_tol();
        let piv_tol = S::c(1e-8);
        let inf = S::infinity();
        let range = self.upper[q] - self.lower[q];
        let flip = if range < inf { range } else { inf };

        // (pos, strict ratio, relaxed ratio, to_upper)
        let mut candidates: Vec<(usize, S, S, bool)> = Vec::new();
        let mut theta_max = flip;
        for p in 0..self.m {
            let wp = self.w[p];
            if wp.abs() <= piv_tol {
                continue;
            }
            let g = sigma * wp; // x_B[p] moves at rate -g
            let j = self.basic[p];
            let v = self.x[j];
            let lo = self.lower[j];
            let hi = self.upper[j];
            let (target, to_upper) = if phase1 && v < lo - ftol {
                if g < S::zero() {
                    (lo, false)
                } else {
                    continue;
                }
            } else if phase1 && v > hi + ftol {
                if g > S::zero() {
                    (hi, true)
                } else {
                    continue;
                }
            } else if g > S::zero() {
                if lo <= -inf {
                    continue;
                }
                (lo, false)
            } else {
                if hi >= inf {
                    continue;
                }
                (hi, true)
            };
            let strict = ((v - target) / g).max(S::zero());
            let relaxed = strict + (ftol / g.abs());
            theta_max = theta_max.min(relaxed);
            candidates.push((p, strict, relaxed, to_upper));
        }

        // Pass 2: among candidates admissible under theta_max, prefer the
        // largest pivot (or the least policy index under Bland's rule).
        let mut leave: Option<(usize, S, bool, S, u32)> = None; // pos, tau, to_upper, |w|, opos
        for &(p, strict, _, to_upper) in &candidates {
            if strict > theta_max {
                continue;
            }
            let wmag = self.w[p].abs();
            let opos = self.order_pos[self.basic[p]];
            let better = match &leave {
                None => true,
                Some((bp, _, _, bw, bo)) => {
                    if bland {
                        opos < *bo
                    } else {
                        wmag > *bw || (wmag == *bw && p < *bp)
                    }
                }
            };
            if better {
                leave = Some((p, strict, to_upper, wmag, opos));
            }
        }

        match leave {
            Some((pos, tau, to_upper, _, _)) => RatioOutcome::Pivot {
                tau: tau.min(flip),
                pos,
                to_upper,
            },
            // No admissible blocker: either every strict ratio sits beyond
            // the flip bound (step to the flip) or nothing blocks at all.
            None if flip < inf => RatioOutcome::Flip(flip),
            None => RatioOutcome::Unblocked,
        }
    }

    fn apply_step(&mut self, q: usize, sigma: S, tau: S) {
        if tau != S::zero() {
            for p in 0..self.m {
                let wp = self.w[p];
                if wp != S::zero() {
                    let j = self.basic[p];
                    self.x[j] -= sigma * tau * wp;
                }
            }
            self.x[q] += sigma * tau;
        }
    }

    fn pivot(&mut self, q: usize, pos: usize, to_upper: bool) {
        let leaving = self.basic[pos];
        self.status[leaving] = if to_upper {
            VarStatus::AtUpper
        } else {
            VarStatus::AtLower
        };
        self.x[leaving] = if to_upper {
            self.upper[leaving]
        } else {
            self.lower[leaving]
        };
        self.basic[pos] = q;
        self.status[q] = VarStatus::Basic;
        let mut entries: Vec<(usize, S)> = Vec::new();
        let mut pivot = S::zero();
        for p in 0..self.m {
            let wp = self.w[p];
            if wp != S::zero() {
                if p == pos {
                    pivot = wp;
                } else {
                    entries.push((p, wp));
                }
            }
        }
        self.etas.push(Eta {
            pos,
            entries,
            pivot,
        });
        self.pivots_since_factor += 1;
    }

    fn run_phase(&mut self, phase1: bool, max_iter: u64) -> Result<LpStatus, SolveError> {
        loop {
            if self.iterations >= max_iter {
                return Err(SolveError::Numerical(format!(
                    "iteration limit {max_iter} reached"
                )));
            }
            if self.pivots_since_factor >= REFACTOR_EVERY {
                self.refactor()?;
                self.recompute_basic_values();
            }
            if phase1 {
                if !self.phase1_costs() {
                    return Ok(LpStatus::Optimal); // feasible
                }
            } else {
                self.phase2_costs();
            }
            self.btran_cb();
            let q = match self.price(phase1) {
                Entering::None => {
                    return Ok(if phase1 {
                        LpStatus::Infeasible
                    } else {
                        LpStatus::Optimal
                    });
                }
                Entering::Col(q) => q,
            };
            self.iterations += 1;
            let d_q = self.reduced_cost(q, phase1);
            let sigma = match self.status[q] {
                VarStatus::AtLower => S::one(),
                VarStatus::AtUpper => -S::one(),
                VarStatus::Free => {
                    if d_q < S::zero() {
                        S::one()
                    } else {
                        -S::one()
                    }
                }
                VarStatus::Basic => unreachable!(),
            };
            self.ftran_col(q);
            let bland = self.bland_mode || self.pivot_rule == PivotRule::Bland;
            match self.ratio_test(q, sigma, phase1, bland) {
                RatioOutcome::Flip(tau) => {
                    self.apply_step(q, sigma, tau);
                    self.status[q] = match self.status[q] {
                        VarStatus::AtLower => VarStatus::AtUpper,
                        VarStatus::AtUpper => VarStatus::AtLower,
                        other => other,
                    };
                    // Snap exactly onto the bound.
                    self.x[q] = match self.status[q] {
                        VarStatus::AtLower => self.lower[q],
                        VarStatus::AtUpper => self.upper[q],
                        _ => self.x[q],
                    };
                    self.note_step(tau);
                }
                RatioOutcome::Pivot { tau, pos, to_upper } => {
                    self.apply_step(q, sigma, tau);
                    self.pivot(q, pos, to_upper);
                    self.note_step(tau);
                }
                RatioOutcome::Unblocked => {
                    return if phase1 {
                        Err(SolveError::Numerical(
                            "phase-1 direction unblocked".into(),
                        ))
                    } else {
                        Ok(LpStatus::Unbounded)
                    };
                }
            }
        }
    }

    fn note_step(&mut self, tau: S) {
        if tau.abs() <= S::c(1e-9) {
            self.degenerate_run += 1;
            if self.degenerate_run >= STALL_LIMIT {
                self.bland_mode = true;
            }
        } else {
            self.degenerate_run = 0;
            self.bland_mode = false;
        }
    }

    fn snapshot_basis(&self) -> Basis {
        Basis {
            status: self.status.clone(),
        }
    }
}

pub(crate) fn run_simplex<S: Scalar>(task: &LpTask<'_, S>) -> Result<LpOutcome<S>, SolveError> {
    let mut s = Simplex::new(task);
    let max_iter = 2_000_000u64.min(200_000 + 200 * (s.nn as u64));

    let warm_ok = match task.warm {
        Some(b) => s.load_basis(b),
        None => false,
    };
    if !warm_ok {
        s.slack_basis();
    }
    if s.refactor().is_err() {
        // Degenerate warm bases can be numerically singular; restart cold.
        s.slack_basis();
        s.refactor()?;
    }
    s.recompute_basic_values();

    let mut status;
    let mut rounds = 0;
    loop {
        status = s.run_phase(true, max_iter)?;
        if status == LpStatus::Infeasible {
            break;
        }
        status = s.run_phase(false, max_iter)?;
        // Guard against drift: refactor, recompute, and re-verify.
        s.refactor()?;
        s.recompute_basic_values();
        if status != LpStatus::Optimal || s.max_infeasibility() <= S::feas_tol() {
            break;
        }
        rounds += 1;
        if rounds > 3 {
            return Err(SolveError::Numerical(
                "repeated feasibility loss after cleanup".into(),
            ));
        }
    }

    // Final duals under the phase-2 objective.
    s.phase2_costs();
    s.btran_cb();
    let x: Vec<S> = s.x[..s.n].to_vec();
    let objective = task.problem.objective_value(&x);
    let infeasible_rows: Vec<usize> = if status == LpStatus::Infeasible {
        (0..s.m)
            .filter(|&r| {
                let j = s.n + r;
                s.status[j] == VarStatus::Basic && s.violation(j) > S::feas_tol()
            })
            .collect()
    } else {
        Vec::new()
    };

    Ok(LpOutcome {
        status: match status {
            LpStatus::Optimal => LpStatus::Optimal,
            other => other,
        },
        x,
        row_duals: s.y.clone(),
        objective,
        iterations: s.iterations,
        basis: s.snapshot_basis(),
        infeasible_rows,
    })
}

/// Solve the continuous relaxation (integrality ignored) and return the
/// optimal basic solution with row duals.
pub fn solve_lp<S: Scalar>(
    problem: &Problem<S>,
    settings: &SolveSettings,
) -> Result<SolveResult<S>, SolveError> {
    problem.check()?;
    let start = std::time::Instant::now();
    let order = settings.tie_break.order(problem.num_cols() + problem.num_rows());
    let task = LpTask {
        problem,
        col_lower: &problem.col_lower,
        col_upper: &problem.col_upper,
        order: &order,
        pivot_rule: settings.pivot_rule,
        warm: None,
    };
    let out = run_simplex(&task)?;
    let status = match out.status {
        LpStatus::Optimal => SolveStatus::OptimalWithinGap,
        LpStatus::Infeasible => SolveStatus::Infeasible,
        LpStatus::Unbounded => SolveStatus::Unbounded,
    };
    let objective = out.objective;
    Ok(SolveResult {
        status,
        objective,
        best_bound: objective,
        primal: out.x,
        duals: Some(out.row_duals),
        gap: S::zero(),
        wall_time: start.elapsed().as_secs_f64(),
        node_count: 1,
        simplex_iterations: out.iterations,
        infeasible_rows: out
            .infeasible_rows
            .iter()
            .map(|&r| problem.row_names[r].clone())
            .collect(),
    })
}

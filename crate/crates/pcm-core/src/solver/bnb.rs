//! Best-first branch-and-bound over the integrality-marked columns.
//!
//! Node order, branching variable, and branch direction are fully
//! determined by the tie-break policy; incumbents come from integral LP
//! relaxations and a deterministic fix-and-dive rounding heuristic. Child
//! nodes warm-start from the parent basis.

use super::simplex::{run_simplex, Basis, LpOutcome, LpStatus, LpTask};
use super::{SolveError, SolveResult, SolveSettings, SolveStatus};
use crate::problem::Problem;
use crate::scalar::Scalar;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

const INT_TOL: f64 = 1e-6;
const DIVE_EVERY: u64 = 25;
const MAX_DIVE_STEPS: usize = 400;

/// Maps an LP relaxation point to candidate full assignments of the
/// integer columns (each as `(col, value)` fixings). Lets the caller
/// supply structure-aware rounding; candidates are verified by an LP
/// solve before becoming incumbents.
pub type ProposeFn<'a, S> = dyn Fn(&[S]) -> Vec<Vec<(usize, S)>> + 'a;

struct Node<S> {
    bound: f64,
    id: u64,
    overrides: Vec<(usize, S, S)>,
    basis: Option<Basis>,
    depth: u32,
}

struct Key(f64, u64);

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0 && self.1 == other.1
    }
}
impl Eq for Key {}
impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we pop the smallest bound,
        // then the smallest id (insertion order) among equal bounds.
        other
            .0
            .partial_cmp(&self.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.1.cmp(&self.1))
    }
}

struct HeapEntry<S> {
    key: Key,
    node: Node<S>,
}

impl<S> PartialEq for HeapEntry<S> {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}
impl<S> Eq for HeapEntry<S> {}
impl<S> PartialOrd for HeapEntry<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<S> Ord for HeapEntry<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key)
    }
}

struct Searcher<'a, S: Scalar> {
    problem: &'a Problem<S>,
    order: Vec<u32>,
    order_pos: Vec<u32>,
    settings: &'a SolveSettings,
    int_cols: Vec<usize>,
    lower: Vec<S>,
    upper: Vec<S>,
    iterations: u64,
}

impl<'a, S: Scalar> Searcher<'a, S> {
    fn solve_with(
        &mut self,
        overrides: &[(usize, S, S)],
        warm: Option<&Basis>,
    ) -> Result<LpOutcome<S>, SolveError> {
        for &(c, lo, hi) in overrides {
            self.lower[c] = lo;
            self.upper[c] = hi;
        }
        let task = LpTask {
            problem: self.problem,
            col_lower: &self.lower,
            col_upper: &self.upper,
            order: &self.order,
            pivot_rule: self.settings.pivot_rule,
            warm,
        };
        let out = run_simplex(&task);
        for &(c, _, _) in overrides {
            self.lower[c] = self.problem.col_lower[c];
            self.upper[c] = self.problem.col_upper[c];
        }
        let out = out?;
        self.iterations += out.iterations;
        Ok(out)
    }

    fn fractional(&self, x: &[S]) -> Vec<(usize, f64)> {
        self.int_cols
            .iter()
            .filter_map(|&c| {
                let v = x[c].to_f64_lossy();
                let frac = (v - v.round()).abs();
                if frac > INT_TOL {
                    Some((c, frac.min(1.0 - frac)))
                } else {
                    None
                }
            })
            .collect()
    }

    /// Most fractional first; ties by policy order.
    fn pick_branch(&self, fracs: &[(usize, f64)]) -> usize {
        let mut best = fracs[0].0;
        let mut best_score = fracs[0].1;
        for &(c, score) in &fracs[1..] {
            if score > best_score
                || (score == best_score && self.order_pos[c] < self.order_pos[best])
            {
                best = c;
                best_score = score;
            }
        }
        best
    }

    /// Deterministic fix-and-dive: pin integral-valued integers, then fix
    /// the most fractional one at its rounded value, re-solve warm, repeat.
    fn dive(
        &mut self,
        start_overrides: &[(usize, S, S)],
        start: &LpOutcome<S>,
    ) -> Result<Option<(S, Vec<S>)>, SolveError> {
        let mut overrides = start_overrides.to_vec();
        let mut sol = start.clone();
        for _ in 0..MAX_DIVE_STEPS {
            let fracs = self.fractional(&sol.x);
            if fracs.is_empty() {
                return Ok(Some((sol.objective, sol.x)));
            }
            for &c in &self.int_cols {
                let v = sol.x[c].to_f64_lossy();
                if (v - v.round()).abs() <= INT_TOL {
                    let r = S::c(v.round());
                    overrides.push((c, r, r));
                }
            }
            let branch = self.pick_branch(&fracs);
            let r = S::c(sol.x[branch].to_f64_lossy().round());
            overrides.push((branch, r, r));
            let next = self.solve_with(&overrides, Some(&sol.basis))?;
            match next.status {
                LpStatus::Optimal => sol = next,
                _ => return Ok(None),
            }
        }
        Ok(None)
    }
}

fn rel_gap<S: Scalar>(objective: S, bound: S) -> S {
    ((objective - bound) / S::one().max(objective.abs())).max(S::zero())
}

/// Branch-and-bound over the integer columns; terminates at the relative
/// gap or the time limit. Bit-deterministic given `(problem, settings)`
/// whenever the time limit does not bind.
pub fn solve_milp<S: Scalar>(
    problem: &Problem<S>,
    settings: &SolveSettings,
) -> Result<SolveResult<S>, SolveError> {
    solve_milp_with(problem, settings, None)
}

/// `solve_milp` with an optional incumbent-proposal hook.
pub fn solve_milp_with<S: Scalar>(
    problem: &Problem<S>,
    settings: &SolveSettings,
    propose: Option<&ProposeFn<'_, S>>,
) -> Result<SolveResult<S>, SolveError> {
    problem.check()?;
    let start = Instant::now();
    let nn = problem.num_cols() + problem.num_rows();
    let order = settings.tie_break.order(nn);
    let mut order_pos = vec![0u32; nn];
    for (pos, &c) in order.iter().enumerate() {
        order_pos[c as usize] = pos as u32;
    }
    let int_cols: Vec<usize> = (0..problem.num_cols())
        .filter(|&c| problem.integer[c])
        .collect();

    let mut s = Searcher {
        problem,
        order,
        order_pos,
        settings,
        int_cols,
        lower: problem.col_lower.clone(),
        upper: problem.col_upper.clone(),
        iterations: 0,
    };

    let rel = S::c(settings.rel_gap);
    let mut heap: BinaryHeap<HeapEntry<S>> = BinaryHeap::new();
    let mut next_id: u64 = 0;
    heap.push(HeapEntry {
        key: Key(f64::NEG_INFINITY, next_id),
        node: Node {
            bound: f64::NEG_INFINITY,
            id: next_id,
            overrides: Vec::new(),
            basis: None,
            depth: 0,
        },
    });
    next_id += 1;

    let mut incumbent: Option<(S, Vec<S>)> = None;
    let mut best_bound: Option<S> = None;
    let mut node_count: u64 = 0;
    let mut timed_out = false;

    while let Some(entry) = heap.pop() {
        let node = entry.node;
        if start.elapsed().as_secs_f64() > settings.time_limit {
            best_bound = Some(match best_bound {
                Some(b) => b.min(S::c(node.bound)),
                None => S::c(node.bound),
            });
            timed_out = true;
            break;
        }
        // The heap is ordered by bound, so the popped node carries the
        // global lower bound among open nodes.
        if let Some((inc_obj, _)) = &incumbent {
            if node.bound > f64::NEG_INFINITY {
                let bound = S::c(node.bound);
                best_bound = Some(bound);
                if rel_gap(*inc_obj, bound) <= rel {
                    break;
                }
            }
        }

        let lp = s.solve_with(&node.overrides, node.basis.as_ref())?;
        node_count += 1;
        match lp.status {
            LpStatus::Infeasible => {
                if node.id == 0 {
                    return Ok(SolveResult {
                        status: SolveStatus::Infeasible,
                        objective: S::zero(),
                        best_bound: S::zero(),
                        primal: Vec::new(),
                        duals: None,
                        gap: S::zero(),
                        wall_time: start.elapsed().as_secs_f64(),
                        node_count,
                        simplex_iterations: s.iterations,
                        infeasible_rows: lp
                            .infeasible_rows
                            .iter()
                            .map(|&r| problem.row_names[r].clone())
                            .collect(),
                    });
                }
                continue;
            }
            LpStatus::Unbounded => {
                if node.id == 0 {
                    return Ok(SolveResult {
                        status: SolveStatus::Unbounded,
                        objective: -S::infinity(),
                        best_bound: -S::infinity(),
                        primal: lp.x,
                        duals: None,
                        gap: S::zero(),
                        wall_time: start.elapsed().as_secs_f64(),
                        node_count,
                        simplex_iterations: s.iterations,
                        infeasible_rows: Vec::new(),
                    });
                }
                return Err(SolveError::Numerical(
                    "bounded parent produced unbounded child".into(),
                ));
            }
            LpStatus::Optimal => {}
        }

        if node.id == 0 {
            best_bound = Some(lp.objective);
        }
        if let Some((inc_obj, _)) = &incumbent {
            if rel_gap(*inc_obj, lp.objective) <= rel {
                continue; // cannot improve enough
            }
        }

        let fracs = s.fractional(&lp.x);
        if fracs.is_empty() {
            let better = match &incumbent {
                None => true,
                Some((inc_obj, _)) => lp.objective < *inc_obj,
            };
            if better {
                incumbent = Some((lp.objective, lp.x));
            }
            continue;
        }

        if settings.trace {
            eprintln!(
                "node {:>6} depth {:>3} bound {:.6e} frac {} incumbent {}",
                node.id,
                node.depth,
                lp.objective.to_f64_lossy(),
                fracs.len(),
                incumbent
                    .as_ref()
                    .map(|(o, _)| format!("{:.6e}", o.to_f64_lossy()))
                    .unwrap_or_else(|| "-".into()),
            );
        }

        if node.id == 0 || node_count.is_multiple_of(DIVE_EVERY) {
            let mut proposal_landed = false;
            if let Some(f) = propose {
                for fixing in f(&lp.x) {
                    let mut overrides = node.overrides.clone();
                    for (c, v) in fixing {
                        overrides.push((c, v, v));
                    }
                    let cand = s.solve_with(&overrides, Some(&lp.basis))?;
                    if cand.status == LpStatus::Optimal && s.fractional(&cand.x).is_empty() {
                        proposal_landed = true;
                        let better = match &incumbent {
                            None => true,
                            Some((inc_obj, _)) => cand.objective < *inc_obj,
                        };
                        if better {
                            incumbent = Some((cand.objective, cand.x));
                        }
                    }
                }
            }
            if !proposal_landed {
                if let Some((obj, x)) = s.dive(&node.overrides, &lp)? {
                    let better = match &incumbent {
                        None => true,
                        Some((inc_obj, _)) => obj < *inc_obj,
                    };
                    if better {
                        incumbent = Some((obj, x));
                    }
                }
            }
        }
        if let Some((inc_obj, _)) = &incumbent {
            if rel_gap(*inc_obj, lp.objective) <= rel {
                continue;
            }
        }

        let branch = s.pick_branch(&fracs);
        let v = lp.x[branch].to_f64_lossy();
        let down = (branch, problem.col_lower[branch], S::c(v.floor()));
        let up = (branch, S::c(v.ceil()), problem.col_upper[branch]);
        let children = if settings.tie_break.branch_down_first() {
            [down, up]
        } else {
            [up, down]
        };
        for child in children {
            let mut overrides = node.overrides.clone();
            overrides.push(child);
            heap.push(HeapEntry {
                key: Key(lp.objective.to_f64_lossy(), next_id),
                node: Node {
                    bound: lp.objective.to_f64_lossy(),
                    id: next_id,
                    overrides,
                    basis: Some(lp.basis.clone()),
                    depth: node.depth + 1,
                },
            });
            next_id += 1;
        }
    }

    let wall_time = start.elapsed().as_secs_f64();
    match incumbent {
        Some((objective, primal)) => {
            let bound = match (timed_out, heap.peek(), best_bound) {
                (false, None, _) => objective, // tree exhausted
                (_, _, Some(b)) => b,
                _ => objective,
            };
            let status = if timed_out {
                SolveStatus::TimeLimitIncumbent
            } else {
                SolveStatus::OptimalWithinGap
            };
            Ok(SolveResult {
                status,
                objective,
                best_bound: bound,
                primal,
                duals: None,
                gap: rel_gap(objective, bound),
                wall_time,
                node_count,
                simplex_iterations: s.iterations,
                infeasible_rows: Vec::new(),
            })
        }
        None => {
            if timed_out {
                Err(SolveError::TimeLimitNoIncumbent)
            } else {
                // Every node pruned infeasible.
                Ok(SolveResult {
                    status: SolveStatus::Infeasible,
                    objective: S::zero(),
                    best_bound: S::zero(),
                    primal: Vec::new(),
                    duals: None,
                    gap: S::zero(),
                    wall_time,
                    node_count,
                    simplex_iterations: s.iterations,
                    infeasible_rows: Vec::new(),
                })
            }
        }
    }
}

/// Exhaustive 0/1 enumeration oracle for small instances: fixes every
/// assignment of the integer columns, solves the continuous LP, and keeps
/// the best. Independent of branch-and-bound for verification. The guard
/// is capped at 20 binaries.
pub fn enumerate_binaries_oracle<S: Scalar>(
    problem: &Problem<S>,
    settings: &SolveSettings,
    max_binaries: usize,
) -> Result<SolveResult<S>, SolveError> {
    problem.check()?;
    let start = Instant::now();
    let guard = max_binaries.min(20);
    let int_cols: Vec<usize> = (0..problem.num_cols())
        .filter(|&c| problem.integer[c])
        .collect();
    if int_cols.len() > guard {
        return Err(SolveError::OracleGuard {
            count: int_cols.len(),
            guard,
        });
    }
    let nn = problem.num_cols() + problem.num_rows();
    let order = settings.tie_break.order(nn);
    let mut s = Searcher {
        problem,
        order,
        order_pos: vec![0; nn],
        settings,
        int_cols: Vec::new(),
        lower: problem.col_lower.clone(),
        upper: problem.col_upper.clone(),
        iterations: 0,
    };

    let k = int_cols.len();
    let mut best: Option<(S, Vec<S>)> = None;
    let mut lp_count: u64 = 0;
    for mask in 0..(1u64 << k) {
        let overrides: Vec<(usize, S, S)> = int_cols
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let bit = if mask >> i & 1 == 1 { S::one() } else { S::zero() };
                (c, bit, bit)
            })
            .collect();
        let lp = s.solve_with(&overrides, None)?;
        lp_count += 1;
        if lp.status == LpStatus::Optimal {
            let better = match &best {
                None => true,
                Some((obj, _)) => lp.objective < *obj,
            };
            if better {
                best = Some((lp.objective, lp.x));
            }
        }
    }
    let wall_time = start.elapsed().as_secs_f64();
    match best {
        Some((objective, primal)) => Ok(SolveResult {
            status: SolveStatus::OptimalWithinGap,
            objective,
            best_bound: objective,
            primal,
            duals: None,
            gap: S::zero(),
            wall_time,
            node_count: lp_count,
            simplex_iterations: s.iterations,
            infeasible_rows: Vec::new(),
        }),
        None => Ok(SolveResult {
            status: SolveStatus::Infeasible,
            objective: S::zero(),
            best_bound: S::zero(),
            primal: Vec::new(),
            duals: None,
            gap: S::zero(),
            wall_time,
            node_count: lp_count,
            simplex_iterations: s.iterations,
            infeasible_rows: Vec::new(),
        }),
    }
}

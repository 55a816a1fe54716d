//! Sparse LP/MILP instance representation, generic over the scalar type.
//!
//! Every row is a range constraint `row_lower <= a.x <= row_upper`; the
//! usual senses are the special cases with one side infinite (inequalities)
//! or both sides equal (equalities). Column order is meaningful and
//! preserved everywhere, including MPS export.

use crate::scalar::Scalar;
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("column {col} referenced by row {row} is out of range")]
    BadColumn { row: usize, col: usize },
    #[error("row {0} has lower bound above upper bound")]
    EmptyRowRange(usize),
    #[error("column {0} has lower bound above upper bound")]
    EmptyColRange(usize),
    #[error("integer column {col} has incumbent value {value} farther than 1e-6 from an integer")]
    FractionalIncumbent { col: usize, value: f64 },
    #[error("integer column {0} must have bounds within {{0,1}}")]
    NonBinaryInteger(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem<S> {
    /// Objective coefficients (minimization), one per column.
    pub objective: Vec<S>,
    pub col_lower: Vec<S>,
    pub col_upper: Vec<S>,
    pub integer: Vec<bool>,
    pub col_names: Vec<String>,
    pub row_lower: Vec<S>,
    pub row_upper: Vec<S>,
    pub row_names: Vec<String>,
    /// CSR storage for row coefficients.
    row_starts: Vec<usize>,
    col_index: Vec<usize>,
    values: Vec<S>,
}

impl<S: Scalar> Default for Problem<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Problem<S> {
    pub fn new() -> Self {
        Problem {
            objective: Vec::new(),
            col_lower: Vec::new(),
            col_upper: Vec::new(),
            integer: Vec::new(),
            col_names: Vec::new(),
            row_lower: Vec::new(),
            row_upper: Vec::new(),
            row_names: Vec::new(),
            row_starts: vec![0],
            col_index: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn num_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.row_lower.len()
    }

    pub fn num_integers(&self) -> usize {
        self.integer.iter().filter(|&&b| b).count()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn add_col(
        &mut self,
        name: impl Into<String>,
        cost: S,
        lower: S,
        upper: S,
        integer: bool,
    ) -> usize {
        self.objective.push(cost);
        self.col_lower.push(lower);
        self.col_upper.push(upper);
        self.integer.push(integer);
        self.col_names.push(name.into());
        self.objective.len() - 1
    }

    /// Append a range row. Coefficients with repeated columns are summed.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        lower: S,
        upper: S,
        coeffs: &[(usize, S)],
    ) -> usize {
        let mut entries: Vec<(usize, S)> = Vec::with_capacity(coeffs.len());
        for &(c, v) in coeffs {
            if let Some(e) = entries.iter_mut().find(|(ec, _)| *ec == c) {
                e.1 += v;
            } else {
                entries.push((c, v));
            }
        }
        entries.sort_by_key(|&(c, _)| c);
        for &(c, v) in &entries {
            if v != S::zero() {
                self.col_index.push(c);
                self.values.push(v);
            }
        }
        self.row_starts.push(self.col_index.len());
        self.row_lower.push(lower);
        self.row_upper.push(upper);
        self.row_names.push(name.into());
        self.row_lower.len() - 1
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, S)> + '_ {
        let lo = self.row_starts[r];
        let hi = self.row_starts[r + 1];
        (lo..hi).map(move |k| (self.col_index[k], self.values[k]))
    }

    /// Structural checks: column references valid, ranges non-empty,
    /// integer columns binary.
    pub fn check(&self) -> Result<(), ProblemError> {
        let n = self.num_cols();
        for r in 0..self.num_rows() {
            for (c, _) in self.row(r) {
                if c >= n {
                    return Err(ProblemError::BadColumn { row: r, col: c });
                }
            }
            if self.row_lower[r] > self.row_upper[r] {
                return Err(ProblemError::EmptyRowRange(r));
            }
        }
        for c in 0..n {
            if self.col_lower[c] > self.col_upper[c] {
                return Err(ProblemError::EmptyColRange(c));
            }
            if self.integer[c]
                && (self.col_lower[c] < -S::c(1e-9) || self.col_upper[c] > S::one() + S::c(1e-9))
            {
                return Err(ProblemError::NonBinaryInteger(c));
            }
        }
        Ok(())
    }

    /// Row activities for a full primal vector.
    pub fn row_activity(&self, x: &[S]) -> Vec<S> {
        (0..self.num_rows())
            .map(|r| {
                self.row(r)
                    .fold(S::zero(), |acc, (c, v)| acc + v * x[c])
            })
            .collect()
    }

    /// Objective value of a primal vector.
    pub fn objective_value(&self, x: &[S]) -> S {
        self.objective
            .iter()
            .zip(x)
            .fold(S::zero(), |acc, (&c, &v)| acc + c * v)
    }

    /// Largest bound/row violation of a primal vector, for feasibility audits.
    pub fn max_violation(&self, x: &[S]) -> S {
        let mut worst = S::zero();
        for c in 0..self.num_cols() {
            worst = worst.max(self.col_lower[c] - x[c]).max(x[c] - self.col_upper[c]);
        }
        for (r, act) in self.row_activity(x).into_iter().enumerate() {
            worst = worst.max(self.row_lower[r] - act).max(act - self.row_upper[r]);
        }
        worst
    }

    /// Copy with every integer column's bounds pinned to the rounded
    /// incumbent value and integrality marks cleared. The continuous
    /// feasible set is otherwise identical.
    pub fn fix_integers_at(&self, incumbent: &[S]) -> Result<Problem<S>, ProblemError> {
        let mut out = self.clone();
        let tol = S::c(1e-6);
        for c in 0..self.num_cols() {
            if !self.integer[c] {
                continue;
            }
            let v = incumbent[c];
            let r = v.round();
            if (v - r).abs() > tol {
                return Err(ProblemError::FractionalIncumbent {
                    col: c,
                    value: v.to_f64_lossy(),
                });
            }
            out.col_lower[c] = r;
            out.col_upper[c] = r;
            out.integer[c] = false;
        }
        Ok(out)
    }

    /// Fixed-form MPS export. Columns and rows are emitted in catalog
    /// order under generated 8-character names (`C0000001`, `R0000001`),
    /// with RANGES for two-sided rows and BOUNDS/MARKER records for
    /// variable bounds and integrality.
    pub fn write_mps<W: Write>(&self, name: &str, w: &mut W) -> io::Result<()> {
        let inf = S::infinity();
        writeln!(w, "NAME          {name}")?;
        writeln!(w, "ROWS")?;
        writeln!(w, " N  COST")?;
        for r in 0..self.num_rows() {
            let (sense, _) = self.mps_row_sense(r);
            writeln!(w, " {}  {}", sense, mps_row(r))?;
        }
        writeln!(w, "COLUMNS")?;
        let mut in_int = false;
        let mut marker = 0usize;
        for c in 0..self.num_cols() {
            if self.integer[c] != in_int {
                let kind = if self.integer[c] { "'INTORG'" } else { "'INTEND'" };
                writeln!(
                    w,
                    "    MARKER{marker:02}                 'MARKER'                 {kind}"
                )?;
                marker += 1;
                in_int = self.integer[c];
            }
            if self.objective[c] != S::zero() {
                writeln!(
                    w,
                    "    {:<10}{:<10}{}",
                    mps_col(c),
                    "COST",
                    fmt_mps(self.objective[c])
                )?;
            }
            // CSR is row-major; gather this column's entries in row order.
            for r in 0..self.num_rows() {
                for (cc, v) in self.row(r) {
                    if cc == c {
                        writeln!(
                            w,
                            "    {:<10}{:<10}{}",
                            mps_col(c),
                            mps_row(r),
                            fmt_mps(v)
                        )?;
                    }
                }
            }
        }
        if in_int {
            writeln!(
                w,
                "    MARKER{marker:02}                 'MARKER'                 'INTEND'"
            )?;
        }
        writeln!(w, "RHS")?;
        for r in 0..self.num_rows() {
            let (_, rhs) = self.mps_row_sense(r);
            if rhs != S::zero() {
                writeln!(w, "    RHS       {:<10}{}", mps_row(r), fmt_mps(rhs))?;
            }
        }
        let has_range = (0..self.num_rows()).any(|r| {
            self.row_lower[r] > -inf && self.row_upper[r] < inf && self.row_lower[r] != self.row_upper[r]
        });
        if has_range {
            writeln!(w, "RANGES")?;
            for r in 0..self.num_rows() {
                if self.row_lower[r] > -inf
                    && self.row_upper[r] < inf
                    && self.row_lower[r] != self.row_upper[r]
                {
                    let range = self.row_upper[r] - self.row_lower[r];
                    writeln!(w, "    RNG       {:<10}{}", mps_row(r), fmt_mps(range))?;
                }
            }
        }
        writeln!(w, "BOUNDS")?;
        for c in 0..self.num_cols() {
            let lo = self.col_lower[c];
            let hi = self.col_upper[c];
            if lo == hi {
                writeln!(w, " FX BND       {:<10}{}", mps_col(c), fmt_mps(lo))?;
                continue;
            }
            if lo != S::zero() {
                if lo <= -inf {
                    writeln!(w, " MI BND       {}", mps_col(c))?;
                } else {
                    writeln!(w, " LO BND       {:<10}{}", mps_col(c), fmt_mps(lo))?;
                }
            }
            if hi < inf {
                writeln!(w, " UP BND       {:<10}{}", mps_col(c), fmt_mps(hi))?;
            }
        }
        writeln!(w, "ENDATA")?;
        Ok(())
    }

    fn mps_row_sense(&self, r: usize) -> (char, S) {
        let inf = S::infinity();
        let lo = self.row_lower[r];
        let hi = self.row_upper[r];
        if lo == hi {
            ('E', lo)
        } else if hi < inf {
            // Two-sided rows are written L with a RANGES record.
            ('L', hi)
        } else if lo > -inf {
            ('G', lo)
        } else {
            ('N', S::zero())
        }
    }
}

fn mps_col(c: usize) -> String {
    format!("C{:07}", c + 1)
}

fn mps_row(r: usize) -> String {
    format!("R{:07}", r + 1)
}

fn fmt_mps<S: Scalar>(v: S) -> String {
    format!("{:.12E}", v.to_f64_lossy())
}

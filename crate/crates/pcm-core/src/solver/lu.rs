//! Sparse LU factorization of a simplex basis.
//!
//! Left-looking (Gilbert-Peierls) with partial pivoting by magnitude,
//! deterministic tie-breaks, and triangular solves in both directions.
//! Columns are factorized in basis-position order, so FTRAN results are
//! indexed by basis position and BTRAN results by original row.

use crate::scalar::Scalar;

/// One basis column in original-row coordinates.
#[derive(Debug, Clone, Default)]
pub struct SparseVec<S> {
    pub idx: Vec<usize>,
    pub val: Vec<S>,
}

impl<S: Scalar> SparseVec<S> {
    pub fn push(&mut self, i: usize, v: S) {
        self.idx.push(i);
        self.val.push(v);
    }
}

pub struct LuFactor<S> {
    m: usize,
    /// L column k: strictly-below-pivot entries keyed by original row.
    l_cols: Vec<Vec<(usize, S)>>,
    /// U column k: entries (pivot position < k, value).
    u_cols: Vec<Vec<(usize, S)>>,
    u_diag: Vec<S>,
    /// pivot position -> original row
    perm: Vec<usize>,
    /// original row -> pivot position
    perm_inv: Vec<usize>,
    pub nnz: usize,
}

#[derive(Debug)]
pub struct Singular {
    pub column: usize,
}

const NONE: usize = usize::MAX;

impl<S: Scalar> LuFactor<S> {
    /// Factorize the m x m basis whose k-th column is `cols[k]`.
    pub fn factorize(m: usize, cols: &[&SparseVec<S>]) -> Result<Self, Singular> {
        assert_eq!(cols.len(), m);
        let mut lu = LuFactor {
            m,
            l_cols: Vec::with_capacity(m),
            u_cols: Vec::with_capacity(m),
            u_diag: Vec::with_capacity(m),
            perm: Vec::with_capacity(m),
            perm_inv: vec![NONE; m],
            nnz: 0,
        };
        let mut work = vec![S::zero(); m];
        let mut mark = vec![false; m];
        let mut pattern: Vec<usize> = Vec::with_capacity(64);
        let mut visited = vec![false; m];
        let mut stack: Vec<(usize, usize)> = Vec::new();
        let mut topo: Vec<usize> = Vec::new();
        let pivot_floor = S::pivot_tol();

        for k in 0..m {
            let col = cols[k];
            pattern.clear();
            topo.clear();

            // Symbolic reach: DFS over already-pivoted columns whose pivot
            // rows this column (or its fill) touches.
            for &i in &col.idx {
                let root = lu.perm_inv[i];
                if root == NONE || visited[root] {
                    continue;
                }
                visited[root] = true;
                stack.clear();
                stack.push((root, 0));
                while !stack.is_empty() {
                    let top = stack.len() - 1;
                    let (node, child_start) = stack[top];
                    let lcol = &lu.l_cols[node];
                    let mut pushed = false;
                    let mut child = child_start;
                    while child < lcol.len() {
                        let row = lcol[child].0;
                        child += 1;
                        let next = lu.perm_inv[row];
                        if next != NONE && !visited[next] {
                            stack[top].1 = child;
                            visited[next] = true;
                            stack.push((next, 0));
                            pushed = true;
                            break;
                        }
                    }
                    if !pushed {
                        stack.pop();
                        topo.push(node);
                    }
                }
            }

            // Numeric scatter of the column itself.
            for (&i, &v) in col.idx.iter().zip(&col.val) {
                work[i] += v;
                if !mark[i] {
                    mark[i] = true;
                    pattern.push(i);
                }
            }
            // Apply pivoted columns in topological order (reverse postorder).
            for idx in (0..topo.len()).rev() {
                let j = topo[idx];
                visited[j] = false;
                let xj = work[lu.perm[j]];
                if xj != S::zero() {
                    for &(row, lv) in &lu.l_cols[j] {
                        work[row] -= lv * xj;
                        if !mark[row] {
                            mark[row] = true;
                            pattern.push(row);
                        }
                    }
                }
            }

            // Split into U entries (pivoted rows) and pivot candidates.
            let mut u_col: Vec<(usize, S)> = Vec::new();
            let mut best: Option<(usize, S)> = None;
            for &i in &pattern {
                let v = work[i];
                if v == S::zero() {
                    continue;
                }
                let j = lu.perm_inv[i];
                if j != NONE {
                    u_col.push((j, v));
                } else {
                    let better = match best {
                        None => true,
                        Some((bi, bv)) => v.abs() > bv.abs() || (v.abs() == bv.abs() && i < bi),
                    };
                    if better {
                        best = Some((i, v));
                    }
                }
            }
            let pivot = match best {
                Some((i, v)) if v.abs() > pivot_floor => Some((i, v)),
                _ => None,
            };
            let Some((pivot_row, pivot_val)) = pivot else {
                for &i in &pattern {
                    work[i] = S::zero();
                    mark[i] = false;
                }
                return Err(Singular { column: k });
            };
            let mut l_col: Vec<(usize, S)> = Vec::new();
            for &i in &pattern {
                let v = work[i];
                work[i] = S::zero();
                mark[i] = false;
                if v == S::zero() || i == pivot_row || lu.perm_inv[i] != NONE {
                    continue;
                }
                l_col.push((i, v / pivot_val));
            }
            l_col.sort_unstable_by_key(|&(i, _)| i);
            u_col.sort_unstable_by_key(|&(j, _)| j);
            lu.nnz += l_col.len() + u_col.len() + 1;
            lu.l_cols.push(l_col);
            lu.u_cols.push(u_col);
            lu.u_diag.push(pivot_val);
            lu.perm.push(pivot_row);
            lu.perm_inv[pivot_row] = k;
        }
        Ok(lu)
    }

    /// Solve `B x = b`. `b` is indexed by original row and is consumed
    /// (zeroed on return so callers can reuse it as a work buffer);
    /// `out` is indexed by basis position.
    pub fn ftran(&self, b: &mut [S], out: &mut Vec<S>) {
        for j in 0..self.m {
            let v = b[self.perm[j]];
            if v != S::zero() {
                for &(row, lv) in &self.l_cols[j] {
                    b[row] -= lv * v;
                }
            }
        }
        out.clear();
        out.extend((0..self.m).map(|j| b[self.perm[j]]));
        for j in (0..self.m).rev() {
            let xj = out[j] / self.u_diag[j];
            out[j] = xj;
            if xj != S::zero() {
                for &(i, uv) in &self.u_cols[j] {
                    out[i] -= uv * xj;
                }
            }
        }
        for v in b.iter_mut() {
            *v = S::zero();
        }
    }

    /// Solve `B^T y = c`; `c` indexed by basis position, `y` by original row.
    pub fn btran(&self, c: &[S], y: &mut Vec<S>) {
        let mut g = vec![S::zero(); self.m];
        for j in 0..self.m {
            let mut acc = c[j];
            for &(i, uv) in &self.u_cols[j] {
                acc -= uv * g[i];
            }
            g[j] = acc / self.u_diag[j];
        }
        y.clear();
        y.resize(self.m, S::zero());
        for j in (0..self.m).rev() {
            let mut acc = g[j];
            for &(row, lv) in &self.l_cols[j] {
                acc -= lv * y[row];
            }
            y[self.perm[j]] = acc;
        }
    }
}

//! Sparse LU factorization with partial pivoting (left-looking,
//! Gilbert-Peierls style) for complex matrices.
//!
//! Columns are preordered by reverse Cuthill-McKee on the symmetrized
//! pattern, which is the one fill-reducing ordering this crate uses. Rows
//! are permuted dynamically by partial pivoting. A pivot whose magnitude
//! falls to the zero threshold signals a singular matrix so the caller can
//! perturb the shift and retry.

use crate::error::{Error, Result};
use crate::scalar::{Cx, Scalar};
use crate::sparse::SparseMatrix;
use num_complex::Complex;

const UNSET: usize = usize::MAX;

/// Opaque sparse LU data: `P A Q = L U` with unit lower triangular `L`.
pub struct Factorization<S: Scalar> {
    n: usize,
    // L columns, strictly lower part, row indices in pivot coordinates
    l_cols: Vec<Vec<(usize, Cx<S>)>>,
    // U columns, strictly upper part, plus the diagonal
    u_cols: Vec<Vec<(usize, Cx<S>)>>,
    u_diag: Vec<Cx<S>>,
    // row_pos[original_row] = pivot position
    row_pos: Vec<usize>,
    // col_order[position] = original column
    col_order: Vec<usize>,
    min_pivot: S,
    max_pivot: S,
}

/// Reverse Cuthill-McKee ordering of the symmetrized pattern of `a`.
fn rcm_order<S: Scalar>(a: &SparseMatrix<S>) -> Vec<usize> {
    let n = a.ncols();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for j in 0..n {
        let (rows, _) = a.col(j);
        for &i in rows {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.sort_by_key(|&v| degree[v]);
    for &start in &nodes {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut neigh: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            neigh.sort_by_key(|&w| degree[w]);
            for w in neigh {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Factorizes a square sparse matrix.
pub fn factorize<S: Scalar>(a: &SparseMatrix<S>) -> Result<Factorization<S>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Dimension(format!(
            "factorize requires a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    let col_order = rcm_order(a);

    let zero = Complex::new(S::zero(), S::zero());
    let mut l_cols: Vec<Vec<(usize, Cx<S>)>> = Vec::with_capacity(n);
    let mut u_cols: Vec<Vec<(usize, Cx<S>)>> = Vec::with_capacity(n);
    let mut u_diag = vec![zero; n];
    let mut row_pos = vec![UNSET; n];

    // workspace
    let mut x = vec![zero; n];
    let mut stamp = vec![usize::MAX; n];
    let mut topo: Vec<usize> = Vec::with_capacity(n);
    let mut stack: Vec<(usize, usize)> = Vec::with_capacity(n);

    let mut min_pivot = S::infinity();
    let mut max_pivot = S::zero();

    for k in 0..n {
        let col = col_order[k];
        let (a_rows, a_vals) = a.col(col);

        // symbolic: depth-first reach of the column pattern through L
        topo.clear();
        for &start in a_rows {
            if stamp[start] == k {
                continue;
            }
            stack.push((start, 0));
            stamp[start] = k;
            while let Some(top) = stack.len().checked_sub(1) {
                let (node, child) = stack[top];
                let pos = row_pos[node];
                let n_children = if pos == UNSET { 0 } else { l_cols[pos].len() };
                if child < n_children {
                    stack[top].1 += 1;
                    let next = l_cols[pos][child].0;
                    if stamp[next] != k {
                        stamp[next] = k;
                        stack.push((next, 0));
                    }
                } else {
                    topo.push(node);
                    stack.pop();
                }
            }
        }
        // postorder reversed = topological order of dependencies
        topo.reverse();

        // numeric: x = L \ A(:, col) on the reached pattern
        for &i in topo.iter() {
            x[i] = zero;
        }
        for (&i, &v) in a_rows.iter().zip(a_vals) {
            x[i] = v;
        }
        for &i in topo.iter() {
            let pos = row_pos[i];
            if pos == UNSET {
                continue;
            }
            let xi = x[i];
            if xi.norm_sqr() > S::zero() {
                for &(r, lv) in &l_cols[pos] {
                    x[r] = x[r] - lv * xi;
                }
            }
        }

        // partial pivoting over rows that are not yet pivotal
        let mut pivot_row = UNSET;
        let mut pivot_mag = S::zero();
        for &i in topo.iter() {
            if row_pos[i] == UNSET {
                let mag = x[i].norm();
                if pivot_row == UNSET || mag > pivot_mag {
                    pivot_mag = mag;
                    pivot_row = i;
                }
            }
        }
        if pivot_row == UNSET || pivot_mag <= S::TINY {
            return Err(Error::Singular {
                step: k,
                pivot: pivot_mag.to_f64().unwrap_or(0.0),
            });
        }
        let pivot = x[pivot_row];
        if pivot_mag < min_pivot {
            min_pivot = pivot_mag;
        }
        if pivot_mag > max_pivot {
            max_pivot = pivot_mag;
        }

        let mut ucol = Vec::new();
        let mut lcol = Vec::new();
        for &i in topo.iter() {
            let pos = row_pos[i];
            if pos != UNSET {
                ucol.push((pos, x[i]));
            } else if i != pivot_row {
                lcol.push((i, x[i] / pivot));
            }
        }
        row_pos[pivot_row] = k;
        u_diag[k] = pivot;
        u_cols.push(ucol);
        l_cols.push(lcol);
    }

    // remap L row indices from original rows to pivot positions
    for lcol in &mut l_cols {
        for entry in lcol.iter_mut() {
            entry.0 = row_pos[entry.0];
        }
    }

    Ok(Factorization {
        n,
        l_cols,
        u_cols,
        u_diag,
        row_pos,
        col_order,
        min_pivot,
        max_pivot,
    })
}

impl<S: Scalar> Factorization<S> {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Crude reciprocal-condition estimate from the pivot range.
    pub fn rcond_estimate(&self) -> S {
        if self.max_pivot > S::zero() {
            self.min_pivot / self.max_pivot
        } else {
            S::zero()
        }
    }

    pub fn nnz_factors(&self) -> usize {
        self.l_cols.iter().map(Vec::len).sum::<usize>()
            + self.u_cols.iter().map(Vec::len).sum::<usize>()
            + self.n
    }

    /// Solves `S x = rhs` for the factorized matrix.
    pub fn solve(&self, rhs: &[Cx<S>]) -> Result<Vec<Cx<S>>> {
        if rhs.len() != self.n {
            return Err(Error::Dimension(format!(
                "solve: rhs length {} vs n = {}",
                rhs.len(),
                self.n
            )));
        }
        let zero = Complex::new(S::zero(), S::zero());
        let mut y = vec![zero; self.n];
        for (i, &b) in rhs.iter().enumerate() {
            y[self.row_pos[i]] = b;
        }
        // forward: L has implicit unit diagonal
        for k in 0..self.n {
            let yk = y[k];
            if yk.norm_sqr() > S::zero() {
                for &(r, lv) in &self.l_cols[k] {
                    y[r] = y[r] - lv * yk;
                }
            }
        }
        // backward
        for k in (0..self.n).rev() {
            y[k] = y[k] / self.u_diag[k];
            let yk = y[k];
            if yk.norm_sqr() > S::zero() {
                for &(j, uv) in &self.u_cols[k] {
                    y[j] = y[j] - uv * yk;
                }
            }
        }
        let mut out = vec![zero; self.n];
        for k in 0..self.n {
            out[self.col_order[k]] = y[k];
        }
        Ok(out)
    }
}

//! Sparse complex matrices in compressed-column form and the matrix pencil
//! `(A, B)`.
//!
//! Storage is compressed-column because factorization and column access
//! dominate the workload. Real input promotes to complex at the boundary;
//! everything downstream is uniformly complex.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::{Cx, Scalar};
use num_complex::Complex;

/// Sparse complex matrix, compressed sparse column.
///
/// Entries in each column are sorted by row and unique; duplicate triplets
/// are summed during assembly. Explicit zeros are kept but never created
/// by assembly itself.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<S: Scalar> {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_ind: Vec<usize>,
    values: Vec<Cx<S>>,
}

impl<S: Scalar> SparseMatrix<S> {
    /// Assembles from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, Cx<S>)>,
    ) -> Result<Self> {
        for &(i, j, v) in &triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::Invalid(format!(
                    "triplet ({i}, {j}) out of bounds for {nrows}x{ncols} matrix"
                )));
            }
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::Invalid(format!("non-finite entry at ({i}, {j})")));
            }
        }
        triplets.sort_by_key(|t| (t.1, t.0));

        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_ind = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        // the sort groups duplicates adjacently; merge them here
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                let lv = values.last_mut().unwrap();
                *lv = *lv + v;
            } else {
                row_ind.push(i);
                values.push(v);
                col_ptr[j + 1] += 1;
                last = Some((i, j));
            }
        }
        for j in 0..ncols {
            col_ptr[j + 1] += col_ptr[j];
        }
        Ok(Self {
            nrows,
            ncols,
            col_ptr,
            row_ind,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        let one = Complex::new(S::one(), S::zero());
        Self {
            nrows: n,
            ncols: n,
            col_ptr: (0..=n).collect(),
            row_ind: (0..n).collect(),
            values: vec![one; n],
        }
    }

    pub fn diagonal(diag: &[Cx<S>]) -> Self {
        let n = diag.len();
        Self {
            nrows: n,
            ncols: n,
            col_ptr: (0..=n).collect(),
            row_ind: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Row indices and values of column `j`.
    pub fn col(&self, j: usize) -> (&[usize], &[Cx<S>]) {
        let span = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_ind[span.clone()], &self.values[span])
    }

    /// All stored entries as (row, col, value), column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Cx<S>)> + '_ {
        (0..self.ncols).flat_map(move |j| {
            let (rows, vals) = self.col(j);
            rows.iter().zip(vals).map(move |(&i, &v)| (i, j, v))
        })
    }

    /// Sparse matrix-vector product.
    pub fn spmv(&self, v: &[Cx<S>]) -> Result<Vec<Cx<S>>> {
        if v.len() != self.ncols {
            return Err(Error::Dimension(format!(
                "spmv: vector length {} vs {} columns",
                v.len(),
                self.ncols
            )));
        }
        let mut out = vec![Complex::new(S::zero(), S::zero()); self.nrows];
        for j in 0..self.ncols {
            let vj = v[j];
            if vj.norm_sqr() > S::zero() {
                let (rows, vals) = self.col(j);
                for (&i, &a) in rows.iter().zip(vals) {
                    out[i] = out[i] + a * vj;
                }
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DenseMatrix<S> {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            d[(i, j)] = d[(i, j)] + v;
        }
        d
    }

    /// `self - sigma * other`, merging the two sparsity patterns.
    pub fn sub_scaled(&self, sigma: Cx<S>, other: &Self) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::Dimension(format!(
                "sub_scaled: {}x{} vs {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut col_ptr = vec![0usize; self.ncols + 1];
        let mut row_ind = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        for j in 0..self.ncols {
            let (ra, va) = self.col(j);
            let (rb, vb) = other.col(j);
            let (mut p, mut q) = (0usize, 0usize);
            while p < ra.len() || q < rb.len() {
                let ia = ra.get(p).copied().unwrap_or(usize::MAX);
                let ib = rb.get(q).copied().unwrap_or(usize::MAX);
                if ia < ib {
                    row_ind.push(ia);
                    values.push(va[p]);
                    p += 1;
                } else if ib < ia {
                    row_ind.push(ib);
                    values.push(-sigma * vb[q]);
                    q += 1;
                } else {
                    row_ind.push(ia);
                    values.push(va[p] - sigma * vb[q]);
                    p += 1;
                    q += 1;
                }
            }
            col_ptr[j + 1] = row_ind.len();
        }
        Ok(Self {
            nrows: self.nrows,
            ncols: self.ncols,
            col_ptr,
            row_ind,
            values,
        })
    }
}

/// The pair `(A, B)`; `B = None` means the identity.
#[derive(Debug, Clone)]
pub struct MatrixPencil<S: Scalar> {
    a: SparseMatrix<S>,
    b: Option<SparseMatrix<S>>,
}

impl<S: Scalar> MatrixPencil<S> {
    pub fn new(a: SparseMatrix<S>, b: Option<SparseMatrix<S>>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Dimension(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if let Some(b) = &b {
            if b.nrows() != b.ncols() || b.nrows() != a.nrows() {
                return Err(Error::Dimension(format!(
                    "B must be square of the same size as A ({}), got {}x{}",
                    a.nrows(),
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        Ok(Self { a, b })
    }

    pub fn standard(a: SparseMatrix<S>) -> Result<Self> {
        Self::new(a, None)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &SparseMatrix<S> {
        &self.a
    }

    pub fn b(&self) -> Option<&SparseMatrix<S>> {
        self.b.as_ref()
    }

    /// `B v` (a copy of `v` when B is the identity).
    pub fn apply_b(&self, v: &[Cx<S>]) -> Result<Vec<Cx<S>>> {
        match &self.b {
            Some(b) => b.spmv(v),
            None => {
                if v.len() != self.n() {
                    return Err(Error::Dimension(format!(
                        "apply_b: vector length {} vs n = {}",
                        v.len(),
                        self.n()
                    )));
                }
                Ok(v.to_vec())
            }
        }
    }
}

/// `A - sigma * B` with the merged sparsity pattern; inputs untouched.
pub fn shifted_matrix<S: Scalar>(pencil: &MatrixPencil<S>, sigma: Cx<S>) -> SparseMatrix<S> {
    match pencil.b() {
        Some(b) => pencil
            .a()
            .sub_scaled(sigma, b)
            .expect("pencil dimensions already validated"),
        None => {
            let eye = SparseMatrix::identity(pencil.n());
            pencil
                .a()
                .sub_scaled(sigma, &eye)
                .expect("pencil dimensions already validated")
        }
    }
}

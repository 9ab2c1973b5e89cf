//! Per-shift Krylov machinery.
//!
//! For a shift `sigma`, one sparse factorization of `A - sigma B` feeds an
//! Arnoldi run on `M = (A - sigma B)^{-1} B` started from
//! `b = (A - sigma B)^{-1} f`. Afterwards only m-by-m data is kept: the
//! Hessenberg matrix, its eigendecomposition, the breakdown scalar and
//! `beta = ||b||`. Reduced solves and residual estimates for arbitrary
//! points `z` then cost O(m^2) and O(m) respectively, without the n-by-m
//! basis (which is retained only on request, e.g. for multiplicity mode).

use crate::dense::{self, norm2, solve_hessenberg, DenseLu, DenseMatrix};
use crate::error::{Error, Result};
use crate::lu;
use crate::scalar::{Cx, Scalar};
use crate::sparse::{shifted_matrix, MatrixPencil};
use num_complex::Complex;

/// Condition-number threshold on the eigenvector matrix of `H` above which
/// reduced solves fall back to direct Hessenberg solves.
const COND_SLOW_PATH: f64 = 1e12;

/// Relative breakdown threshold for the Arnoldi recurrence.
const BREAKDOWN_REL: f64 = 1e-14;

pub struct ArnoldiResult<S: Scalar> {
    /// Orthonormal basis columns (length is the realized dimension).
    pub v: Vec<Vec<Cx<S>>>,
    /// Upper Hessenberg matrix, square with the realized dimension.
    pub h: DenseMatrix<S>,
    /// Breakdown scalar `h_{m+1,m}`; zero on happy breakdown.
    pub h_next: S,
    /// The next (normalized) basis vector when no breakdown occurred.
    pub v_next: Option<Vec<Cx<S>>>,
}

/// Arnoldi iteration with modified Gram-Schmidt and one full
/// reorthogonalization pass. Stops early on happy breakdown, returning the
/// realized dimension with `h_next = 0`.
pub fn arnoldi<S, F>(mut apply_m: F, b: &[Cx<S>], m: usize) -> Result<ArnoldiResult<S>>
where
    S: Scalar,
    F: FnMut(&[Cx<S>]) -> Result<Vec<Cx<S>>>,
{
    assert!(m >= 1, "Krylov dimension must be at least 1");
    let beta = norm2(b);
    if beta <= S::TINY {
        return Err(Error::ZeroStart);
    }
    let inv = S::one() / beta;
    let mut v: Vec<Vec<Cx<S>>> = Vec::with_capacity(m);
    v.push(b.iter().map(|z| z.scale(inv)).collect());

    let mut h = DenseMatrix::zeros(m, m);
    let mut h_fro_sq = S::zero();
    let mut h_next = S::zero();
    let mut v_next = None;
    let mut dim = 0usize;

    for j in 0..m {
        dim = j + 1;
        let mut w = apply_m(&v[j])?;
        for i in 0..=j {
            let hij = dense::dot_conj(&v[i], &w);
            dense::axpy(&mut w, -hij, &v[i]);
            h[(i, j)] = hij;
        }
        // full second pass; non-Hermitian problems lose orthogonality fast
        for i in 0..=j {
            let corr = dense::dot_conj(&v[i], &w);
            dense::axpy(&mut w, -corr, &v[i]);
            h[(i, j)] = h[(i, j)] + corr;
        }
        for i in 0..=j {
            h_fro_sq = h_fro_sq + h[(i, j)].norm_sqr();
        }
        let wnorm = norm2(&w);
        if wnorm <= S::real(BREAKDOWN_REL) * h_fro_sq.sqrt() {
            h_next = S::zero();
            v_next = None;
            break;
        }
        if j + 1 == m {
            h_next = wnorm;
            let winv = S::one() / wnorm;
            v_next = Some(w.iter().map(|z| z.scale(winv)).collect());
            break;
        }
        h[(j + 1, j)] = Complex::new(wnorm, S::zero());
        h_fro_sq = h_fro_sq + wnorm * wnorm;
        let winv = S::one() / wnorm;
        v.push(w.iter().map(|z| z.scale(winv)).collect());
    }

    let h = if dim == m {
        h
    } else {
        DenseMatrix::from_fn(dim, dim, |i, j| h[(i, j)])
    };
    Ok(ArnoldiResult {
        v,
        h,
        h_next,
        v_next,
    })
}

struct EigenData<S: Scalar> {
    values: Vec<Cx<S>>,
    p: DenseMatrix<S>,
    /// First column of `P^{-1}`.
    c1: Vec<Cx<S>>,
    /// Last row of `P`.
    r_last: Vec<Cx<S>>,
    cond_p: S,
}

/// Compact Krylov record for one shift.
pub struct ShiftData<S: Scalar> {
    sigma: Cx<S>,
    dim: usize,
    h: DenseMatrix<S>,
    h_next: S,
    beta: S,
    eig: Option<EigenData<S>>,
    slow_path: bool,
    basis: Option<Vec<Vec<Cx<S>>>>,
    n: usize,
}

impl<S: Scalar> ShiftData<S> {
    pub fn sigma(&self) -> Cx<S> {
        self.sigma
    }

    /// Realized Krylov dimension (may be below the requested m on breakdown).
    pub fn krylov_dim(&self) -> usize {
        self.dim
    }

    pub fn hessenberg(&self) -> &DenseMatrix<S> {
        &self.h
    }

    pub fn h_next(&self) -> S {
        self.h_next
    }

    pub fn beta(&self) -> S {
        self.beta
    }

    pub fn eig_values(&self) -> Option<&[Cx<S>]> {
        self.eig.as_ref().map(|e| e.values.as_slice())
    }

    pub fn eig_vectors(&self) -> Option<&DenseMatrix<S>> {
        self.eig.as_ref().map(|e| &e.p)
    }

    pub fn c1(&self) -> Option<&[Cx<S>]> {
        self.eig.as_ref().map(|e| e.c1.as_slice())
    }

    pub fn r_lambda(&self) -> Option<&[Cx<S>]> {
        self.eig.as_ref().map(|e| e.r_last.as_slice())
    }

    pub fn cond_p(&self) -> Option<S> {
        self.eig.as_ref().map(|e| e.cond_p)
    }

    pub fn is_slow_path(&self) -> bool {
        self.slow_path
    }

    pub fn basis(&self) -> Option<&[Vec<Cx<S>>]> {
        self.basis.as_deref()
    }

    /// Problem dimension n.
    pub fn n(&self) -> usize {
        self.n
    }
}

/// Builds the compact Krylov record for `sigma`.
///
/// The factorization of `A - sigma B` lives only for the duration of this
/// call. A singular factorization surfaces as [`Error::Singular`]; the
/// search layer reacts by perturbing the shift. An ill-conditioned or
/// failed eigendecomposition of `H` flags the record as slow-path, in
/// which case solves go through direct Hessenberg elimination instead of
/// the diagonalized form.
pub fn build_shift<S: Scalar>(
    pencil: &MatrixPencil<S>,
    sigma: Cx<S>,
    f: &[Cx<S>],
    m: usize,
    keep_basis: bool,
) -> Result<ShiftData<S>> {
    let n = pencil.n();
    if f.len() != n {
        return Err(Error::Dimension(format!(
            "starting vector length {} vs n = {}",
            f.len(),
            n
        )));
    }
    let shifted = shifted_matrix(pencil, sigma);
    let fact = lu::factorize(&shifted)?;
    let b = fact.solve(f)?;
    let beta = norm2(&b);
    if beta <= S::TINY {
        return Err(Error::ZeroStart);
    }

    let apply_m = |v: &[Cx<S>]| -> Result<Vec<Cx<S>>> {
        let bv = pencil.apply_b(v)?;
        fact.solve(&bv)
    };
    let ar = arnoldi(apply_m, &b, m)?;
    let dim = ar.h.nrows();

    let eig = match dense::hessenberg_eigen_full(&ar.h) {
        Ok((values, p)) => match DenseLu::factor(p.clone()) {
            Ok(plu) => {
                let pinv = plu.inverse();
                let cond_p = p.one_norm() * pinv.one_norm();
                let c1 = pinv.column(0).to_vec();
                let r_last = p.row(dim - 1);
                Some(EigenData {
                    values,
                    p,
                    c1,
                    r_last,
                    cond_p,
                })
            }
            Err(_) => None,
        },
        Err(_) => None,
    };
    let slow_path = match &eig {
        Some(e) => e.cond_p > S::real(COND_SLOW_PATH),
        None => true,
    };

    Ok(ShiftData {
        sigma,
        dim,
        h: ar.h,
        h_next: ar.h_next,
        beta,
        eig,
        slow_path,
        basis: keep_basis.then_some(ar.v),
        n,
    })
}

#[cfg(test)]
pub(crate) fn shift_data_for_tests<S: Scalar>(
    sigma: Cx<S>,
    h: DenseMatrix<S>,
    h_next: S,
    beta: S,
    n: usize,
) -> ShiftData<S> {
    let dim = h.nrows();
    ShiftData {
        sigma,
        dim,
        h,
        h_next,
        beta,
        eig: None,
        slow_path: true,
        basis: None,
        n,
    }
}

fn slow_reduced<S: Scalar>(sd: &ShiftData<S>, z: Cx<S>) -> Result<Vec<Cx<S>>> {
    let m = sd.dim;
    let factor = sd.sigma - z;
    let one = Complex::new(S::one(), S::zero());
    let mut g = DenseMatrix::zeros(m, m);
    for j in 0..m {
        for i in 0..(j + 2).min(m) {
            g[(i, j)] = sd.h[(i, j)] * factor;
        }
        g[(j, j)] = g[(j, j)] + one;
    }
    let mut rhs = vec![Complex::new(S::zero(), S::zero()); m];
    rhs[0] = Complex::new(sd.beta, S::zero());
    solve_hessenberg(g, rhs)
}

/// Solves the reduced system `(I + (sigma - z) H) y = beta e_1`.
///
/// The fast path uses the stored eigendecomposition,
/// `y = beta P Lambda c_1` with `Lambda_ii = 1 / (1 + (sigma - z) lambda_i)`;
/// slow-path records solve the Hessenberg system directly. An exactly
/// singular reduced system reports [`Error::SingularReduced`] so the caller
/// can nudge the quadrature radius.
pub fn reduced_solve<S: Scalar>(sd: &ShiftData<S>, z: Cx<S>) -> Result<Vec<Cx<S>>> {
    if sd.slow_path {
        return slow_reduced(sd, z);
    }
    let eig = sd
        .eig
        .as_ref()
        .expect("fast path requires eigendecomposition");
    let factor = sd.sigma - z;
    let one = Complex::new(S::one(), S::zero());
    let mut t = Vec::with_capacity(sd.dim);
    for (lam, c) in eig.values.iter().zip(&eig.c1) {
        let den = one + factor * lam;
        if den.norm() <= S::TINY {
            return Err(Error::SingularReduced);
        }
        t.push(*c / den);
    }
    let mut y = eig.p.mat_vec(&t);
    for yi in &mut y {
        *yi = yi.scale(sd.beta);
    }
    Ok(y)
}

/// Relative residual of the full n-dimensional system at `z`, computed from
/// m-by-m data only:
/// `|sigma - z| * h_{m+1,m} * |e_m^T y| / beta = |sigma - z| * h_{m+1,m} * |r Lambda c_1|`.
///
/// Exactly zero at `z = sigma` and for happy-breakdown records.
pub fn residual_estimate<S: Scalar>(sd: &ShiftData<S>, z: Cx<S>) -> Result<S> {
    if sd.h_next == S::zero() {
        return Ok(S::zero());
    }
    let factor = sd.sigma - z;
    if factor.norm() == S::zero() {
        return Ok(S::zero());
    }
    if sd.slow_path {
        let y = slow_reduced(sd, z)?;
        return Ok(factor.norm() * sd.h_next * y[sd.dim - 1].norm() / sd.beta);
    }
    let eig = sd
        .eig
        .as_ref()
        .expect("fast path requires eigendecomposition");
    let one = Complex::new(S::one(), S::zero());
    let mut acc = Complex::new(S::zero(), S::zero());
    for ((lam, c), r) in eig.values.iter().zip(&eig.c1).zip(&eig.r_last) {
        let den = one + factor * lam;
        if den.norm() <= S::TINY {
            return Err(Error::SingularReduced);
        }
        acc = acc + *r * *c / den;
    }
    Ok(factor.norm() * sd.h_next * acc.norm())
}

/// Lifts a reduced solution back to n dimensions: `x = V_m y`.
pub fn lift<S: Scalar>(sd: &ShiftData<S>, y: &[Cx<S>]) -> Result<Vec<Cx<S>>> {
    let basis = sd.basis.as_ref().ok_or(Error::BasisNotRetained)?;
    if y.len() != basis.len() {
        return Err(Error::Dimension(format!(
            "lift: y length {} vs basis dimension {}",
            y.len(),
            basis.len()
        )));
    }
    let mut x = vec![Complex::new(S::zero(), S::zero()); sd.n];
    for (col, &yi) in basis.iter().zip(y) {
        dense::axpy(&mut x, yi, col);
    }
    Ok(x)
}

/// Reference into a [`KrylovTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct ShiftId(pub usize);

/// Ordered collection of shift records; insertion order is the scan order
/// everywhere (first match wins).
#[derive(Default)]
pub struct KrylovTable<S: Scalar> {
    shifts: Vec<ShiftData<S>>,
}

impl<S: Scalar> KrylovTable<S> {
    pub fn new() -> Self {
        Self { shifts: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    pub fn contains_sigma(&self, sigma: Cx<S>) -> bool {
        self.shifts.iter().any(|sd| sd.sigma == sigma)
    }

    pub fn push(&mut self, sd: ShiftData<S>) -> Result<ShiftId> {
        if self.contains_sigma(sd.sigma) {
            return Err(Error::Invalid(format!("duplicate shift {}", sd.sigma)));
        }
        self.shifts.push(sd);
        Ok(ShiftId(self.shifts.len() - 1))
    }

    pub fn get(&self, id: ShiftId) -> &ShiftData<S> {
        &self.shifts[id.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ShiftId, &ShiftData<S>)> {
        self.shifts
            .iter()
            .enumerate()
            .map(|(i, sd)| (ShiftId(i), sd))
    }
}

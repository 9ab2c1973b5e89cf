//! Small dense complex linear algebra: LU, Householder Hessenberg reduction,
//! shifted QR iteration, eigenvector extraction, and Givens-based Hessenberg
//! solves. Shared by the Krylov machinery (m ~ 50) and the dense reference
//! eigensolver (n up to a few thousand).

use crate::error::{Error, Result};
use crate::scalar::{Cx, Scalar};
use num_complex::Complex;

/// Euclidean norm of a complex vector.
pub fn norm2<S: Scalar>(v: &[Cx<S>]) -> S {
    v.iter()
        .map(|z| z.norm_sqr())
        .fold(S::zero(), |a, b| a + b)
        .sqrt()
}

/// Conjugated inner product `<a, b> = sum conj(a_i) b_i`.
pub fn dot_conj<S: Scalar>(a: &[Cx<S>], b: &[Cx<S>]) -> Cx<S> {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(Complex::new(S::zero(), S::zero()), |acc, (x, y)| {
            acc + x.conj() * y
        })
}

/// `y += alpha * x`.
pub fn axpy<S: Scalar>(y: &mut [Cx<S>], alpha: Cx<S>, x: &[Cx<S>]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * *xi;
    }
}

/// Column-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<S: Scalar> {
    nrows: usize,
    ncols: usize,
    data: Vec<Cx<S>>,
}

impl<S: Scalar> DenseMatrix<S> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![Complex::new(S::zero(), S::zero()); nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(S::one(), S::zero());
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> Cx<S>) -> Self {
        let mut m = Self::zeros(nrows, ncols);
        for j in 0..ncols {
            for i in 0..nrows {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn column(&self, j: usize) -> &[Cx<S>] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [Cx<S>] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn row(&self, i: usize) -> Vec<Cx<S>> {
        (0..self.ncols).map(|j| self[(i, j)]).collect()
    }

    pub fn mat_vec(&self, v: &[Cx<S>]) -> Vec<Cx<S>> {
        assert_eq!(v.len(), self.ncols, "mat_vec dimension mismatch");
        let mut out = vec![Complex::new(S::zero(), S::zero()); self.nrows];
        for j in 0..self.ncols {
            axpy(&mut out, v[j], self.column(j));
        }
        out
    }

    pub fn mat_mul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows, "mat_mul dimension mismatch");
        let mut out = Self::zeros(self.nrows, other.ncols);
        for j in 0..other.ncols {
            let col = self.mat_vec(other.column(j));
            out.column_mut(j).copy_from_slice(&col);
        }
        out
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)].conj())
    }

    pub fn frobenius(&self) -> S {
        self.data
            .iter()
            .map(|z| z.norm_sqr())
            .fold(S::zero(), |a, b| a + b)
            .sqrt()
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> S {
        let mut best = S::zero();
        for j in 0..self.ncols {
            let s = self.column(j).iter().fold(S::zero(), |a, z| a + z.norm());
            if s > best {
                best = s;
            }
        }
        best
    }

    pub fn scale(&mut self, alpha: Cx<S>) {
        for z in &mut self.data {
            *z = *z * alpha;
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a = *a - *b;
        }
        out
    }
}

impl<S: Scalar> std::ops::Index<(usize, usize)> for DenseMatrix<S> {
    type Output = Cx<S>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Cx<S> {
        &self.data[j * self.nrows + i]
    }
}

impl<S: Scalar> std::ops::IndexMut<(usize, usize)> for DenseMatrix<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cx<S> {
        &mut self.data[j * self.nrows + i]
    }
}

/// Dense LU factorization with partial pivoting.
pub struct DenseLu<S: Scalar> {
    lu: DenseMatrix<S>,
    // piv[k] = row swapped with k at step k
    piv: Vec<usize>,
}

impl<S: Scalar> DenseLu<S> {
    pub fn factor(mut a: DenseMatrix<S>) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "LU requires a square matrix");
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let mut best = k;
            let mut best_mag = a[(k, k)].norm_sqr();
            for i in k + 1..n {
                let mag = a[(i, k)].norm_sqr();
                if mag > best_mag {
                    best_mag = mag;
                    best = i;
                }
            }
            piv[k] = best;
            if best != k {
                for j in 0..n {
                    let t = a[(k, j)];
                    a[(k, j)] = a[(best, j)];
                    a[(best, j)] = t;
                }
            }
            let pivot = a[(k, k)];
            if pivot.norm() <= S::TINY {
                return Err(Error::Singular {
                    step: k,
                    pivot: pivot.norm().to_f64().unwrap_or(0.0),
                });
            }
            for i in k + 1..n {
                let lik = a[(i, k)] / pivot;
                a[(i, k)] = lik;
            }
            for j in k + 1..n {
                let ukj = a[(k, j)];
                if ukj.norm_sqr() > S::zero() {
                    for i in k + 1..n {
                        let lik = a[(i, k)];
                        a[(i, j)] = a[(i, j)] - lik * ukj;
                    }
                }
            }
        }
        Ok(Self { lu: a, piv })
    }

    pub fn solve(&self, rhs: &[Cx<S>]) -> Vec<Cx<S>> {
        let n = self.lu.nrows();
        assert_eq!(rhs.len(), n, "solve dimension mismatch");
        let mut x = rhs.to_vec();
        for k in 0..n {
            x.swap(k, self.piv[k]);
        }
        // forward: unit lower triangular
        for k in 0..n {
            let xk = x[k];
            for i in k + 1..n {
                x[i] = x[i] - self.lu[(i, k)] * xk;
            }
        }
        // backward
        for k in (0..n).rev() {
            x[k] = x[k] / self.lu[(k, k)];
            let xk = x[k];
            for i in 0..k {
                x[i] = x[i] - self.lu[(i, k)] * xk;
            }
        }
        x
    }

    pub fn inverse(&self) -> DenseMatrix<S> {
        let n = self.lu.nrows();
        let mut inv = DenseMatrix::zeros(n, n);
        let mut e = vec![Complex::new(S::zero(), S::zero()); n];
        for j in 0..n {
            e[j] = Complex::new(S::one(), S::zero());
            let col = self.solve(&e);
            inv.column_mut(j).copy_from_slice(&col);
            e[j] = Complex::new(S::zero(), S::zero());
        }
        inv
    }
}

/// Plane rotation `[[c, s], [-conj(s), c]]` with real `c` mapping `(a, b)`
/// to `(r, 0)`.
pub fn givens<S: Scalar>(a: Cx<S>, b: Cx<S>) -> (S, Cx<S>, Cx<S>) {
    let zero = Complex::new(S::zero(), S::zero());
    let nb = b.norm();
    if nb == S::zero() {
        return (S::one(), zero, a);
    }
    let na = a.norm();
    if na == S::zero() {
        return (S::zero(), b.conj() / nb, Complex::new(nb, S::zero()));
    }
    let d = na.hypot(nb);
    let c = na / d;
    let phase = a / na;
    let s = phase * b.conj() / d;
    let r = phase * d;
    (c, s, r)
}

fn rot_rows<S: Scalar>(
    m: &mut DenseMatrix<S>,
    i: usize,
    c: S,
    s: Cx<S>,
    cols: std::ops::Range<usize>,
) {
    let sc = s.conj();
    for j in cols {
        let a = m[(i, j)];
        let b = m[(i + 1, j)];
        m[(i, j)] = a * c + s * b;
        m[(i + 1, j)] = b * c - sc * a;
    }
}

fn rot_cols<S: Scalar>(
    m: &mut DenseMatrix<S>,
    j: usize,
    c: S,
    s: Cx<S>,
    rows: std::ops::Range<usize>,
) {
    let sc = s.conj();
    for i in rows {
        let a = m[(i, j)];
        let b = m[(i, j + 1)];
        m[(i, j)] = a * c + sc * b;
        m[(i, j + 1)] = b * c - s * a;
    }
}

/// Reduces a square matrix to upper Hessenberg form by Householder
/// similarity transforms (in place, no transform accumulation).
pub fn hessenberg_reduce<S: Scalar>(a: &mut DenseMatrix<S>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    if n < 3 {
        return;
    }
    let zero = Complex::new(S::zero(), S::zero());
    let mut v = vec![zero; n];
    let mut w = vec![zero; n];
    for k in 0..n - 2 {
        let xlen = n - k - 1;
        let mut sig_sq = S::zero();
        for i in 0..xlen {
            sig_sq = sig_sq + a[(k + 1 + i, k)].norm_sqr();
        }
        let sigma = sig_sq.sqrt();
        if sigma <= S::TINY {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let alpha = if x0.norm() == S::zero() {
            Complex::new(-sigma, S::zero())
        } else {
            -(x0 / x0.norm()) * sigma
        };
        for i in 0..xlen {
            v[i] = a[(k + 1 + i, k)];
        }
        v[0] = v[0] - alpha;
        let vnorm_sq = v[..xlen]
            .iter()
            .fold(S::zero(), |acc, z| acc + z.norm_sqr());
        if vnorm_sq <= S::TINY {
            continue;
        }
        let beta = S::real(2.0) / vnorm_sq;

        // left: A[k+1.., k..] -= beta v (v^H A[k+1.., k..])
        for j in k..n {
            let mut t = zero;
            for i in 0..xlen {
                t = t + v[i].conj() * a[(k + 1 + i, j)];
            }
            t = t * beta;
            for i in 0..xlen {
                a[(k + 1 + i, j)] = a[(k + 1 + i, j)] - v[i] * t;
            }
        }
        // right: A[.., k+1..] -= beta (A[.., k+1..] v) v^H
        for i in 0..n {
            w[i] = zero;
        }
        for jj in 0..xlen {
            let vj = v[jj];
            if vj.norm_sqr() > S::zero() {
                for i in 0..n {
                    w[i] = w[i] + a[(i, k + 1 + jj)] * vj;
                }
            }
        }
        for jj in 0..xlen {
            let vc = v[jj].conj() * beta;
            for i in 0..n {
                a[(i, k + 1 + jj)] = a[(i, k + 1 + jj)] - w[i] * vc;
            }
        }
        // enforce the annihilated entries exactly
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = zero;
        }
    }
}

fn wilkinson_shift<S: Scalar>(h: &DenseMatrix<S>, hi: usize) -> Cx<S> {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let half = S::real(0.5);
    let tr2 = (a + d) * half;
    let det = a * d - b * c;
    let disc = (tr2 * tr2 - det).sqrt();
    let mu1 = tr2 + disc;
    let mu2 = tr2 - disc;
    if (mu1 - d).norm() <= (mu2 - d).norm() {
        mu1
    } else {
        mu2
    }
}

/// Shifted QR iteration on an upper Hessenberg matrix, reducing it to upper
/// triangular (Schur) form. When `u` is given it accumulates the unitary
/// similarity so that `U T U^H` reconstructs the input. Returns the
/// eigenvalues (the final diagonal).
///
/// The step budget is 40 per eigenvalue; exhausting it is reported as an
/// error rather than returning silently wrong values.
pub fn schur_in_place<S: Scalar>(
    h: &mut DenseMatrix<S>,
    mut u: Option<&mut DenseMatrix<S>>,
) -> Result<Vec<Cx<S>>> {
    let n = h.nrows();
    assert_eq!(n, h.ncols());
    if n == 0 {
        return Ok(vec![]);
    }
    let zero = Complex::new(S::zero(), S::zero());
    let eps = S::epsilon();
    let hnorm = h.frobenius();
    let budget = 40 * n;
    let mut steps = 0usize;
    let mut hi = n - 1;
    let mut stag = 0usize;
    let full = u.is_some();

    while hi > 0 {
        // locate the active block [lo, hi]
        let mut lo = hi;
        while lo > 0 {
            let scale = {
                let s = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
                if s == S::zero() {
                    hnorm
                } else {
                    s
                }
            };
            if h[(lo, lo - 1)].norm() <= eps * scale {
                h[(lo, lo - 1)] = zero;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            stag = 0;
            continue;
        }

        steps += 1;
        stag += 1;
        if steps > budget {
            return Err(Error::NoConvergence);
        }
        let mu = if stag > 0 && stag % 20 == 0 {
            h[(hi, hi)] + Complex::new(S::real(0.75) * h[(hi, hi - 1)].norm(), S::zero())
        } else {
            wilkinson_shift(h, hi)
        };

        // implicit single-shift sweep over [lo, hi]
        for k in lo..hi {
            let (x, y) = if k == lo {
                (h[(lo, lo)] - mu, h[(lo + 1, lo)])
            } else {
                (h[(k, k - 1)], h[(k + 1, k - 1)])
            };
            let (c, s, _) = givens(x, y);
            let row_start = if k == lo { lo } else { k - 1 };
            let row_end = if full { n } else { hi + 1 };
            rot_rows(h, k, c, s, row_start..row_end);
            let col_start = if full { 0 } else { lo };
            let col_end = (k + 3).min(hi + 1);
            rot_cols(h, k, c, s, col_start..col_end);
            if let Some(uu) = u.as_deref_mut() {
                rot_cols(uu, k, c, s, 0..n);
            }
        }
    }

    Ok((0..n).map(|i| h[(i, i)]).collect())
}

/// Eigenvalues of an upper Hessenberg matrix.
pub fn hessenberg_eigenvalues<S: Scalar>(h: &DenseMatrix<S>) -> Result<Vec<Cx<S>>> {
    let mut work = h.clone();
    schur_in_place(&mut work, None)
}

/// Full eigendecomposition of an upper Hessenberg matrix: eigenvalues plus
/// the (column) eigenvector matrix, each column normalized to unit length.
pub fn hessenberg_eigen_full<S: Scalar>(
    h: &DenseMatrix<S>,
) -> Result<(Vec<Cx<S>>, DenseMatrix<S>)> {
    let n = h.nrows();
    let mut t = h.clone();
    let mut u = DenseMatrix::identity(n);
    let values = schur_in_place(&mut t, Some(&mut u))?;

    // back-substitution for eigenvectors of the triangular factor
    let zero = Complex::new(S::zero(), S::zero());
    let smlnum = S::epsilon() * t.frobenius().max(S::TINY);
    let mut x = DenseMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = values[k];
        x[(k, k)] = Complex::new(S::one(), S::zero());
        for i in (0..k).rev() {
            let mut acc = zero;
            for j in i + 1..=k {
                acc = acc + t[(i, j)] * x[(j, k)];
            }
            let mut den = t[(i, i)] - lambda;
            if den.norm() < smlnum {
                den = Complex::new(smlnum, S::zero());
            }
            x[(i, k)] = -acc / den;
        }
    }
    let mut p = u.mat_mul(&x);
    for k in 0..n {
        let nrm = norm2(p.column(k));
        if nrm > S::zero() {
            let inv = S::one() / nrm;
            for z in p.column_mut(k) {
                *z = z.scale(inv);
            }
        }
    }
    Ok((values, p))
}

/// Solves an upper Hessenberg system by Givens QR. Reports
/// [`Error::SingularReduced`] on an exactly singular system.
pub fn solve_hessenberg<S: Scalar>(
    mut g: DenseMatrix<S>,
    mut rhs: Vec<Cx<S>>,
) -> Result<Vec<Cx<S>>> {
    let n = g.nrows();
    assert_eq!(n, g.ncols());
    assert_eq!(n, rhs.len());
    for k in 0..n.saturating_sub(1) {
        let (c, s, _) = givens(g[(k, k)], g[(k + 1, k)]);
        rot_rows(&mut g, k, c, s, k..n);
        let a = rhs[k];
        let b = rhs[k + 1];
        rhs[k] = a * c + s * b;
        rhs[k + 1] = b * c - s.conj() * a;
    }
    for k in (0..n).rev() {
        let d = g[(k, k)];
        if d.norm() <= S::TINY {
            return Err(Error::SingularReduced);
        }
        let mut acc = rhs[k];
        for j in k + 1..n {
            acc = acc - g[(k, j)] * rhs[j];
        }
        rhs[k] = acc / d;
    }
    Ok(rhs)
}

/// Singular values of the matrix whose columns are `cols`, descending.
///
/// Computed through the Gram matrix; adequate for the small column counts
/// used in multiplicity estimation.
pub fn singular_values<S: Scalar>(cols: &[Vec<Cx<S>>]) -> Result<Vec<S>> {
    let k = cols.len();
    if k == 0 {
        return Ok(vec![]);
    }
    let gram = DenseMatrix::from_fn(k, k, |i, j| dot_conj(&cols[i], &cols[j]));
    let mut work = gram;
    hessenberg_reduce(&mut work);
    let eig = schur_in_place(&mut work, None)?;
    let mut svals: Vec<S> = eig
        .into_iter()
        .map(|z| z.re.max(S::zero()).sqrt())
        .collect();
    svals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(svals)
}

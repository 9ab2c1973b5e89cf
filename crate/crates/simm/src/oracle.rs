//! Reference solvers used by the test suites: a dense eigenvalue solver for
//! small pencils, a synthetic-pencil generator with a prescribed spectrum,
//! and brute-force spectral projection via direct factorizations. None of
//! these participate in the production search path.

use crate::dense::{hessenberg_reduce, schur_in_place, DenseMatrix};
use crate::error::{Error, Result};
use crate::lu;
use crate::scalar::{sample_complex_normal, Cx, Scalar};
use crate::sparse::{shifted_matrix, MatrixPencil, SparseMatrix};
use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

/// Largest dimension the dense reference path accepts.
const DENSE_LIMIT: usize = 3000;

/// A pencil with exactly known spectrum.
pub struct SyntheticPencil<S: Scalar> {
    pub pencil: MatrixPencil<S>,
    /// Full spectrum including algebraic multiplicities; prescribed values
    /// first, then the surplus diagonal entries parked far away.
    pub true_eigenvalues: Vec<Cx<S>>,
}

/// Full spectrum of a small pencil by dense reduction.
///
/// Forms `C = B^{-1} A` column by column (B must be nonsingular; the
/// generalized QZ route is out of scope), reduces to upper Hessenberg by
/// Householder similarity and runs shifted QR with deflation.
pub fn dense_eigs<S: Scalar>(pencil: &MatrixPencil<S>) -> Result<Vec<Cx<S>>> {
    let n = pencil.n();
    if n > DENSE_LIMIT {
        return Err(Error::Invalid(format!(
            "dense reference limited to n <= {DENSE_LIMIT}, got {n}"
        )));
    }
    let mut c = match pencil.b() {
        None => pencil.a().to_dense(),
        Some(b) => {
            let fact = lu::factorize(b)
                .map_err(|_| Error::Invalid("dense reference requires a nonsingular B".into()))?;
            let ad = pencil.a().to_dense();
            let mut c = DenseMatrix::zeros(n, n);
            for j in 0..n {
                let col = fact.solve(ad.column(j))?;
                c.column_mut(j).copy_from_slice(&col);
            }
            c
        }
    };
    hessenberg_reduce(&mut c);
    schur_in_place(&mut c, None)
}

/// Builds a pencil whose spectrum is exactly the prescribed values plus
/// surplus diagonal entries parked on a ray starting at `100 + 100i`, far
/// outside unit-scale test regions.
///
/// The core is upper triangular with the prescribed diagonal and random
/// strictly-upper fill of density about `5/n`. With `similarity` the pencil
/// is conjugated by a random sparse unit lower-triangular matrix, which
/// preserves the spectrum. With `b_diag` the pencil becomes `(A, B)` with
/// the prescribed nonsingular diagonal `B` (conjugated alongside `A`), and
/// the diagonal of the core is scaled so the pencil eigenvalues stay the
/// prescribed ones.
pub fn synth_pencil<S: Scalar>(
    eigs: &[Cx<S>],
    n: usize,
    seed: u64,
    similarity: bool,
    b_diag: Option<&[Cx<S>]>,
) -> SyntheticPencil<S> {
    assert!(eigs.len() <= n, "more prescribed eigenvalues than rows");
    if let Some(b) = b_diag {
        assert_eq!(b.len(), n, "B diagonal length must be n");
        assert!(
            b.iter().all(|z| z.norm() > S::TINY),
            "B diagonal must be nonsingular"
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut lambdas: Vec<Cx<S>> = eigs.to_vec();
    for j in 0..n - eigs.len() {
        let t = S::from_usize(j).unwrap();
        lambdas.push(Complex::new(
            S::real(100.0) + t,
            S::real(100.0) + t * S::real(0.5),
        ));
    }

    let one = Complex::new(S::one(), S::zero());
    let mut t_dense = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let b_i = b_diag.map_or(one, |b| b[i]);
        t_dense[(i, i)] = lambdas[i] * b_i;
    }
    let fill_prob = 5.0 / n as f64;
    for j in 1..n {
        for i in 0..j {
            if rng.random::<f64>() < fill_prob {
                t_dense[(i, j)] = sample_complex_normal::<S, _>(&mut rng).scale(S::real(0.5));
            }
        }
    }

    let (a, b) = if similarity {
        // unit lower triangular L = I + E with sparse strictly-lower E
        let mut e_by_col: Vec<Vec<(usize, Cx<S>)>> = vec![Vec::new(); n];
        let e_prob = 1.5 / n as f64;
        for j in 0..n {
            for i in j + 1..n {
                if rng.random::<f64>() < e_prob {
                    e_by_col[j].push((
                        i,
                        sample_complex_normal::<S, _>(&mut rng).scale(S::real(0.3)),
                    ));
                }
            }
        }
        let conjugate = |m: &DenseMatrix<S>| -> DenseMatrix<S> {
            // Y = L M  (row updates), then solve A L = Y column by column
            let mut y = m.clone();
            for (j, col) in e_by_col.iter().enumerate() {
                for &(i, v) in col {
                    for jc in 0..n {
                        let add = m[(j, jc)] * v;
                        y[(i, jc)] = y[(i, jc)] + add;
                    }
                }
            }
            let mut a = y;
            for j in (0..n).rev() {
                for &(k, v) in &e_by_col[j] {
                    for i in 0..n {
                        let sub = a[(i, k)] * v;
                        a[(i, j)] = a[(i, j)] - sub;
                    }
                }
            }
            a
        };
        let a = conjugate(&t_dense);
        let b = b_diag.map(|bd| {
            let mut bm = DenseMatrix::zeros(n, n);
            for i in 0..n {
                bm[(i, i)] = bd[i];
            }
            conjugate(&bm)
        });
        (a, b)
    } else {
        let b = b_diag.map(|bd| {
            let mut bm = DenseMatrix::zeros(n, n);
            for i in 0..n {
                bm[(i, i)] = bd[i];
            }
            bm
        });
        (t_dense, b)
    };

    let harvest = |m: &DenseMatrix<S>| -> SparseMatrix<S> {
        let mut trip = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let v = m[(i, j)];
                if v.norm_sqr() > S::zero() {
                    trip.push((i, j, v));
                }
            }
        }
        SparseMatrix::from_triplets(n, n, trip).expect("synthetic entries are finite")
    };
    let pencil = MatrixPencil::new(harvest(&a), b.as_ref().map(harvest))
        .expect("synthetic pencil is square");
    SyntheticPencil {
        pencil,
        true_eigenvalues: lambdas,
    }
}

/// Brute-force spectral projection `sum_j w_j (A - z_j B)^{-1} f` over the
/// `n_points` trapezoid rule on the square's circumscribing circle. Each
/// point is a direct factorization; test scales only.
pub fn direct_projection<S: Scalar>(
    pencil: &MatrixPencil<S>,
    square: &crate::contour::Square<S>,
    f: &[Cx<S>],
    n_points: usize,
) -> Result<Vec<Cx<S>>> {
    let n = n_points.max(1);
    let radius = square.radius();
    let zero = Complex::new(S::zero(), S::zero());
    let mut acc = vec![zero; pencil.n()];
    let scale = radius / S::from_usize(n).unwrap();
    for j in 0..n {
        let theta = S::real(2.0) * S::PI() * S::from_usize(j).unwrap() / S::from_usize(n).unwrap();
        let unit = Complex::new(theta.cos(), theta.sin());
        let z = square.center + unit.scale(radius);
        let fact = lu::factorize(&shifted_matrix(pencil, z))?;
        let x = fact.solve(f)?;
        crate::dense::axpy(&mut acc, unit.scale(scale), &x);
    }
    Ok(acc)
}

/// Greedy nearest-neighbor multiset matching with a distance cap.
///
/// Returns the matched index pairs `(found, truth)` or a description of the
/// first failure (count mismatch or an unmatched value).
pub fn match_multisets<S: Scalar>(
    found: &[Cx<S>],
    truth: &[Cx<S>],
    cap: S,
) -> std::result::Result<Vec<(usize, usize)>, String> {
    if found.len() != truth.len() {
        return Err(format!(
            "count mismatch: found {} values, expected {}",
            found.len(),
            truth.len()
        ));
    }
    let mut pairs: Vec<(S, usize, usize)> = Vec::with_capacity(found.len() * truth.len());
    for (i, f) in found.iter().enumerate() {
        for (j, t) in truth.iter().enumerate() {
            let d = (f - t).norm();
            if d <= cap {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut used_f = vec![false; found.len()];
    let mut used_t = vec![false; truth.len()];
    let mut out = Vec::with_capacity(found.len());
    for (_, i, j) in pairs {
        if !used_f[i] && !used_t[j] {
            used_f[i] = true;
            used_t[j] = true;
            out.push((i, j));
        }
    }
    if out.len() != found.len() {
        let i = used_f.iter().position(|u| !u).unwrap();
        return Err(format!(
            "value {} has no partner within {:e}",
            found[i],
            cap.to_f64().unwrap_or(f64::NAN)
        ));
    }
    Ok(out)
}

/// Symmetric Hausdorff distance between two point sets.
pub fn hausdorff<S: Scalar>(a: &[Cx<S>], b: &[Cx<S>]) -> S {
    let one_sided = |from: &[Cx<S>], to: &[Cx<S>]| -> S {
        from.iter()
            .map(|p| {
                to.iter()
                    .map(|q| (p - q).norm())
                    .fold(S::infinity(), S::min)
            })
            .fold(S::zero(), S::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

/// Locates an optional test matrix: `$SIMM_MATRIX_DIR/<name>` first, then
/// `data/<name>` at the workspace root.
pub fn locate_matrix(name: &str) -> Option<PathBuf> {
    if let Ok(dir) = std::env::var("SIMM_MATRIX_DIR") {
        let p = PathBuf::from(dir).join(name);
        if p.exists() {
            return Some(p);
        }
    }
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name);
    p.exists().then_some(p)
}

/// Random sparse strictly diagonally dominant matrix; always nonsingular.
pub fn random_diag_dominant<S: Scalar, R: Rng + ?Sized>(
    n: usize,
    density: f64,
    rng: &mut R,
) -> SparseMatrix<S> {
    let mut trip = Vec::new();
    let mut rowsum = vec![S::zero(); n];
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random::<f64>() < density {
                let v = sample_complex_normal::<S, _>(rng);
                rowsum[i] = rowsum[i] + v.norm();
                trip.push((i, j, v));
            }
        }
    }
    for i in 0..n {
        let phase = sample_complex_normal::<S, _>(rng);
        let phase = if phase.norm() > S::zero() {
            phase / phase.norm()
        } else {
            Complex::new(S::one(), S::zero())
        };
        trip.push((i, i, phase.scale(rowsum[i] + S::one())));
    }
    SparseMatrix::from_triplets(n, n, trip).expect("generator produces finite entries")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::Square;
    use crate::dense::norm2;
    use crate::scalar::random_complex_vector;

    type C = Cx<f64>;

    fn cx(re: f64, im: f64) -> C {
        Complex::new(re, im)
    }

    #[test]
    fn dense_eigs_triangular() {
        let a = SparseMatrix::from_triplets(
            2,
            2,
            vec![
                (0usize, 0usize, cx(2.0, 0.0)),
                (0, 1, cx(1.0, 0.0)),
                (1, 1, cx(3.0, 0.0)),
            ],
        )
        .unwrap();
        let eig = dense_eigs(&MatrixPencil::standard(a).unwrap()).unwrap();
        match_multisets(&eig, &[cx(2.0, 0.0), cx(3.0, 0.0)], 1e-10).unwrap();
    }

    #[test]
    fn dense_eigs_generalized_diagonal() {
        let a = SparseMatrix::diagonal(&[cx(2.0, 0.0), cx(3.0, 0.0)]);
        let b = SparseMatrix::diagonal(&[cx(1.0, 0.0), cx(2.0, 0.0)]);
        let eig = dense_eigs(&MatrixPencil::new(a, Some(b)).unwrap()).unwrap();
        match_multisets(&eig, &[cx(2.0, 0.0), cx(1.5, 0.0)], 1e-12).unwrap();
    }

    #[test]
    fn dense_eigs_rejects_singular_b() {
        let a = SparseMatrix::<f64>::identity(2);
        let b = SparseMatrix::diagonal(&[cx(1.0, 0.0), cx(0.0, 0.0)]);
        assert!(dense_eigs(&MatrixPencil::new(a, Some(b)).unwrap()).is_err());
    }

    #[test]
    fn synth_single_value() {
        let sp = synth_pencil(&[cx(1.0, 0.0)], 1, 0, false, None);
        assert_eq!(sp.pencil.a().to_dense()[(0, 0)], cx(1.0, 0.0));
        assert_eq!(sp.true_eigenvalues, vec![cx(1.0, 0.0)]);
    }

    #[test]
    fn synth_defective_pair_spectrum() {
        let sp = synth_pencil(&[cx(1.0, 0.0), cx(1.0, 0.0)], 2, 3, false, None);
        let eig = dense_eigs(&sp.pencil).unwrap();
        // defective eigenvalues are only sqrt(eps)-accurate under QR
        match_multisets(&eig, &sp.true_eigenvalues, 1e-5).unwrap();
    }

    #[test]
    fn synth_similarity_preserves_spectrum() {
        let prescribed: Vec<C> = vec![cx(0.3, 0.1), cx(0.5, -0.2), cx(0.9, 0.4), cx(-0.2, 0.0)];
        let sp = synth_pencil(&prescribed, 50, 7, true, None);
        let eig = dense_eigs(&sp.pencil).unwrap();
        let pairs = match_multisets(&eig, &sp.true_eigenvalues, 1e-5).unwrap();
        for (i, j) in pairs {
            assert!(
                (eig[i] - sp.true_eigenvalues[j]).norm() <= 1e-7,
                "matched at distance {}",
                (eig[i] - sp.true_eigenvalues[j]).norm()
            );
        }
    }

    #[test]
    fn synth_with_diagonal_b() {
        let prescribed: Vec<C> = vec![cx(0.4, 0.2), cx(0.7, -0.3)];
        let n = 30;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b_diag: Vec<C> = (0..n)
            .map(|_| {
                let z = sample_complex_normal::<f64, _>(&mut rng);
                z + cx(3.0, 0.0)
            })
            .collect();
        let sp = synth_pencil(&prescribed, n, 11, true, Some(&b_diag));
        assert!(sp.pencil.b().is_some());
        let eig = dense_eigs(&sp.pencil).unwrap();
        let pairs = match_multisets(&eig, &sp.true_eigenvalues, 1e-5).unwrap();
        for (i, j) in pairs {
            assert!((eig[i] - sp.true_eigenvalues[j]).norm() <= 1e-7);
        }
    }

    #[test]
    fn two_hundred_by_two_hundred_interior_values_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(88);
        let prescribed: Vec<C> = (0..12)
            .map(|_| {
                cx(
                    0.05 + 0.9 * rng.random::<f64>(),
                    -0.45 + 0.9 * rng.random::<f64>(),
                )
            })
            .collect();
        let sp = synth_pencil(&prescribed, 200, 89, true, None);
        let eig = dense_eigs(&sp.pencil).unwrap();
        let interior: Vec<C> = eig
            .into_iter()
            .filter(|v| v.re > 0.0 && v.re < 1.0 && v.im.abs() < 0.5)
            .collect();
        assert_eq!(interior.len(), 12);
        let pairs = match_multisets(&interior, &prescribed, 1e-5).unwrap();
        for (i, j) in pairs {
            assert!((interior[i] - prescribed[j]).norm() <= 1e-7);
        }
    }

    #[test]
    fn twenty_synthetic_pencils_match_to_1e6() {
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let prescribed: Vec<C> = (0..8)
                .map(|_| sample_complex_normal::<f64, _>(&mut rng))
                .collect();
            let sp = synth_pencil(&prescribed, 100, 2000 + seed, true, None);
            let eig = dense_eigs(&sp.pencil).unwrap();
            let pairs = match_multisets(&eig, &sp.true_eigenvalues, 1e-5)
                .unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            for (i, j) in pairs {
                let d = (eig[i] - sp.true_eigenvalues[j]).norm();
                assert!(d <= 1e-6, "seed {seed}: matched distance {d}");
            }
        }
    }

    #[test]
    fn direct_projection_matches_rational_filter() {
        // On a diagonal pencil the N-point trapezoid projector acts on
        // component k by 1 / (u^N - 1) with u = (lambda_k - c) / rho.
        let eigs: Vec<C> = vec![cx(0.5, 0.0), cx(10.0, 0.0), cx(3.0, 2.0)];
        let a = SparseMatrix::diagonal(&eigs);
        let pencil = MatrixPencil::standard(a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_complex_vector(&mut rng, 3);
        let sq = Square::new(cx(0.5, 0.1), 0.4);
        let n_points = 12usize;
        let got = direct_projection(&pencil, &sq, &f, n_points).unwrap();
        let rho = sq.radius();
        for k in 0..3 {
            let u = (eigs[k] - sq.center) / rho;
            let filt = cx(1.0, 0.0) / (u.powi(n_points as i32) - 1.0);
            let want = f[k] * filt;
            // the quadrature sum cancels heavily for far-away eigenvalues;
            // allow for roundoff at the scale of the summed terms
            let term_scale: f64 = (0..n_points)
                .map(|j| {
                    let theta = 2.0 * std::f64::consts::PI * j as f64 / n_points as f64;
                    let z = sq.center + cx(theta.cos(), theta.sin()).scale(rho);
                    (rho / n_points as f64) * f[k].norm() / (eigs[k] - z).norm()
                })
                .sum();
            let tol = 1e-12 * want.norm() + 1e-14 * term_scale;
            assert!(
                (got[k] - want).norm() <= tol,
                "component {k}: {} vs {} (tol {tol})",
                got[k],
                want
            );
        }
    }

    #[test]
    fn direct_projection_empty_square_filters_everything() {
        let eigs: Vec<C> = vec![cx(0.5, 0.0), cx(10.0, 0.0), cx(3.0, 2.0), cx(-4.0, 1.0)];
        let a = SparseMatrix::diagonal(&eigs);
        let pencil = MatrixPencil::standard(a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f = random_complex_vector(&mut rng, 4);
        let sq = Square::new(cx(6.0, -4.0), 0.5);
        let p = direct_projection(&pencil, &sq, &f, 16).unwrap();
        assert!(norm2(&p) <= 1e-3 * norm2(&f));
    }

    #[test]
    fn matching_detects_count_and_distance_failures() {
        let a = [cx(1.0, 0.0)];
        let b = [cx(1.0, 0.0), cx(2.0, 0.0)];
        assert!(match_multisets(&a, &b, 1e-5).is_err());
        let c = [cx(1.0, 0.0), cx(5.0, 0.0)];
        assert!(match_multisets(&c, &b, 1e-5).is_err());
    }

    #[test]
    fn hausdorff_of_shifted_sets() {
        let a = [cx(0.0, 0.0), cx(1.0, 0.0)];
        let b = [cx(0.0, 0.1), cx(1.0, 0.0)];
        assert!((hausdorff(&a, &b) - 0.1).abs() < 1e-15);
    }
}

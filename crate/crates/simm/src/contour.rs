//! Quadrature geometry on the circle circumscribing a square, resolvability
//! tests, the V-free indicator, and spectral-projection vectors.
//!
//! The indicator for a square is the norm ratio of the 2 n0-point and
//! n0-point trapezoid sums of reduced solutions, evaluated with a single
//! shift whose Krylov data resolves every quadrature point. With
//! `z(theta) = c + rho e^{i theta}` the trapezoid rule on N points folds
//! into coefficients `w_j = (rho / N) e^{i theta_j}`, and the n0-point rule
//! reuses exactly the even-indexed points of the 2 n0-point rule.

use crate::dense::{axpy, norm2};
use crate::error::{Error, Result};
use crate::krylov::{reduced_solve, residual_estimate, KrylovTable, ShiftData, ShiftId};
use crate::scalar::{Cx, Scalar};
use num_complex::Complex;

/// Factor applied to the quadrature radius when a point collides with a
/// Ritz singularity of a reduced system.
const NUDGE: f64 = 1.001;

/// Axis-aligned square region of the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Square<S: Scalar> {
    pub center: Cx<S>,
    pub side: S,
}

impl<S: Scalar> Square<S> {
    pub fn new(center: Cx<S>, side: S) -> Self {
        assert!(side > S::zero(), "square side must be positive");
        Self { center, side }
    }

    /// Radius of the circumscribing circle.
    pub fn radius(&self) -> S {
        self.side * S::SQRT_2() / S::real(2.0)
    }

    /// The four quadrants, tiling the parent exactly.
    pub fn children(&self) -> [Square<S>; 4] {
        let q = self.side / S::real(4.0);
        let h = self.side / S::real(2.0);
        let mk = |dx: S, dy: S| Square {
            center: self.center + Complex::new(dx, dy),
            side: h,
        };
        [mk(-q, -q), mk(q, -q), mk(-q, q), mk(q, q)]
    }

    pub fn contains(&self, z: Cx<S>) -> bool {
        let h = self.side / S::real(2.0);
        (z.re - self.center.re).abs() <= h && (z.im - self.center.im).abs() <= h
    }
}

/// Nested trapezoid points and coefficients on the circumscribing circle.
#[derive(Debug, Clone)]
pub struct QuadratureSet<S: Scalar> {
    center: Cx<S>,
    radius: S,
    points: Vec<Cx<S>>,
    coeffs: Vec<Cx<S>>,
}

impl<S: Scalar> QuadratureSet<S> {
    /// The 2 n0-point rule for the square's circumscribing circle.
    pub fn for_square(square: &Square<S>, n0: usize) -> Self {
        Self::with_radius(square.center, square.radius(), n0)
    }

    pub fn with_radius(center: Cx<S>, radius: S, n0: usize) -> Self {
        assert!(n0 >= 2, "need at least two quadrature points per rule");
        let n = 2 * n0;
        let mut points = Vec::with_capacity(n);
        let mut coeffs = Vec::with_capacity(n);
        let scale = radius / S::from_usize(n).unwrap();
        for j in 0..n {
            let theta =
                S::real(2.0) * S::PI() * S::from_usize(j).unwrap() / S::from_usize(n).unwrap();
            let unit = Complex::new(theta.cos(), theta.sin());
            points.push(center + unit.scale(radius));
            coeffs.push(unit.scale(scale));
        }
        Self {
            center,
            radius,
            points,
            coeffs,
        }
    }

    pub fn center(&self) -> Cx<S> {
        self.center
    }

    pub fn radius(&self) -> S {
        self.radius
    }

    /// All 2 n0 points.
    pub fn points(&self) -> &[Cx<S>] {
        &self.points
    }

    /// Coefficients of the fine (2 n0-point) rule.
    pub fn coeffs(&self) -> &[Cx<S>] {
        &self.coeffs
    }

    /// Coefficient of point `j` under the coarse n0-point rule, defined for
    /// even `j` only (the coarse rule is the even-indexed subset).
    pub fn coarse_coeff(&self, j: usize) -> Cx<S> {
        debug_assert!(j % 2 == 0);
        self.coeffs[j].scale(S::real(2.0))
    }
}

/// Outcome of evaluating the indicator on one square.
#[derive(Debug, Clone, Copy)]
pub struct IndicatorValue<S: Scalar> {
    /// The norm ratio; finite whenever `resolvable` holds.
    pub value: S,
    /// Whether any single shift resolved all quadrature points.
    pub resolvable: bool,
    pub shift_used: Option<ShiftId>,
    /// Reduced solves actually performed during this evaluation.
    pub reduced_solves: u32,
}

fn shift_resolves<S: Scalar>(
    quad: &QuadratureSet<S>,
    sd: &ShiftData<S>,
    eps: S,
    lenient: bool,
) -> Result<bool> {
    for &z in quad.points() {
        match residual_estimate(sd, z) {
            Ok(r) if r <= eps => {}
            Ok(_) => return Ok(false),
            Err(Error::SingularReduced) if lenient => return Ok(false),
            Err(e) => return Err(e),
        }
    }
    Ok(true)
}

fn try_indicator<S: Scalar>(
    quad: &QuadratureSet<S>,
    table: &KrylovTable<S>,
    eps: S,
    lenient: bool,
    solves: &mut u32,
) -> Result<IndicatorValue<S>> {
    let zero = Complex::new(S::zero(), S::zero());
    'shifts: for (id, sd) in table.iter() {
        if !shift_resolves(quad, sd, eps, lenient)? {
            continue;
        }
        let m = sd.krylov_dim();
        let mut fine = vec![zero; m];
        let mut coarse = vec![zero; m];
        for (j, (&z, &w)) in quad.points().iter().zip(quad.coeffs()).enumerate() {
            let y = match reduced_solve(sd, z) {
                Ok(y) => y,
                Err(Error::SingularReduced) if lenient => continue 'shifts,
                Err(e) => return Err(e),
            };
            *solves += 1;
            axpy(&mut fine, w, &y);
            if j % 2 == 0 {
                axpy(&mut coarse, quad.coarse_coeff(j), &y);
            }
        }
        let num = norm2(&fine);
        let den = norm2(&coarse);
        let value = if num <= S::TINY && den <= S::TINY {
            // no projection signal at all: certainly no eigenvalue
            S::zero()
        } else {
            // a vanishing denominator with a live numerator is treated as
            // admissible, never discarding a possible eigenvalue
            (num / den.max(S::TINY)).min(S::max_value())
        };
        return Ok(IndicatorValue {
            value,
            resolvable: true,
            shift_used: Some(id),
            reduced_solves: *solves,
        });
    }
    Ok(IndicatorValue {
        value: S::zero(),
        resolvable: false,
        shift_used: None,
        reduced_solves: *solves,
    })
}

/// Evaluates the indicator on a square against the shift table.
///
/// Scans shifts in insertion order for the first one that resolves every
/// quadrature point within `eps`, then forms the two nested trapezoid sums
/// with that single shift. If a quadrature point collides with a Ritz
/// singularity, the radius is nudged once and the evaluation restarts.
pub fn indicator<S: Scalar>(
    square: &Square<S>,
    table: &KrylovTable<S>,
    eps: S,
    n0: usize,
) -> IndicatorValue<S> {
    let mut solves = 0u32;
    let quad = QuadratureSet::for_square(square, n0);
    match try_indicator(&quad, table, eps, false, &mut solves) {
        Ok(iv) => iv,
        Err(_) => {
            let nudged =
                QuadratureSet::with_radius(square.center, square.radius() * S::real(NUDGE), n0);
            try_indicator(&nudged, table, eps, true, &mut solves)
                .expect("lenient indicator evaluation is infallible")
        }
    }
}

/// True iff every point of the square's 2 n0-point rule has a residual
/// estimate within `eps` for this shift.
pub fn is_resolvable<S: Scalar>(square: &Square<S>, sd: &ShiftData<S>, eps: S, n0: usize) -> bool {
    let quad = QuadratureSet::for_square(square, n0);
    match shift_resolves(&quad, sd, eps, false) {
        Ok(b) => b,
        Err(_) => {
            let nudged =
                QuadratureSet::with_radius(square.center, square.radius() * S::real(NUDGE), n0);
            shift_resolves(&nudged, sd, eps, true).unwrap_or(false)
        }
    }
}

/// Spectral-projection vector of the shift's starting vector over the
/// square, using an `n_points`-point rule: `sum_j w_j V_m y_j`. Requires a
/// retained basis.
pub fn projection_vector<S: Scalar>(
    square: &Square<S>,
    sd: &ShiftData<S>,
    n_points: usize,
) -> Result<Vec<Cx<S>>> {
    let run = |radius: S| -> Result<Vec<Cx<S>>> {
        let n = n_points.max(1);
        let zero = Complex::new(S::zero(), S::zero());
        let mut ysum = vec![zero; sd.krylov_dim()];
        let scale = radius / S::from_usize(n).unwrap();
        for j in 0..n {
            let theta =
                S::real(2.0) * S::PI() * S::from_usize(j).unwrap() / S::from_usize(n).unwrap();
            let unit = Complex::new(theta.cos(), theta.sin());
            let z = square.center + unit.scale(radius);
            let y = reduced_solve(sd, z)?;
            axpy(&mut ysum, unit.scale(scale), &y);
        }
        crate::krylov::lift(sd, &ysum)
    };
    match run(square.radius()) {
        Err(Error::SingularReduced) => run(square.radius() * S::real(NUDGE)),
        other => other,
    }
}

/// Projection-based reference indicator computed with direct solves at the
/// quadrature points: `|| P (P f / || P f ||) ||`. A test oracle for small
/// problems, not part of the search path.
pub fn reference_indicator_rim<S: Scalar>(
    square: &Square<S>,
    pencil: &crate::sparse::MatrixPencil<S>,
    f: &[Cx<S>],
    n0: usize,
) -> Result<S> {
    let pf = crate::oracle::direct_projection(pencil, square, f, n0)?;
    let npf = norm2(&pf);
    if npf <= S::TINY {
        return Ok(S::zero());
    }
    let inv = S::one() / npf;
    let g: Vec<Cx<S>> = pf.iter().map(|z| z.scale(inv)).collect();
    let pg = crate::oracle::direct_projection(pencil, square, &g, n0)?;
    Ok(norm2(&pg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::build_shift;
    use crate::scalar::{cx, random_complex_vector};
    use crate::sparse::{MatrixPencil, SparseMatrix};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type C = Cx<f64>;

    #[test]
    fn quadrature_points_center_zero_side_two() {
        let sq = Square::new(cx(0.0, 0.0), 2.0);
        let quad = QuadratureSet::for_square(&sq, 2);
        let r = 2.0f64.sqrt();
        assert!((quad.radius() - r).abs() < 1e-15);
        let want = [cx(r, 0.0), cx(0.0, r), cx(-r, 0.0), cx(0.0, -r)];
        for (p, w) in quad.points().iter().zip(&want) {
            assert!((p - w).norm() < 1e-14, "{p} vs {w}");
        }
    }

    #[test]
    fn quadrature_translates_exactly_from_origin() {
        let t = cx(1.0, 1.0);
        let q0 = QuadratureSet::for_square(&Square::new(cx(0.0, 0.0), 2.0), 4);
        let q1 = QuadratureSet::for_square(&Square::new(t, 2.0), 4);
        for (a, b) in q0.points().iter().zip(q1.points()) {
            assert_eq!(*a + t, *b);
        }
        // coefficients are translation invariant
        assert_eq!(q0.coeffs(), q1.coeffs());
    }

    #[test]
    fn quadrature_scales_exactly_by_powers_of_two() {
        let q1 = QuadratureSet::for_square(&Square::new(cx(0.0, 0.0), 1.0), 4);
        let q2 = QuadratureSet::for_square(&Square::new(cx(0.0, 0.0), 2.0), 4);
        for (a, b) in q1.points().iter().zip(q2.points()) {
            assert_eq!(a.scale(2.0), *b);
        }
    }

    #[test]
    fn nesting_even_points_form_coarse_rule() {
        let sq = Square::new(cx(0.3, -0.2), 0.7);
        let fine = QuadratureSet::for_square(&sq, 8); // 16 points
        let coarse = QuadratureSet::for_square(&sq, 4); // 8 points
        for j in 0..8 {
            let d = (fine.points()[2 * j] - coarse.points()[j]).norm();
            assert!(d < 1e-15, "nesting violated at {j}: {d}");
        }
    }

    #[test]
    fn children_tile_parent() {
        let sq = Square::new(cx(0.25, -1.5), 1.0);
        let ch = sq.children();
        for c in &ch {
            assert_eq!(c.side, 0.5);
            assert!(sq.contains(c.center));
        }
        // distinct quadrant centers
        for i in 0..4 {
            for j in i + 1..4 {
                assert!((ch[i].center - ch[j].center).norm() > 0.4);
            }
        }
    }

    /// Diagonal pencil with eigenvalues small enough that the Krylov space
    /// becomes exact (happy breakdown), making indicator values equal to
    /// direct quadrature of the resolvent.
    fn diagonal_setup(eigs: &[C], seed: u64) -> (MatrixPencil<f64>, Vec<C>, KrylovTable<f64>) {
        let a = SparseMatrix::diagonal(eigs);
        let pencil = MatrixPencil::standard(a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_complex_vector(&mut rng, eigs.len());
        let mut table = KrylovTable::new();
        let sd = build_shift(&pencil, cx(5.05, 0.03), &f, eigs.len() + 5, false).unwrap();
        assert_eq!(sd.h_next(), 0.0, "expected exact subspace");
        table.push(sd).unwrap();
        (pencil, f, table)
    }

    fn spread_eigs() -> Vec<C> {
        vec![
            cx(0.5, 0.0),
            cx(10.0, 0.0),
            cx(3.0, 2.0),
            cx(-4.0, 1.0),
            cx(7.0, -3.0),
            cx(1.5, -6.0),
        ]
    }

    #[test]
    fn indicator_flags_square_with_eigenvalue() {
        let (pencil, f, table) = diagonal_setup(&spread_eigs(), 42);
        let sq = Square::new(cx(0.5, 0.0), 0.2);
        let iv = indicator(&sq, &table, 1e-8, 8);
        assert!(iv.resolvable);
        assert!(
            iv.value > 0.05,
            "indicator {} should exceed threshold",
            iv.value
        );
        assert!(
            iv.value > 0.5 && iv.value < 2.0,
            "single eigenvalue ratio {}",
            iv.value
        );
        assert_eq!(iv.reduced_solves, 16);

        // V-free ratio must match the direct-solve ratio
        let fine = crate::oracle::direct_projection(&pencil, &sq, &f, 16).unwrap();
        let coarse = crate::oracle::direct_projection(&pencil, &sq, &f, 8).unwrap();
        let want = norm2(&fine) / norm2(&coarse);
        assert!(
            (iv.value - want).abs() <= 1e-8 * want,
            "module {} vs direct {}",
            iv.value,
            want
        );
    }

    #[test]
    fn indicator_rejects_empty_square() {
        let (_pencil, _f, table) = diagonal_setup(&spread_eigs(), 43);
        let sq = Square::new(cx(5.0, 0.0), 0.2);
        let iv = indicator(&sq, &table, 1e-8, 8);
        assert!(iv.resolvable);
        assert!(iv.value < 0.05, "empty square indicator {}", iv.value);
    }

    #[test]
    fn empty_square_indicator_decays_with_more_points() {
        let (_pencil, _f, table) = diagonal_setup(&spread_eigs(), 44);
        let sq = Square::new(cx(5.5, 4.0), 0.3);
        let i4 = indicator(&sq, &table, 1e-8, 4);
        let i8 = indicator(&sq, &table, 1e-8, 8);
        assert!(
            i8.value < i4.value,
            "n0=8 {} vs n0=4 {}",
            i8.value,
            i4.value
        );
        assert!(i4.value < 0.05 && i8.value < 0.05);
    }

    #[test]
    fn resolvable_near_shift_and_exact_subspace() {
        let (pencil, f, table) = diagonal_setup(&spread_eigs(), 45);
        // exact subspace resolves everything with nonsingular reduced systems
        let far = Square::new(cx(-20.0, 13.0), 0.5);
        let (_, sd) = table.iter().next().unwrap();
        assert!(is_resolvable(&far, sd, 1e-8, 8));

        // non-breakdown shift: small square at sigma has residual -> 0
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let n = 60;
        let mut trip = Vec::new();
        let mut rowsum = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.random::<f64>() < 0.1 {
                    let v: C = crate::scalar::sample_complex_normal(&mut rng);
                    rowsum[i] += v.norm();
                    trip.push((i, j, v));
                }
            }
        }
        for i in 0..n {
            trip.push((i, i, cx(rowsum[i] + 1.0, 0.1)));
        }
        let a = SparseMatrix::from_triplets(n, n, trip).unwrap();
        let pencil2 = MatrixPencil::standard(a).unwrap();
        let f2 = random_complex_vector(&mut rng, n);
        let sd2 = build_shift(&pencil2, cx(0.4, 0.2), &f2, 12, false).unwrap();
        assert!(sd2.h_next() > 0.0);
        let tiny_sq = Square::new(sd2.sigma(), 1e-9);
        assert!(is_resolvable(&tiny_sq, &sd2, 1e-6, 8));
        let _ = (pencil, f);
    }

    #[test]
    fn projection_vector_matches_direct_solves() {
        let eigs = spread_eigs();
        let a = SparseMatrix::diagonal(&eigs);
        let pencil = MatrixPencil::standard(a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let f = random_complex_vector(&mut rng, eigs.len());
        let sd = build_shift(&pencil, cx(5.05, 0.03), &f, eigs.len() + 5, true).unwrap();

        // isolating square around eigenvalue 3 + 2i
        let sq = Square::new(cx(3.0, 2.0), 0.4);
        let via_krylov = projection_vector(&sq, &sd, 16).unwrap();
        let direct = crate::oracle::direct_projection(&pencil, &sq, &f, 16).unwrap();
        let diff: Vec<C> = via_krylov.iter().zip(&direct).map(|(a, b)| a - b).collect();
        assert!(norm2(&diff) <= 1e-9 * norm2(&direct));

        // empty square: everything filtered away
        let empty = Square::new(cx(5.5, 4.0), 0.4);
        let p = projection_vector(&empty, &sd, 16).unwrap();
        assert!(norm2(&p) <= 1e-3 * norm2(&f));

        // basis required
        let sd_nb = build_shift(&pencil, cx(5.06, 0.04), &f, eigs.len() + 5, false).unwrap();
        assert!(matches!(
            projection_vector(&sq, &sd_nb, 16),
            Err(Error::BasisNotRetained)
        ));
    }

    #[test]
    fn projection_error_shrinks_with_doubled_points() {
        // exponential trapezoid convergence on the diagonal test pencil
        let eigs = spread_eigs();
        let a = SparseMatrix::diagonal(&eigs);
        let pencil = MatrixPencil::standard(a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(48);
        let f = random_complex_vector(&mut rng, eigs.len());
        let sd = build_shift(&pencil, cx(5.05, 0.03), &f, eigs.len() + 5, true).unwrap();
        let sq = Square::new(cx(0.5, 0.0), 1.2);

        // exact projector on a diagonal pencil keeps exactly component 0
        let mut exact = vec![cx(0.0, 0.0); eigs.len()];
        exact[0] = -f[0]; // resolvent sign convention of (A - zB)^{-1}
        let err = |n_points: usize| -> f64 {
            let p = projection_vector(&sq, &sd, n_points).unwrap();
            let d: Vec<C> = p.iter().zip(&exact).map(|(a, b)| a - b).collect();
            norm2(&d)
        };
        let e8 = err(8);
        let e16 = err(16);
        assert!(
            e16 * 10.0 <= e8,
            "doubling points should cut the error by 10x: {e8} -> {e16}"
        );
    }

    #[test]
    fn rim_reference_indicator_behaves() {
        let eigs = spread_eigs();
        let a = SparseMatrix::diagonal(&eigs);
        let pencil = MatrixPencil::standard(a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(49);
        let f = random_complex_vector(&mut rng, eigs.len());

        let with_eig = Square::new(cx(0.5, 0.0), 0.3);
        let v = reference_indicator_rim(&with_eig, &pencil, &f, 8).unwrap();
        assert!((v - 1.0).abs() < 0.05, "RIM indicator {v} should be near 1");

        let empty = Square::new(cx(5.5, 4.0), 0.3);
        let v2 = reference_indicator_rim(&empty, &pencil, &f, 8).unwrap();
        assert!(v2 < 0.05, "empty RIM indicator {v2}");
    }

    #[test]
    fn rim_and_vfree_agree_on_admissibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let eigs = spread_eigs();
        let (pencil, f, table) = diagonal_setup(&eigs, 51);
        let mut agreements = 0;
        for _ in 0..20 {
            let inside = rng.random::<f64>() < 0.5;
            let sq = if inside {
                let k = rng.random_range(0..eigs.len());
                Square::new(eigs[k] + cx(0.02, -0.01), 0.3)
            } else {
                // far away from every eigenvalue
                Square::new(cx(20.0 + rng.random::<f64>(), 15.0), 0.3)
            };
            let iv = indicator(&sq, &table, 1e-8, 8);
            assert!(iv.resolvable);
            let rim = reference_indicator_rim(&sq, &pencil, &f, 8).unwrap();
            assert_eq!(
                iv.value > 0.05,
                rim > 0.05,
                "admissibility disagrees on {sq:?}: vfree {} rim {}",
                iv.value,
                rim
            );
            agreements += 1;
        }
        assert_eq!(agreements, 20);
        let _ = f;
    }
}

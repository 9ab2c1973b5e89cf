//! Real scalar abstraction backing all complex arithmetic.
//!
//! Every numerical module is generic over [`Scalar`]; concrete `f64` aliases
//! live at the crate root. `f32` satisfies the trait as well, though the
//! default tolerances are chosen for double precision.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use std::fmt::{Debug, Display, LowerExp};

/// Real scalar type for the solver.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + Debug
    + Display
    + LowerExp
    + Default
    + Serialize
    + Send
    + Sync
    + 'static
{
    /// Magnitude below which a quantity is treated as an exact zero
    /// (pivot rejection, denominator guards).
    const TINY: Self;

    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Conversion shorthand for tolerance constants.
    fn real(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in scalar type")
    }
}

impl Scalar for f64 {
    const TINY: Self = 1e-300;

    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

impl Scalar for f32 {
    // 1e-300 underflows in single precision; the smallest positive normal
    // plays the same role.
    const TINY: Self = f32::MIN_POSITIVE;

    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

/// Complex scalar over `S`.
pub type Cx<S> = Complex<S>;

/// Complex constructor from `f64` literals.
pub fn cx<S: Scalar>(re: f64, im: f64) -> Cx<S> {
    Complex::new(S::real(re), S::real(im))
}

/// Draws one sample of the standard complex normal CN(0, 1).
pub fn sample_complex_normal<S: Scalar, R: Rng + ?Sized>(rng: &mut R) -> Cx<S> {
    let half = S::real(0.5).sqrt();
    Complex::new(
        S::sample_standard_normal(rng) * half,
        S::sample_standard_normal(rng) * half,
    )
}

/// A random complex vector with independent CN(0, 1) components.
pub fn random_complex_vector<S: Scalar, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Cx<S>> {
    (0..n).map(|_| sample_complex_normal(rng)).collect()
}

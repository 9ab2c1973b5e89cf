//! Multilevel spectral-indicator eigensolver for large sparse non-Hermitian
//! generalized eigenproblems `A x = lambda B x`.
//!
//! Given a rectangular region of the complex plane, the solver locates all
//! eigenvalues inside it to a requested precision. Regions are probed with
//! a cheap indicator built from contour quadrature of reduced Krylov
//! solutions: each shift costs one sparse factorization and one Arnoldi
//! run, after which every quadrature point anywhere in the region is served
//! from m-by-m data. Admissible squares are bisected level by level until
//! the eigenvalues are pinned down to the target precision.
//!
//! Module map:
//! - [`sparse`], [`mmio`], [`lu`]: compressed-column matrices, Matrix
//!   Market I/O, and the sparse direct solver behind every shift.
//! - [`krylov`]: per-shift Arnoldi data, reduced solves, residual
//!   estimates.
//! - [`contour`]: quadrature geometry, resolvability, the indicator, and
//!   spectral-projection vectors.
//! - [`search`]: the multilevel driver, square merging, multiplicities.
//! - [`oracle`]: dense reference eigensolver and synthetic pencils for
//!   validation.
//! - [`manifest`]: JSON/CSV/tree outputs used by the `simm` binary.
//!
//! All numerics are generic over the real scalar via [`scalar::Scalar`];
//! the `*64` aliases below fix `f64`, which the command-line tool uses.

pub mod contour;
pub mod dense;
pub mod error;
pub mod krylov;
pub mod lu;
pub mod manifest;
pub mod mmio;
pub mod oracle;
pub mod scalar;
pub mod search;
pub mod sparse;

pub use error::{Error, Result};
pub use scalar::{cx, Cx, Scalar};

/// Double-precision complex scalar.
pub type C64 = num_complex::Complex<f64>;
pub type SparseMatrix64 = sparse::SparseMatrix<f64>;
pub type MatrixPencil64 = sparse::MatrixPencil<f64>;
pub type Factorization64 = lu::Factorization<f64>;
pub type ShiftData64 = krylov::ShiftData<f64>;
pub type KrylovTable64 = krylov::KrylovTable<f64>;
pub type Square64 = contour::Square<f64>;
pub type QuadratureSet64 = contour::QuadratureSet<f64>;
pub type Region64 = search::Region<f64>;
pub type SearchConfig64 = search::SearchConfig<f64>;
pub type EigenvalueRecord64 = search::EigenvalueRecord<f64>;
pub type SearchOutcome64 = search::SearchOutcome<f64>;

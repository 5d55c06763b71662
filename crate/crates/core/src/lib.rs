//! Closed-form reductions of Gaussian-CDF-product integrals to multivariate
//! normal CDFs, the probit-linked multivariate Bernoulli distribution, and
//! the independent numerical oracles used to check both.
//!
//! The numerical kernels are generic over [`Real`] (`f32`, `f64`); the
//! `*F64` aliases below fix the scalar type for the common case.

// NaN inputs must fail the `!(x > 0)`-style checks, so these stay negated.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gauss_scalar;
pub mod mvn_cdf;
pub mod oracles;
pub mod owen_identities;
pub mod pd_matrix;
pub mod probit_bernoulli;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use gauss_scalar::StdGaussian;
pub use mvn_cdf::{bivariate_cdf, Method, MvnEstimate, MvnQuery};
pub use oracles::McEstimate;
pub use owen_identities::{Lemma2Params, Lemma3Params};
pub use pd_matrix::{MatrixFile, PdMatrix, PrecisionBlocks};
pub use probit_bernoulli::{Normalization, ProbitBernoulli, SignVector};
pub use scalar::Real;

pub type PdMatrixF64 = PdMatrix<f64>;
pub type PdMatrixF32 = PdMatrix<f32>;
pub type PrecisionBlocksF64 = PrecisionBlocks<f64>;
pub type MvnQueryF64 = MvnQuery<f64>;
pub type MvnEstimateF64 = MvnEstimate<f64>;
pub type Lemma2ParamsF64 = Lemma2Params<f64>;
pub type Lemma3ParamsF64 = Lemma3Params<f64>;
pub type ProbitBernoulliF64 = ProbitBernoulli<f64>;
pub type ProbitBernoulliF32 = ProbitBernoulli<f32>;

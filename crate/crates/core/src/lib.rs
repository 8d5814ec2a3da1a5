//! Bias-reduced estimation of smooth functionals in the Gaussian shift model.
//!
//! Given `x = theta + xi` with `xi ~ N(0, Sigma)`, the estimator multiplies each
//! retained Fourier mode of `f` by `exp(<Sigma zeta, zeta> / 2)`, undoing the
//! Gaussian smoothing of `E f(x)` on a truncated spectrum. The crate is
//! `no_std` (it needs `alloc`); the `std` feature only enables
//! `std::error::Error` through the error type.

#![no_std]
#![forbid(unsafe_code)]
// `!(a > b)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod adaptive;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod fft;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod spectral;

pub use adaptive::{adaptive_estimate, AdaptiveConfig, AdaptiveState, SampleBatch};
pub use error::{Error, Result};
pub use estimator::{
    build_debiased_1d, eval_product, plug_in, BaseFunction, DebiasedEvaluator1D, ProductFunction,
    TensorEvaluator, TruncationChoice,
};
pub use model::{cutoff_level, CovarianceSpec, SequenceModelConfig, ShiftModel};
pub use spectral::{analyze, GridFunction1D, Spectrum1D};

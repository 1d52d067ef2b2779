//! Limit curves and dimension-free simulation of gradient span algorithms on
//! isotropic Gaussian random functions.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod assembly;
pub mod error;
pub mod gaussian;
pub mod gsa;
pub mod harness;
pub mod kernelspace;
pub mod predictor;
mod quadrature;
pub mod sampler;

pub use assembly::{step_moments, StepMoments};
pub use error::{Error, ErrorClass, Result};

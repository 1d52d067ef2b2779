use thiserror::Error;

use crate::gaussian::GaussianError;
use crate::gsa::GsaError;
use crate::kernelspace::KernelError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
    #[error(transparent)]
    Gsa(#[from] GsaError),
    #[error("degenerate kernel: kappa_3 = {kappa3:e} at the starting point")]
    DegenerateKernel { kappa3: f64 },
    #[error("rank stall at step {step}: residual variance {sigma_sq:e}")]
    RankStall { step: usize, sigma_sq: f64 },
    #[error("coincident evaluation points {k} and {l}: distance {rho:e}")]
    CoincidentPoints { k: usize, l: usize, rho: f64 },
    #[error("numerical inconsistency at step {step}: residual variance {sigma_sq:e}")]
    NumericalConsistency { step: usize, sigma_sq: f64 },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Broad classes of failure, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Numerical,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Kernel(KernelError::Domain { .. }) => ErrorClass::Numerical,
            Error::Kernel(_) => ErrorClass::Config,
            Error::Gaussian(GaussianError::NotPsd { .. }) => ErrorClass::Numerical,
            Error::Gaussian(GaussianError::Argument(_)) => ErrorClass::Numerical,
            Error::Gsa(GsaError::DegenerateProjection { .. }) => ErrorClass::Numerical,
            Error::Gsa(GsaError::InvalidInfo(_)) => ErrorClass::Numerical,
            Error::Gsa(GsaError::InvalidParameters(_)) => ErrorClass::Config,
            Error::DegenerateKernel { .. }
            | Error::RankStall { .. }
            | Error::CoincidentPoints { .. }
            | Error::NumericalConsistency { .. } => ErrorClass::Numerical,
            Error::Argument(_) | Error::Config(_) => ErrorClass::Config,
            Error::Io(_) => ErrorClass::Io,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Kernel(KernelError::Domain { .. }) => "kernel_domain",
            Error::Kernel(_) => "kernel_parameters",
            Error::Gaussian(GaussianError::NotPsd { .. }) => "not_psd",
            Error::Gaussian(GaussianError::Argument(_)) => "gaussian_argument",
            Error::Gsa(GsaError::DegenerateProjection { .. }) => "degenerate_projection",
            Error::Gsa(GsaError::InvalidInfo(_)) => "invalid_info",
            Error::Gsa(GsaError::InvalidParameters(_)) => "algorithm_parameters",
            Error::DegenerateKernel { .. } => "degenerate_kernel",
            Error::RankStall { .. } => "rank_stall",
            Error::CoincidentPoints { .. } => "coincident_points",
            Error::NumericalConsistency { .. } => "numerical_consistency",
            Error::Argument(_) => "argument",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

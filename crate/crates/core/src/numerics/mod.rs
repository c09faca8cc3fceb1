//! Shared numerical kernels: log-binned histograms, least squares, simplex
//! minimisation, special functions, FFT, quadrature and two-sample tests.
//!
//! Everything here is a deterministic pure function of its inputs.

mod fft;
mod histogram;
mod linfit;
mod minimize;
mod quadrature;
mod special;
mod stats;

pub use fft::{fft_complex, fft_in_place, fft_real, Direction};
pub use histogram::{log_bin, log_bin_integer, log_bin_with_edges, LogBinnedPdf, UniformHistogram};
pub use linfit::{linfit, LinFit};
pub use minimize::{minimize, Bound, Minimum};
pub use quadrature::{adaptive_simpson, integrate_semi_infinite};
pub use special::{gamma_fn, gamma_p, gamma_q, ln_gamma};
pub use stats::{ks_two_sample, mean, variance, KsTest};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("empty input")]
    EmptyInput,
    #[error("non-positive sample {0} cannot be log-binned")]
    NonPositiveSample(f64),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("x and y have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("all x values are equal")]
    DegenerateX,
    #[error("objective is not finite at the starting point")]
    NonFiniteObjective,
    #[error("FFT length {0} is not a power of two")]
    BadLength(usize),
    #[error("adaptive quadrature exceeded maximum recursion depth on [{0}, {1}]")]
    MaxDepthExceeded(f64, f64),
    #[error("invalid bin edges: {0}")]
    BadEdges(&'static str),
}

pub type Result<T> = std::result::Result<T, NumericsError>;

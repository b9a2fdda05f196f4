use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge: error estimate {error_estimate:e} > tolerance {tol:e} after {evaluations} evaluations")]
    NonConvergent {
        error_estimate: f64,
        tol: f64,
        evaluations: u64,
    },

    #[error(
        "series truncation did not converge: tail bound {tail_bound:e} > tolerance {tail_tol:e} at n_max = {n_max}"
    )]
    TruncationUnconverged {
        n_max: usize,
        tail_bound: f64,
        tail_tol: f64,
    },

    #[error("found {found} local extrema in the window, need at least 3")]
    InsufficientFringes { found: usize },

    #[error("phase pair ({beta1}, {beta2}) brings the two masses into contact")]
    SingularConfiguration { beta1: f64, beta2: f64 },

    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error("t = {t} is {offset:e} periods away from the nearest crossing")]
    NotACrossing { t: f64, offset: f64 },
}

impl Error {
    /// True for failures caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergent { .. } | Error::TruncationUnconverged { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CraneError {
    /// State or parameter outside the region where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is numerically singular (condition number {condition:.3e})")]
    Singular { condition: f64 },

    #[error("finite-difference derivatives did not converge: relative change {change:.3e} > {tolerance:.3e}")]
    NonConvergence { change: f64, tolerance: f64 },

    #[error("closed-form linearization deviates from the numeric one by {deviation:.3e} > {tolerance:.3e}")]
    LinearizationMismatch { deviation: f64, tolerance: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("simulation aborted at t = {time:.6} s: {source}")]
    Aborted {
        time: f64,
        #[source]
        source: Box<CraneError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = CraneError> = std::result::Result<T, E>;

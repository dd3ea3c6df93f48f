use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sampling interval {dt} s violates the Nyquist limit for bandwidth {bandwidth} Hz")]
    NyquistViolation { dt: f64, bandwidth: f64 },

    #[error("empty signal")]
    EmptySignal,

    #[error("empty or out-of-range window: {0}")]
    BadWindow(String),

    #[error("solver diverged at t = {t} s")]
    SolverDivergence { t: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("estimation failed: {0}")]
    EstimationFailure(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

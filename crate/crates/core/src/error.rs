use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside the range where the model is defined.
    #[error("parameter out of range: {0}")]
    Domain(String),

    #[error("index {index} out of range {lo}..={hi}")]
    Index { index: i64, lo: i64, hi: i64 },

    /// The singular potentials diverge at the endpoints of the unit interval.
    #[error("singular point u = {0}: boundary potentials diverge at 0 and 1")]
    Singularity(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// Two objects that must describe the same system disagree.
    #[error("inconsistent inputs: {0}")]
    Consistency(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("requested accuracy not reached: {0}")]
    Accuracy(String),

    #[error("trajectory resolution insufficient: {0}")]
    InsufficientResolution(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

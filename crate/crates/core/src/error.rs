use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// A quantile search ran past the largest representable bracket.
    #[error("quantile saturated at u = {u}: folded cdf({t_hi:e}) = {cdf_hi} still below target")]
    Saturation { u: f64, t_hi: f64, cdf_hi: f64 },

    /// Matrix is numerically rank deficient.
    #[error("ill-conditioned system: detected rank {rank} of {expected}")]
    Conditioning { rank: usize, expected: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("failed to parse distribution spec {spec:?}: {msg}")]
    Parse { spec: String, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { op, msg: msg.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

use thiserror::Error;

/// Errors raised by the library. Offending values are carried as `f64`
/// regardless of the scalar type in use.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("supplied mean {supplied} differs from the quantile integral {computed}")]
    MeanMismatch { supplied: f64, computed: f64 },

    #[error(
        "distortion and quantile function both jump at p = {p}; the quantile representation does not cover this case"
    )]
    MixedDiscontinuity { p: f64 },

    #[error("distortion is discontinuous; the mean-variance maximizer requires a continuous h")]
    Discontinuous,

    #[error("distortion is not concave; take its concave envelope first")]
    NotConcave,

    #[error("distortion has zero derivative norm")]
    ZeroNorm,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("model is not well posed: {0}")]
    NotWellPosed(String),

    #[error("degenerate computation: {0}")]
    Degenerate(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub(crate) fn domain(what: &'static str, value: f64, domain: &'static str) -> Error {
    Error::Domain {
        what,
        value,
        domain,
    }
}

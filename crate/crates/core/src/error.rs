use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received an out-of-range parameter.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A contrast or functional evaluated to a non-finite value.
    #[error("numeric failure at theta = {theta:?}: {message}")]
    Numeric { theta: Vec<f64>, message: String },

    /// The functional does not provide the requested derivative.
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// The plug-in Hessian is singular or too badly conditioned to invert.
    #[error("degenerate Hessian (condition number {condition:e}): {hessian:?}")]
    DegenerateHessian { hessian: Vec<f64>, condition: f64 },

    /// The request is well formed but deliberately refused (e.g. too large).
    #[error("refused: {0}")]
    Refused(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

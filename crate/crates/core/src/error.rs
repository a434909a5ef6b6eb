use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument error: {0}")]
    Argument(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("validity error: {0}")]
    Validity(String),
    #[error("numeric error: {msg} (achieved {achieved:.3e})")]
    Numeric { msg: String, achieved: f64 },
    #[error("singularity: {0}")]
    Singularity(String),
    #[error("capability error: {0}")]
    Capability(String),
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("degenerate focal point: {0}")]
    Degenerate(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn numeric(msg: impl Into<String>, achieved: f64) -> Self {
        Error::Numeric { msg: msg.into(), achieved }
    }

    /// Short machine-readable code, used in run metadata.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Argument(_) => "argument",
            Error::Domain(_) => "domain",
            Error::Validity(_) => "validity",
            Error::Numeric { .. } => "numeric",
            Error::Singularity(_) => "singularity",
            Error::Capability(_) => "capability",
            Error::Consistency(_) => "consistency",
            Error::Degenerate(_) => "degenerate",
            Error::Resolution(_) => "resolution",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

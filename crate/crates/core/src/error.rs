use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The caller violated a precondition (empty input, bad indices, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// A referenced mirror has no angle entry.
    #[error("configuration error: no angle given for mirror `{mirror}`")]
    MissingMirror { mirror: String },

    #[error("quadrature did not converge on [{lo}, {hi}]: achieved error {achieved:e} > tolerance {tolerance:e}")]
    Quadrature {
        lo: f64,
        hi: f64,
        achieved: f64,
        tolerance: f64,
    },

    #[error("calibration failed: no sign change of the baseline signal in [{lo}, {hi}] (signal {signal_lo:e} .. {signal_hi:e})")]
    Calibration {
        lo: f64,
        hi: f64,
        signal_lo: f64,
        signal_hi: f64,
    },

    /// Numeric failure while evaluating one sample of a time series.
    #[error("sample {index}: {source}")]
    Sample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("validation error: `{field}`: {constraint}")]
    Validation { field: String, constraint: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("i/o error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn validation(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            constraint: constraint.into(),
        }
    }

    /// Process exit status: 2 validation, 3 numeric, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::Usage(_)
            | Error::MissingMirror { .. }
            | Error::Validation { .. }
            | Error::Parse { .. } => 2,
            Error::Quadrature { .. } | Error::Calibration { .. } | Error::Sample { .. } => 3,
            Error::Io { .. } => 4,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Usage(_) => "usage",
            Error::MissingMirror { .. } => "configuration",
            Error::Quadrature { .. } => "quadrature",
            Error::Calibration { .. } => "calibration",
            Error::Sample { .. } => "numeric",
            Error::Validation { .. } => "validation",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid physical or numerical configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Operands that do not fit together (mismatched dimensions, too few rows).
    #[error("usage error: {0}")]
    Usage(String),

    /// An input state or distribution failed a normalization or sanity check.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("numerical degeneracy in continued fraction at n = {n}: |denominator| = {denominator:e}")]
    NumericalDegeneracy { n: usize, denominator: f64 },

    /// The recursion produced a clearly negative ratio P_n / P_{n-1}.
    #[error("model violation at n = {n}: v_n = {value:e}")]
    ModelViolation { n: usize, value: f64 },

    #[error("truncation error: {0}")]
    Truncation(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("integration error: {0}")]
    Integration(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    /// Short machine-readable tag, used by the CLI error line and by sweep rows.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Usage(_) => "usage",
            Error::Validation(_) => "validation",
            Error::NumericalDegeneracy { .. } => "numerical_degeneracy",
            Error::ModelViolation { .. } => "model_violation",
            Error::Truncation(_) => "truncation",
            Error::Resource(_) => "resource",
            Error::Integration(_) => "integration",
            Error::Io { .. } => "io",
            Error::Format(_) => "format",
        }
    }
}

use thiserror::Error;

/// Errors raised by the analytic model, the simulator and the file loaders.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid timing: {0}")]
    InvalidTiming(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("constraint error: {0}")]
    Constraint(String),

    #[error("trace error at event {ordinal}: {message}")]
    Trace { ordinal: usize, message: String },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("search limit exceeded: {0}")]
    SearchLimit(String),

    #[error("unknown preset `{0}` (expected one of fig5, fig6, fig7, fig8a, fig8b, fig9)")]
    UnknownPreset(String),
}

pub type Result<T> = std::result::Result<T, Error>;

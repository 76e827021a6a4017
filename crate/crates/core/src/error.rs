use thiserror::Error;

/// Errors raised by the kernel, the constant generator and the reduction
/// pipeline. Theorem-precondition violations are reported, never papered over.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid format: {0}")]
    InvalidFormat(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("{value} is not representable in {format}")]
    NotRepresentable { value: String, format: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("argument out of range: {0}")]
    Range(String),

    #[error("Fast2Sum precondition violated for ({a}, {b})")]
    Fast2SumPrecondition { a: String, b: String },

    #[error("Fast2Mult error term of {a} * {b} is not representable")]
    TailUnderflow { a: String, b: String },

    #[error("{theorem}: hypothesis `{hypothesis}` fails ({detail})")]
    Hypothesis {
        theorem: &'static str,
        hypothesis: &'static str,
        detail: String,
    },

    #[error("ambiguous rounding: {0}")]
    AmbiguousRounding(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

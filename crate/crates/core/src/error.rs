use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The decision environment is malformed (range condition, bias slope,
    /// distribution normalization, ...).
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("non-finite value {value} at {at}")]
    NonFinite { at: f64, value: f64 },

    #[error("degenerate tail: 1 - F({t}) = {mass:e} is below 1e-12")]
    DegenerateTail { t: f64, mass: f64 },

    #[error("decision {0} is outside the working range [{1}, {2}]")]
    OutOfRange(f64, f64, f64),

    #[error("operation requires generic normalization; convert the kernel with `PayoffKernel::generic` first")]
    Normalization,

    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("delegation form constraint violated: {0}")]
    Form(String),

    #[error("effort slope degenerate at x = {0}")]
    DegenerateSlope(f64),

    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

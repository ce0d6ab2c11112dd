//! Error types shared across the crate.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in this crate.
///
/// The split matters for the CLI: [`Error::Io`] is treated as an internal
/// failure (exit code 2), everything else is an input problem (exit code 1).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A numeric argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Caller-supplied data is invalid or incomplete.
    #[error("input error: {0}")]
    Input(String),

    /// A document or table is structurally wrong (missing keys/columns, unknown fields).
    #[error("schema error: {0}")]
    Schema(String),

    /// A specific data row could not be used. Rows are numbered from 1,
    /// excluding the header.
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    /// A covariate name outside the closed vocabulary.
    #[error("unknown covariate `{0}`")]
    UnknownCovariate(String),

    /// An equation spec whose declared sex scheme contradicts its terms,
    /// or that otherwise violates its own invariants.
    #[error("inconsistent equation spec: {0}")]
    Consistency(String),

    /// Malformed document text (bad numbers, bad syntax).
    #[error("parse error: {0}")]
    Parse(String),

    /// Lookup of an id or window that has no entry.
    #[error("not found: {0}")]
    NotFound(String),

    /// A policy or option references something that is not configured.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// The operation is meaningless for this equation (e.g. a sex-coding
    /// swing on an equation without a sex term).
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// The regression design matrix is rank deficient.
    #[error("singular design matrix; collinear covariate(s): {}", .0.join(", "))]
    Singular(Vec<String>),

    /// History records must be appended in strictly increasing timestamp order.
    #[error("timestamp ordering violation: {0}")]
    Ordering(String),

    /// MAPE cannot be computed against a non-positive reference value.
    #[error("MAPE undefined: {0}")]
    MapeUndefined(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 2,
            _ => 1,
        }
    }
}

//! Error type shared across the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation
    /// (e.g. `t = 0`, a p-value outside `[0, 1]`).
    #[error("domain error: {0}")]
    Domain(String),

    /// A procedure was configured with invalid parameters (e.g. δ ∉ (0, 1]).
    #[error("config error: {0}")]
    Config(String),

    /// Malformed input data, with the 1-based data row that triggered it.
    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    /// A stream element violated a protocol requirement (e.g. a deadline in
    /// the past for a new arrival).
    #[error("input error: {0}")]
    Input(String),

    /// Internal contract violation surfaced to the caller (e.g. inserting a
    /// duplicate index into the wealth ledger).
    #[error("logic error: {0}")]
    Logic(String),

    /// Exhaustive oracle asked to enumerate beyond its budget.
    #[error("capability exceeded: {0}")]
    Capability(String),

    #[error("unknown procedure `{0}`")]
    UnknownProcedure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

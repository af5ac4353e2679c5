//! Error taxonomy shared by every module in the crate.
//!
//! Operations report failures in four categories: malformed input (bad
//! indices, unparseable files, inconsistent shapes), violated preconditions
//! (e.g. a non-realizable sequence passed to a learner that requires one),
//! exceeded resource budgets (table cells, recursion nodes, enumeration
//! sizes), and internal invariant violations, which always indicate a bug.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Input data is malformed: out-of-range indices, empty alphabets,
    /// ragged hypothesis rows, or unparseable files.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A documented precondition of the operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A configured resource budget would be exceeded. The message names
    /// the budget and the size the computation would have required.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// An internal invariant failed; this is a bug in the crate.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True when the error is a resource-budget rejection.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Resource(_))
    }
}

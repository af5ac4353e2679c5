//! Exact online-learning machinery for finite multiclass concept classes.
//!
//! The crate computes shattering dimensions of finite classes, runs the
//! standard optimal algorithm and its agnostic extensions built on expert
//! mixtures, and ships the adversaries and exhaustive oracles needed to
//! verify every mistake and regret bound those learners promise. All
//! computations are exact and deterministic: randomness flows from caller
//! seeds through one counter-based generator, and every potentially
//! exponential search is guarded by an explicit resource budget.

pub mod adversary;
pub mod agnostic;
pub mod caps;
pub mod concept;
pub mod dims;
pub mod mw;
pub mod oracle;
pub mod soa;

mod error;

pub use caps::{Caps, CAP_CELLS_ENV};
pub use error::{Error, Result};

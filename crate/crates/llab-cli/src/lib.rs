//! Experiment harness and verification suite for `llab-core`.
//!
//! [`experiment`] turns a declarative config into seeded trials with
//! per-inequality pass/fail reports and CSV traces; [`verify`] runs the
//! deterministic acceptance criteria behind `llab verify`.

pub mod experiment;
pub mod verify;

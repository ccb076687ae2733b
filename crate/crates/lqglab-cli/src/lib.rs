//! Library surface of the `lqglab` command-line tool: config resolution,
//! the check registry, and run-output (manifest/CSV) serialization.
//!
//! The binary in `main.rs` is a thin dispatcher over these modules; they are
//! exposed as a library so integration tests can drive the same code paths.

pub mod checks;
pub mod config;
pub mod report;

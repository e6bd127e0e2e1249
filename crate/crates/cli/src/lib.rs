//! Command-line front end and read-only HTTP service over the archdelta cache.

pub mod analyze;
pub mod api;
pub mod cli;
pub mod payload;

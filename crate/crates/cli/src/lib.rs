//! Command-line front end: TOML problem files, result bundles and grid export.

pub mod bundle;
pub mod commands;
pub mod gridfile;
pub mod problem;

//! Config parsing and artifact emission behind the `oamsim` binary,
//! exposed as a library so the parser contract is testable directly.

pub mod config;
pub mod emit;

//! Scenario parsing, command dispatch and output writing for the `edq` binary.

pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;

//! Command line harness for the nnv verifiers: problem files, the solver
//! registry, a region-enumeration oracle and a seeded benchmark runner.

pub mod bench;
pub mod cli;
pub mod error;
pub mod generate;
pub mod oracle;
pub mod problem;
pub mod registry;
pub mod report;

pub use error::CliError;
pub use oracle::{exact_range, oracle_verify, OracleResult};

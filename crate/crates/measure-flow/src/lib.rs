//! Scenario-driven front end for `measure-flow-core`: configuration files,
//! experiment drivers and CSV/JSON output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod io;

pub use config::Scenario;
pub use experiments::{run, Outcome};

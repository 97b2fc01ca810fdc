//! Command-line front end: batch commands over dataset, label, and rule
//! files, plus a scripted-oracle session simulator.

pub mod commands;
pub mod simulate;

pub use commands::{CliError, LabelEntry};
pub use simulate::{simulate, IterationRow, SimulationPolicy, SimulationReport, StoppingReason};

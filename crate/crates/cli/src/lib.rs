//! Scenario files, result formats and subcommands of the `slotlab` binary.

pub mod commands;
pub mod output;
pub mod presets;
pub mod scenario;

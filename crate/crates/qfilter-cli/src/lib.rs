//! Simulation harness around the `qfilter` core: JSON configuration,
//! deterministic trajectory/ensemble execution, statistics, and file output.
//! The `qfilter-cli` binary is a thin command dispatcher over this library.

pub mod config;
pub mod harness;
pub mod io;

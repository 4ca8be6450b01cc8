//! IO, configuration, parallel drivers, and the reproduction suite for the
//! case-crossover toolkit. The algorithms live in `casecross-core`; this
//! crate only adds file formats and orchestration.

pub mod commands;
pub mod config;
pub mod formats;
pub mod reproduce;
pub mod runner;

/// Tool version stamped into output preambles.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

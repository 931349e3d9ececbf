//! Scenario runner for the `ckdv-core` solver: TOML configs, named
//! scenarios, snapshot and diagnostic files, SVG plots.

// `!(x > 0.0)` deliberately rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
mod error;
pub mod output;
pub mod plot;
pub mod presets;
pub mod runner;

pub use config::RunConfig;
pub use error::{CliError, Result};

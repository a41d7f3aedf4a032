//! Configuration parsing, experiment execution and result files for the
//! `minimax-gn` binary.

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod sweep;

pub use commands::{cmd_analyze, cmd_gan, cmd_run, cmd_sweep, Overrides};
pub use config::{load_config, parse_config, ExperimentConfig, GameRunConfig};
pub use sweep::SweepSpec;

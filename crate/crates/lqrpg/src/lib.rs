//! Experiments, file formats and the command line around `lqrpg-core`.

pub mod benchmarks;
pub mod config;
pub mod export;
pub mod plot;
pub mod experiments;
pub mod validate;
pub mod cli;

//! The `nilcorr` command line: configuration schema and experiment runners.

pub mod config;
pub mod experiment;

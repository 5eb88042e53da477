//! Monte Carlo harness for the saturation-based quasi-ML LDPC decoder:
//! sweep engine, statistics, CSV emission, and the `eqml` CLI.

pub mod cli;
pub mod config;
pub mod csv_out;
pub mod flips;
pub mod oracle_compare;
pub mod sweep;

//! Experiment orchestration: configuration, Monte Carlo runs, reports and
//! the command line front end.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod output;
pub mod stats;

pub use config::{ExperimentConfig, Mode};
pub use experiments::{
    run_halting, run_predict, run_simulate, run_two_init, run_verify, ConvergenceReport,
    HaltingReport, TwoInitReport, VerifyOutcome, VerifySample,
};

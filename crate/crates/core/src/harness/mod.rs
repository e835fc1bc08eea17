//! Experiment driver: configuration, Monte Carlo sweeps and reports.

pub mod config;
pub mod report;
pub mod sweep;
pub mod validate;

pub use config::{load_config, parse_config, save_config, ConfigFile, SimConfig};
pub use report::{read_report, write_report, ReportRow, RmseReport};
pub use sweep::{mix_seed, run_cells, run_sweep, run_trial, simulate_frame, summarize, SimulatedFrame, TrialFailure, TrialOutcome};

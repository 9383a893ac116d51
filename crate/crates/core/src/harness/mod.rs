//! Experiment orchestration: configuration, Monte Carlo sweeps, result
//! files and the self-validation suite.

mod config;
mod output;
pub mod quadrature;
mod stats;
mod sweep;
pub mod validate;

pub use config::{parse_snr_range, ConfigOverrides, Scheme, SimConfig};
pub use output::{format_sig9, read_csv, read_json, write_csv, write_csv_to, write_json, BerRecord, CSV_HEADER};
pub use stats::{estimate_diversity_slope, wilson_interval, Role};
pub use sweep::run_ber_sweep;
pub use validate::{validate_suite, CheckResult, ValidationLevel, ValidationReport};

//! Experiment harness: configuration, seeding, metrics files, smoothing,
//! multi-seed aggregation, sweeps and plots.

pub mod config;
pub mod metrics;
pub mod plot;
pub mod rng;
pub mod run;
pub mod stats;
pub mod sweep;

pub use config::{default_message_length, ConfigError, ExperimentConfig};
pub use metrics::{read_metrics, write_metrics, MetricsError, MetricsRow, METRICS_HEADER};
pub use plot::svg_line_chart;
pub use run::{output_root, run_experiment, run_experiment_in, run_experiment_observed, RunError, RunOutcome, FINAL_WINDOW, OUTPUT_ROOT_ENV};
pub use stats::{aggregate, final_score, initial_score, rolling_mean, AggregateResult};
pub use sweep::{run_sweep, SweepAxis, SweepPoint, SweepResult};

//! Experiment plumbing: configuration, evaluation runs, metrics, CSV output
//! and the command-line front end.

pub mod cli;
pub mod config;
pub mod evaluate;
pub mod metrics;
pub mod policy;

pub use config::Settings;
pub use evaluate::{compare, run_days, run_episode, write_comparison, DayStreams, EpisodeResult, PolicyRun};
pub use metrics::{daily_metrics, DailyMetrics, MetricContext, Summary};
pub use policy::Policy;

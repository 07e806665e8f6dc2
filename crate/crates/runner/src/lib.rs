//! Experiment configuration, seeded multi-repetition execution, record
//! persistence, aggregation and plot tables, plus the `llmab` command line.

pub mod aggregate;
pub mod cli;
pub mod config;
pub mod experiment;
pub mod plot;
pub mod record;
pub mod sweep;

pub use aggregate::{collect_records, mean_stderr, summarize, MethodSummary, SummaryRow};
pub use config::{AgentConfig, ExperimentConfig, Task};
pub use experiment::{run_experiment, simulate_repetition, Backend, ExperimentOutcome};
pub use plot::emit_plot_data;
pub use record::{IterationRecord, RunRecord};

//! Repeated end-to-end experiments and timing sweeps.

mod bench;
mod config;
mod experiment;

pub use bench::{bench_similarity, loglog_slope, random_share_matrix, write_timings, TimingRow};
pub use config::{ExperimentConfig, Source};
pub use experiment::{
    run_experiment, ClusteringRecord, ClusteringSummary, ExperimentOutput, MetricRow, ResultTable,
    RunRecord, TableRow, METRIC_NAMES,
};

//! Configured experiments: dataset, split, model grid, metrics and reports.

mod config;
mod report;
mod run;

pub use config::{load_config, parse_config, DatasetSpec, EnsembleSpec, EvalMode, ExperimentConfig};
pub use report::{median, Aggregate, MetricsReport, ReductionSummary, ReportRow};
pub use run::{
    cmd_predict, cmd_report_merge, cmd_run, cmd_train, guided_inputs, prepare_data, run_experiment, summary,
    CvRow, PreparedData, Predictor, RunOutput, Track, Trained,
};

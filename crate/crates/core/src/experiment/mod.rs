//! Configuration, run directories and the end-to-end recipes.
//!
//! Each recipe runs in two halves. The first trains models and reduces them
//! to traces (`traces.json`); the second turns traces into a report and
//! never touches a model, so `report` can rebuild the report byte for byte
//! from a run directory.

mod config;
mod output;
mod recipes;
mod report;

use thiserror::Error;

pub use config::{
    AnalysisSection, BoostSection, DataSection, DataSource, ExperimentConfig, MlpSection,
    ScheduleMode,
};
pub use output::{format_cell, matrix_csv, sha256_hex, Manifest, RunDir, MANIFEST_FILE};
pub use recipes::{
    boost_summary, experiment1_traces, experiment2_traces, load_data, run_boost, run_experiment1,
    run_experiment2, run_gen, run_train, sgd_settings, BoostSummary, Seeds,
};
pub use report::{
    experiment1_report, experiment2_report, read_traces, regenerate_report, write_report,
    Experiment1Report, Experiment1Traces, Experiment2Report, Experiment2Traces, Report, Traces,
    REPORT_FILE, TRACES_FILE,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("stage {stage} failed: {message}")]
    Stage { stage: String, message: String },
    #[error("report failed validation: {0}")]
    Schema(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Tags any error with the pipeline stage it came from.
pub(crate) trait StageExt<T> {
    fn stage(self, stage: &str) -> Result<T, ExperimentError>;
}

impl<T, E: std::fmt::Display> StageExt<T> for Result<T, E> {
    fn stage(self, stage: &str) -> Result<T, ExperimentError> {
        self.map_err(|e| ExperimentError::Stage {
            stage: stage.to_string(),
            message: e.to_string(),
        })
    }
}

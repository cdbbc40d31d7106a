//! Experiment analyses built on persisted traces: CMI phase matrices and
//! checkpoint selection, sub-classifier matching and trajectories,
//! difficulty bins and learning order, final error comparison.

mod matching;
mod order;
mod phase;
mod trajectory;

use thiserror::Error;

use crate::boost::BoostError;
use crate::info::InfoError;
use crate::mlp::MlpError;

pub use matching::{correlation_matrix, match_subclassifiers, pearson, MatchResult};
pub use order::{
    class_ranks_from_errors, difficulty_scores, final_error_comparison, learning_order_curves,
    spearman, BinCurves, DifficultyScore, FinalErrorComparison, LearningOrder, DEFAULT_BINS,
    MASTERY_ACCURACY,
};
pub use phase::{
    phase_report, phase_traces, select_phase_checkpoints, CheckpointTrace, PhaseDirection,
    PhaseReport, PhaseSelection, PhaseSettings, PhaseSignificance, PhaseTraces, SelectedCheckpoint,
};
pub use trajectory::{
    correlation_trajectories, error_kl_trajectories, kendall_tau_b, squash_scores,
    subclassifier_outputs, subclassifier_traces, ChangePoint, CorrelationTrajectory, KlTrajectory,
    SubclassifierMode, SubclassifierSnapshot, SubclassifierTraces,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("empty input: {0}")]
    Empty(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Info(#[from] InfoError),
    #[error(transparent)]
    Mlp(#[from] MlpError),
    #[error(transparent)]
    Boost(#[from] BoostError),
}

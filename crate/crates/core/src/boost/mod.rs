//! Adaboost over axis-aligned decision stumps, plus VC-dimension bound
//! calculators used to size an ensemble against a network.

mod adaboost;
mod io;
mod stump;
mod vc;

use thiserror::Error;

pub use adaboost::{run_adaboost, BoostEnsemble, StopReason};
pub use io::{read_ensemble, write_ensemble};
pub use stump::{candidate_thresholds, fit_stump, Stump, TIE_TOLERANCE};
pub use vc::{conjecture_map, vc_bound_boost, vc_bound_mlp, MlpVcOrders};

#[derive(Debug, Error)]
pub enum BoostError {
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("rounds must be >= 1")]
    NoRounds,
    #[error("stage {stage} out of range 1..={rounds}")]
    StageOutOfRange { stage: usize, rounds: usize },
    #[error("feature vector has dimension {got}, ensemble expects at least {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

//! One-hidden-layer ReLU network, SGD under phase schedules, masked
//! sub-network training and checkpoints.

mod io;
mod model;
mod schedule;
mod subnet;
mod train;

use thiserror::Error;

pub use io::{
    checkpoint_from_bytes, checkpoint_to_bytes, loss_curve_csv, read_checkpoint, write_checkpoint,
    write_loss_curve,
};
pub use model::{loss_and_grad, Gradients, Loss, MlpModel};
pub use schedule::{PhaseSchedule, Sampling, SgdSettings};
pub use subnet::{subnetwork_predict, validate_specs, SubnetObjective, SubnetworkSpec};
pub use train::{train, train_subnetworks, Checkpoint, CheckpointSeries, CurvePoint, Trainer};

#[derive(Debug, Error)]
pub enum MlpError {
    #[error("input has dimension {got}, model expects {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("bad shape: {0}")]
    Shape(String),
    #[error("unknown loss {0:?} (expected \"hinge\" or \"logistic\")")]
    UnknownLoss(String),
    #[error("empty minibatch")]
    EmptyBatch,
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("invalid sub-network: {0}")]
    Subnetwork(String),
    #[error("training diverged at step {step}; {} checkpoints kept", partial.checkpoints.len())]
    Diverged {
        step: usize,
        partial: Box<CheckpointSeries>,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint format: {0}")]
    Format(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

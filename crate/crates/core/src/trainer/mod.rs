//! Chaotic backpropagation training.

mod chaotic;
mod optimizer;
mod train;

pub use chaotic::{
    anneal, chaotic_increment, chaotic_loss_clamped, chaotic_loss_value, intermediate_outputs,
    select_node, ChaoticConfig, ChaoticDeltas, LayerStrengths, NodeMode, DEFAULT_BETA, DEFAULT_I0,
    DEFAULT_Z0, LOG_CLAMP,
};
pub use optimizer::{OptimizerConfig, OptimizerKind, OptimizerState};
pub use train::{
    save_trajectory_csv, train, train_observed, write_trajectory_csv, EpochRecord, StopReason,
    TrainConfig, TrainResult, DEFAULT_MIN_DELTA, DEFAULT_PATIENCE, TRAJECTORY_HEADER,
};

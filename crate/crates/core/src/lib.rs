//! Combinatorial optimization with graph neural networks trained by
//! chaotic backpropagation.
//!
//! A small two-layer GNN (GCN or GraphSAGE) produces per-node probabilities
//! that are scored by a relaxed Ising/Potts Hamiltonian. Training adds a
//! chaotic feedback term to every weight update and anneals it away, so
//! the parameter orbit explores before settling into gradient descent.

pub mod bench;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod hamiltonian;
pub mod matrix;
pub mod nn;
pub mod projection;
pub mod scalar;
pub mod trainer;

pub use error::{Error, Result};
pub use graph::{degree_norm, generate_regular, Graph, NormTable};
pub use hamiltonian::{
    brute_force, discrete_objective, loss_and_grad, ObjectiveReport, ProblemEncoding, ProblemKind,
};
pub use matrix::Matrix;
pub use nn::{init_model, Arch, Dims, ForwardCache, Gradients, Mode, Model, Params};
pub use projection::{project, Assignment};
pub use scalar::Scalar;
pub use trainer::{
    train, ChaoticConfig, LayerStrengths, NodeMode, OptimizerKind, StopReason, TrainConfig,
    TrainResult,
};

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type Model64 = Model<f64>;
pub type Model32 = Model<f32>;
pub type Encoding64 = ProblemEncoding<f64>;
pub type Encoding32 = ProblemEncoding<f32>;
pub type TrainConfig64 = TrainConfig<f64>;
pub type TrainResult64 = TrainResult<f64>;
pub type TrainResult32 = TrainResult<f32>;

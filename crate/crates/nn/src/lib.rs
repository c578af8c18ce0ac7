//! Hand-differentiated neural network for face-adjacency graphs: grid
//! encoders, a fusion MLP, graph attention, task heads, cross-entropy and Adam.

pub mod adam;
pub mod encoder;
pub mod gat;
pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod model;
mod real;
pub mod tensor;
pub mod train;

pub use adam::AdamState;
pub use gat::{Adjacency, GatLayer};
pub use layers::{Module, PadMode, Param};
pub use model::{Batch, FeatureConfig, FovNetModel, GraphInput, ModelConfig, Task};
pub use real::{gemm, Op, Real};
pub use tensor::Tensor;
pub use train::{evaluate, predict, train, History, Metrics, TrainConfig};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NnError {
    #[error("ShapeMismatch: {0}")]
    ShapeMismatch(String),
    #[error("NonFiniteLogit: {0}")]
    NonFiniteLogit(String),
    #[error("NonFiniteGradient: {0}")]
    NonFiniteGradient(String),
    #[error("EmptySplit: {0}")]
    EmptySplit(String),
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
}

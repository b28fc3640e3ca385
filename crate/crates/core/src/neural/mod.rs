//! Reverse-mode differentiation, the three relighting networks and their
//! two-stage training.

pub mod checkpoint;
pub mod conv;
mod gradcheck;
mod graph;
pub mod network;
mod optim;
mod tensor;
mod train;

pub use checkpoint::{load_models, save_models};
pub use gradcheck::{grad_check, GradCheckReport, GRAD_CHECK_FLOOR};
pub use graph::{sigmoid, Graph, RenderGeometry, Var, BCE_EPS};
pub use network::{Activation, LayerSpec, Network, NetworkKind, NetworkSpec};
pub use optim::{learning_rate, Adam};
pub use tensor::Tensor;
pub use train::{
    synthesis_input, train_pipeline, EpochSummary, SynthesisFeatures, TrainConfig, TrainReport,
    TrainedModels,
};

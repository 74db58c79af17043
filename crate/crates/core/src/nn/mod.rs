//! Dense 2D tensors, a reverse-mode tape, layers, losses and Adam.

mod adam;
mod gradcheck;
mod graph;
mod layers;
mod params;

pub use adam::{Adam, AdamConfig};
pub use gradcheck::{grad_check, numeric_gradient};
pub use graph::{Graph, Var};
pub use layers::{AttentionBlock, AttentionConfig, Dropout, LayerNorm, Linear, Mlp, MultiHeadAttention};
pub use params::{Grads, Init, ParamId, ParamStore, Tensor};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(&'static str),
    #[error("class index {index} out of range for {classes} classes")]
    ClassOutOfRange { index: usize, classes: usize },
    #[error("unknown parameter `{0}`")]
    UnknownParam(alloc::string::String),
}

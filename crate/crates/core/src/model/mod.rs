//! Hierarchical point-cloud to CAD-sequence network: set-abstraction encoder,
//! loop-extrusion decoder with a type head, routed loop and extrusion
//! decoders and a loop refiner.

mod config;
mod encoder;
mod infer;
mod net;
mod targets;
mod train;

pub use config::{EncoderLevel, ModelConfig, Preset};
pub use encoder::{EncoderPlan, LevelPlan, PointEncoder};
pub use infer::{coordinate_error, decode_sequence, route, Decoded};
pub use net::{Forward, LossParts, Model, Trunk, Variant};
pub use targets::{token_types, Targets};
pub use train::{train, LossRecord, Sample, TrainOptions};

use thiserror::Error;

use crate::cad::CadError;
use crate::geometry::GeometryError;
use crate::nn::NnError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(&'static str),
    #[error("cloud has {have} points, encoder needs {need}")]
    InsufficientPoints { have: usize, need: usize },
    #[error("loop with {0} primitives exceeds the slot limit")]
    TooManyPrimitives(usize),
    #[error("sequence expands to {have} tokens, model holds {max}")]
    TokenOverflow { have: usize, max: usize },
    #[error("loss is not finite at step {0}")]
    Divergence(u64),
    #[error("empty training set")]
    EmptyDataset,
    #[error(transparent)]
    Cad(#[from] CadError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

//! File formats, dataset tooling and command implementations on top of
//! `cadrev-core`.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod deepcad;
pub mod error;
pub mod ply;
pub mod report;
pub mod seqjson;

pub use error::{Error, Result};

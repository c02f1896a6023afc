//! Relation text encoder: tokens → `[m, d]` word-vector matrix → CNN → `k`-vector.

mod config;
mod network;
mod words;

use thiserror::Error;

use crate::numerics::NumericsError;

pub use config::{ConvLayer, EncoderConfig, PoolLayer, ShapeTrace};
pub use network::{parameter_shapes, Activations, RelationEncoder};
pub use words::WordEmbeddingTable;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("encoder configuration: {0}")]
    Config(String),
    #[error("relation text is empty")]
    EmptyRelation,
    #[error("relation has {len} tokens but the encoder accepts at most m = {m}")]
    RelationTooLong { len: usize, m: usize },
    #[error("word vector for `{token}` has dimension {found}, expected {expected}")]
    WordDimension {
        token: String,
        expected: usize,
        found: usize,
    },
    #[error("word vector file line {line}: dimension {found}, expected d = {expected}")]
    WordFileDimension { line: usize, expected: usize, found: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("encoder checkpoint: {0}")]
    Checkpoint(String),
    #[error("encoder backward: {0}")]
    Activations(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

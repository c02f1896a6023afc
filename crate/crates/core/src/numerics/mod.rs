//! Dense `f64` tensors, the handful of layers the relation encoder needs,
//! and a named parameter store with plain SGD.

mod ops;
mod params;
mod tensor;

use thiserror::Error;

pub use ops::{
    concat_channels, conv1d, conv1d_backward, l2_normalize, l2_normalize_backward, linear, linear_backward,
    maxpool1d, maxpool1d_backward, out_len, relu, relu_backward, split_channels, Conv1dGrads, LinearGrads, Pooled,
    NORM_EPSILON,
};
pub use params::{GradBuffer, Param, ParamId, ParameterStore};
pub use tensor::Tensor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("invalid shape {shape:?}: every dimension must be positive")]
    InvalidShape { shape: Vec<usize> },
    #[error("shape {shape:?} needs {expected} values, got {found}")]
    LengthMismatch {
        shape: Vec<usize>,
        expected: usize,
        found: usize,
    },
    #[error("{op}: expected shape {expected:?}, found {found:?}")]
    ShapeMismatch {
        op: &'static str,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("{op}: {what} must have rank {expected}, found shape {found:?}")]
    RankMismatch {
        op: &'static str,
        what: &'static str,
        expected: usize,
        found: Vec<usize>,
    },
    #[error("{op}: dimension `{dimension}` mismatch: expected {expected}, found {found}")]
    DimensionMismatch {
        op: &'static str,
        dimension: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{op}: window {window} exceeds input length {len}")]
    WindowTooLarge { op: &'static str, len: usize, window: usize },
    #[error("{op}: {message}")]
    InvalidArgument { op: &'static str, message: String },
    #[error("cannot normalize degenerate vector (norm {norm:e})")]
    DegenerateVector { norm: f64 },
    #[error("duplicate parameter name `{0}`")]
    DuplicateParameter(String),
}

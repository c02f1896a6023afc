//! Link prediction, cross-validated entity classification and cosine
//! neighbour queries over learned embeddings.

mod classify;
mod nearest;
mod ranking;

use thiserror::Error;

use crate::encoder::EncoderError;
use crate::trainer::TrainError;

pub use classify::{classify_cv, cross_validate, stratified_folds, Classifier, CvReport, LabeledEntitySet};
pub use nearest::{cosine_nearest, cosine_similarity};
pub use ranking::{
    link_prediction, rank_entity, LabelScorer, Ranker, RankingReport, RelationScorer, Setting, SideReport, TextScorer,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("entity `{0}` is not in the embedding table")]
    UnknownEntity(String),
    #[error("relation `{0}` cannot be scored by this model")]
    UnknownRelation(String),
    #[error("the test set is empty")]
    EmptyTestSet,
    #[error("{0}")]
    Config(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

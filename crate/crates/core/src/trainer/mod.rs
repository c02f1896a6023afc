//! Translational training of entity embeddings from context triples, from
//! labelled KG triples, or from both sharing one entity table.

mod corrupt;
mod fit;
mod loss;
mod networks;
mod tables;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::EncoderError;
use crate::numerics::NumericsError;

pub use corrupt::{corrupt, corrupt_filtered, Corruption, Side};
pub use fit::{train_ecg, train_joint, train_kg, EmbeddingModel, TrainingRun, Trainer};
pub use loss::{triple_distance, triple_margin_loss, Dissimilarity, MarginLoss};
pub use networks::{EcgNetwork, KgNetwork};
pub use tables::{init_entities, EmbeddingTable, EntityEmbeddingTable, KgRelationTable};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training configuration: {0}")]
    Config(String),
    #[error("nothing to train on: {0}")]
    EmptyInput(String),
    #[error("vector for `{0}` has (near-)zero norm")]
    Degenerate(String),
    #[error("entity `{0}` has no row in the embedding table")]
    UnknownEntity(String),
    #[error("relation label `{0}` has no row in the relation table")]
    UnknownRelation(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    /// Embedding dimension.
    pub k: usize,
    pub gamma: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub dissimilarity: Dissimilarity,
    /// Coefficient of the squared-weight penalty on the relation encoder.
    pub mu_lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Redraw corruptions that coincide with a known training triple.
    pub filter_negatives: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            k: 200,
            gamma: 5.0,
            learning_rate: 0.01,
            batch_size: 100,
            dissimilarity: Dissimilarity::L1,
            mu_lambda: 1e-4,
            epochs: 1000,
            seed: 0,
            filter_negatives: false,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |m: &str| Err(TrainError::Config(m.to_string()));
        if self.k == 0 {
            return fail("k must be at least 1");
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return fail("gamma must be a positive number");
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return fail("learning_rate must be a positive number");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1");
        }
        if !(self.mu_lambda >= 0.0) || !self.mu_lambda.is_finite() {
            return fail("mu_lambda must be a non-negative number");
        }
        Ok(())
    }
}

/// Mean batch loss and mean batch hinge over one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub loss: f64,
    pub hinge: f64,
}

/// One optimizer step's objective: `hinge` is the batch-mean hinge, `loss`
/// adds the regularizer.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BatchLoss {
    pub loss: f64,
    pub hinge: f64,
}

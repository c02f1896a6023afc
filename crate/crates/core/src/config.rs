//! Flat `key = value` run configuration covering training and encoder
//! hyperparameters.
//!
//! ```text
//! # comment
//! k = 200
//! gamma = 5
//! window_a = 3
//! ```

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::encoder::EncoderConfig;
use crate::trainer::{Dissimilarity, TrainingConfig};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {message}")]
    InvalidValue { key: String, value: String, message: String },
}

/// Training and encoder settings of one run. The encoder output size is
/// always the embedding dimension `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub training: TrainingConfig,
    pub encoder: EncoderConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let training = TrainingConfig::default();
        let encoder = EncoderConfig::wikipedia(training.k);
        Self { training, encoder }
    }
}

pub const KEYS: &[&str] = &[
    "k",
    "gamma",
    "learning_rate",
    "batch_size",
    "dissimilarity",
    "mu_lambda",
    "epochs",
    "seed",
    "filter_negatives",
    "m",
    "d",
    "window_a",
    "window_b",
    "window_c",
    "filters_a",
    "filters_b",
    "filters_c",
    "beta",
    "layer2_window",
    "layer2_stride",
    "layer2_filters",
    "layer3_window",
    "layer3_stride",
    "layer3_filters",
    "pool_window",
    "pool_stride",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        message: e.to_string(),
    })
}

impl RunConfig {
    /// Sets one key. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let t = &mut self.training;
        let e = &mut self.encoder;
        let v = value.trim();
        match key {
            "k" => {
                t.k = parse_value(key, v)?;
                e.k = t.k;
            }
            "gamma" => t.gamma = parse_value(key, v)?,
            "learning_rate" => t.learning_rate = parse_value(key, v)?,
            "batch_size" => t.batch_size = parse_value(key, v)?,
            "dissimilarity" => t.dissimilarity = parse_value::<Dissimilarity>(key, v)?,
            "mu_lambda" => t.mu_lambda = parse_value(key, v)?,
            "epochs" => t.epochs = parse_value(key, v)?,
            "seed" => t.seed = parse_value(key, v)?,
            "filter_negatives" => t.filter_negatives = parse_value(key, v)?,
            "m" => e.m = parse_value(key, v)?,
            "d" => e.d = parse_value(key, v)?,
            "window_a" => e.windows[0] = parse_value(key, v)?,
            "window_b" => e.windows[1] = parse_value(key, v)?,
            "window_c" => e.windows[2] = parse_value(key, v)?,
            "filters_a" => e.branch_filters[0] = parse_value(key, v)?,
            "filters_b" => e.branch_filters[1] = parse_value(key, v)?,
            "filters_c" => e.branch_filters[2] = parse_value(key, v)?,
            "beta" => e.beta = parse_value(key, v)?,
            "layer2_window" => e.layer2.window = parse_value(key, v)?,
            "layer2_stride" => e.layer2.stride = parse_value(key, v)?,
            "layer2_filters" => e.layer2.filters = parse_value(key, v)?,
            "layer3_window" => e.layer3.window = parse_value(key, v)?,
            "layer3_stride" => e.layer3.stride = parse_value(key, v)?,
            "layer3_filters" => e.layer3.filters = parse_value(key, v)?,
            "pool_window" => e.pool.window = parse_value(key, v)?,
            "pool_stride" => e.pool.stride = parse_value(key, v)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                message: "expected `key = value`".into(),
            })?;
            self.set(key.trim(), value).map_err(|e| match e {
                ConfigError::InvalidValue { .. } | ConfigError::UnknownKey(_) => ConfigError::Syntax {
                    line: i + 1,
                    message: e.to_string(),
                },
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let t = &self.training;
        let e = &self.encoder;
        Some(match key {
            "k" => t.k.to_string(),
            "gamma" => t.gamma.to_string(),
            "learning_rate" => t.learning_rate.to_string(),
            "batch_size" => t.batch_size.to_string(),
            "dissimilarity" => t.dissimilarity.to_string(),
            "mu_lambda" => t.mu_lambda.to_string(),
            "epochs" => t.epochs.to_string(),
            "seed" => t.seed.to_string(),
            "filter_negatives" => t.filter_negatives.to_string(),
            "m" => e.m.to_string(),
            "d" => e.d.to_string(),
            "window_a" => e.windows[0].to_string(),
            "window_b" => e.windows[1].to_string(),
            "window_c" => e.windows[2].to_string(),
            "filters_a" => e.branch_filters[0].to_string(),
            "filters_b" => e.branch_filters[1].to_string(),
            "filters_c" => e.branch_filters[2].to_string(),
            "beta" => e.beta.to_string(),
            "layer2_window" => e.layer2.window.to_string(),
            "layer2_stride" => e.layer2.stride.to_string(),
            "layer2_filters" => e.layer2.filters.to_string(),
            "layer3_window" => e.layer3.window.to_string(),
            "layer3_stride" => e.layer3.stride.to_string(),
            "layer3_filters" => e.layer3.filters.to_string(),
            "pool_window" => e.pool.window.to_string(),
            "pool_stride" => e.pool.stride.to_string(),
            _ => return None,
        })
    }

    /// Every key with its effective value, one per line in [`KEYS`] order.
    /// Parsing the result reproduces `self` exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let value = self.get(key).expect("every listed key has a value");
            writeln!(out, "{key} = {value}").expect("writing to a String");
        }
        out
    }
}

//! Saving and restoring trained models.
//!
//! A checkpoint is a directory:
//!
//! | file             | content                                            |
//! |------------------|----------------------------------------------------|
//! | `config.txt`     | effective run configuration (`key = value`)        |
//! | `state.txt`      | epochs completed and generator position            |
//! | `entities.tsv`   | `entity<TAB>v1<TAB>…<TAB>vk`                       |
//! | `relations.tsv`  | same layout, KG relation labels (if trained)       |
//! | `encoder.txt`    | encoder tensors (if trained)                       |
//!
//! Floats are written in shortest round-trip form, so a save/load cycle is
//! exact.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::encoder::{EncoderError, RelationEncoder};
use crate::numerics::{NumericsError, ParameterStore, Tensor};
use crate::trainer::{EmbeddingModel, EmbeddingTable, TrainError};

pub const CONFIG_FILE: &str = "config.txt";
pub const STATE_FILE: &str = "state.txt";
pub const ENTITIES_FILE: &str = "entities.tsv";
pub const RELATIONS_FILE: &str = "relations.tsv";
pub const ENCODER_FILE: &str = "encoder.txt";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{file} line {line}: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{CONFIG_FILE}: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_err(file: &str, line: usize, message: impl Into<String>) -> CheckpointError {
    CheckpointError::Parse {
        file: file.to_string(),
        line,
        message: message.into(),
    }
}

/// Writes `entity<TAB>v1<TAB>…<TAB>vk` lines in table order.
pub fn write_embeddings<W: Write>(table: &EmbeddingTable, mut out: W) -> std::io::Result<()> {
    for i in 0..table.len() {
        write!(out, "{}", table.name(i))?;
        for v in table.row(i) {
            write!(out, "\t{v}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}

pub fn read_embeddings<R: BufRead>(input: R, file: &str) -> Result<EmbeddingTable, CheckpointError> {
    let mut names = Vec::new();
    let mut data = Vec::new();
    let mut k = None;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let name = fields.next().unwrap_or_default();
        if name.is_empty() {
            return Err(parse_err(file, i + 1, "empty identifier"));
        }
        let start = data.len();
        for f in fields {
            data.push(f.parse::<f64>().map_err(|e| parse_err(file, i + 1, format!("`{f}`: {e}")))?);
        }
        let width = data.len() - start;
        match k {
            None if width == 0 => return Err(parse_err(file, i + 1, "row has no values")),
            None => k = Some(width),
            Some(k) if k != width => {
                return Err(parse_err(file, i + 1, format!("row has {width} values, expected {k}")));
            }
            _ => {}
        }
        names.push(name.to_string());
    }
    let Some(k) = k else {
        return Err(CheckpointError::Invalid(format!("{file} is empty")));
    };
    let n = names.len();
    let table = EmbeddingTable::from_rows(names, k, data)?;
    if table.len() != n {
        return Err(CheckpointError::Invalid(format!("{file} repeats an identifier")));
    }
    Ok(table)
}

/// `tensor <name> <dim>…` followed by one line of values, per tensor.
pub fn write_parameters<W: Write>(store: &ParameterStore, mut out: W) -> std::io::Result<()> {
    for (_, p) in store.iter() {
        write!(out, "tensor {}", p.name())?;
        for d in p.value().shape() {
            write!(out, " {d}")?;
        }
        writeln!(out)?;
        let values: Vec<String> = p.value().data().iter().map(f64::to_string).collect();
        writeln!(out, "{}", values.join(" "))?;
    }
    out.flush()
}

pub fn read_parameters<R: BufRead>(input: R, file: &str) -> Result<ParameterStore, CheckpointError> {
    let mut store = ParameterStore::new();
    let mut lines = input.lines().enumerate();
    while let Some((i, header)) = lines.next() {
        let header = header?;
        if header.is_empty() {
            continue;
        }
        let mut parts = header.split(' ');
        if parts.next() != Some("tensor") {
            return Err(parse_err(file, i + 1, "expected `tensor <name> <dims>`"));
        }
        let name = parts
            .next()
            .ok_or_else(|| parse_err(file, i + 1, "missing tensor name"))?
            .to_string();
        let shape = parts
            .map(|d| d.parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| parse_err(file, i + 1, e.to_string()))?;
        let (j, values) = lines
            .next()
            .ok_or_else(|| parse_err(file, i + 2, format!("missing values for `{name}`")))?;
        let values = values?
            .split(' ')
            .filter(|s| !s.is_empty())
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| parse_err(file, j + 1, e.to_string()))?;
        let tensor = Tensor::new(shape, values).map_err(|e| parse_err(file, j + 1, e.to_string()))?;
        store.insert(name, tensor, false)?;
    }
    Ok(store)
}

/// Training progress recorded alongside the parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrainingState {
    pub epochs_done: usize,
    pub rng_word_pos: u128,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub config: RunConfig,
    pub state: TrainingState,
    pub model: EmbeddingModel,
}

impl Checkpoint {
    pub fn save(&self, dir: &Path) -> Result<(), CheckpointError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(CONFIG_FILE), self.config.to_text())?;
        fs::write(
            dir.join(STATE_FILE),
            format!(
                "epochs_done = {}\nrng_word_pos = {}\n",
                self.state.epochs_done, self.state.rng_word_pos
            ),
        )?;
        write_embeddings(&self.model.entities, BufWriter::new(File::create(dir.join(ENTITIES_FILE))?))?;
        for (file, present) in [
            (RELATIONS_FILE, self.model.relations.is_some()),
            (ENCODER_FILE, self.model.encoder.is_some()),
        ] {
            // a stale file from an earlier, different run must not be picked up
            if !present && dir.join(file).exists() {
                fs::remove_file(dir.join(file))?;
            }
        }
        if let Some(rel) = &self.model.relations {
            write_embeddings(rel, BufWriter::new(File::create(dir.join(RELATIONS_FILE))?))?;
        }
        if let Some(enc) = &self.model.encoder {
            write_parameters(enc.store(), BufWriter::new(File::create(dir.join(ENCODER_FILE))?))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, CheckpointError> {
        let config = RunConfig::parse(&fs::read_to_string(dir.join(CONFIG_FILE))?)?;
        let state = read_state(&fs::read_to_string(dir.join(STATE_FILE))?)?;
        let open = |f: &str| -> Result<BufReader<File>, CheckpointError> { Ok(BufReader::new(File::open(dir.join(f))?)) };
        let entities = read_embeddings(open(ENTITIES_FILE)?, ENTITIES_FILE)?;
        let relations = if dir.join(RELATIONS_FILE).exists() {
            Some(read_embeddings(open(RELATIONS_FILE)?, RELATIONS_FILE)?)
        } else {
            None
        };
        let encoder = if dir.join(ENCODER_FILE).exists() {
            let store = read_parameters(open(ENCODER_FILE)?, ENCODER_FILE)?;
            Some(RelationEncoder::from_store(config.encoder.clone(), store)?)
        } else {
            None
        };
        for (what, k) in [
            ("relations", relations.as_ref().map(EmbeddingTable::k)),
            ("encoder", encoder.as_ref().map(|e| e.config().k)),
        ] {
            if let Some(k) = k {
                if k != entities.k() {
                    return Err(CheckpointError::Invalid(format!(
                        "{what} have dimension {k}, entities have {}",
                        entities.k()
                    )));
                }
            }
        }
        Ok(Self {
            config,
            state,
            model: EmbeddingModel {
                entities,
                relations,
                encoder,
            },
        })
    }
}

fn read_state(text: &str) -> Result<TrainingState, CheckpointError> {
    let mut state = TrainingState::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(STATE_FILE, i + 1, "expected `key = value`"))?;
        let bad = |e: std::num::ParseIntError| parse_err(STATE_FILE, i + 1, e.to_string());
        match key.trim() {
            "epochs_done" => state.epochs_done = value.trim().parse().map_err(bad)?,
            "rng_word_pos" => state.rng_word_pos = value.trim().parse().map_err(bad)?,
            other => return Err(parse_err(STATE_FILE, i + 1, format!("unknown key `{other}`"))),
        }
    }
    Ok(state)
}

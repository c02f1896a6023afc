use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use ecg_core::checkpoint::{Checkpoint, TrainingState};
use ecg_core::config::RunConfig;
use ecg_core::corpus::{read_ecg, EntityContextGraph};
use ecg_core::encoder::WordEmbeddingTable;
use ecg_core::trainer::{train_ecg, train_joint, train_kg, EcgNetwork, EpochLoss, KgNetwork, Trainer, TrainingRun};
use ecg_core::triples::{read_kg_file, KgTriple};

use crate::TrainOpts;

pub const LOSS_LOG: &str = "loss.tsv";
const LOSS_HEADER: &str = "epoch\tnetwork\tloss\thinge\n";

fn effective_config(base: RunConfig, opts: &TrainOpts) -> Result<RunConfig> {
    let mut config = base;
    if let Some(path) = &opts.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        config
            .apply_text(&text)
            .with_context(|| format!("in {}", path.display()))?;
    }
    for o in &opts.overrides {
        let (key, value) = o
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got `{o}`"))?;
        config.set(key.trim(), value)?;
    }
    if let Some(seed) = opts.seed {
        config.training.seed = seed;
    }
    config.encoder.k = config.training.k;
    config.training.validate()?;
    Ok(config)
}

fn loss_lines(kg: &[EpochLoss], ecg: &[EpochLoss]) -> String {
    let mut out = String::new();
    let mut rows: Vec<(usize, u8, &EpochLoss)> = kg
        .iter()
        .map(|l| (l.epoch, 0, l))
        .chain(ecg.iter().map(|l| (l.epoch, 1, l)))
        .collect();
    rows.sort_by_key(|&(epoch, net, _)| (epoch, net));
    for (epoch, net, l) in rows {
        let name = if net == 0 { "kg" } else { "ecg" };
        writeln!(out, "{epoch}\t{name}\t{}\t{}", l.loss, l.hinge).expect("writing to a String");
    }
    out
}

fn load_words(path: Option<&Path>, d: usize) -> Result<Option<WordEmbeddingTable>> {
    path.map(|p| {
        let file = File::open(p).with_context(|| format!("opening {}", p.display()))?;
        WordEmbeddingTable::read(BufReader::new(file), Some(d)).with_context(|| format!("reading {}", p.display()))
    })
    .transpose()
}

/// `train`, `train-kg` and `train-joint`: whichever inputs are given are
/// trained together.
pub fn train(ecg: Option<&Path>, kg: Option<&Path>, words: Option<&Path>, opts: &TrainOpts) -> Result<()> {
    let resumed = opts
        .resume
        .as_deref()
        .map(|dir| Checkpoint::load(dir).with_context(|| format!("loading checkpoint {}", dir.display())))
        .transpose()?;
    let base = resumed.as_ref().map(|c| c.config.clone()).unwrap_or_default();
    let config = effective_config(base, opts)?;

    let graph = ecg
        .map(|p| read_ecg(p).with_context(|| format!("reading {}", p.display())))
        .transpose()?;
    let kg_triples = kg
        .map(|p| read_kg_file(p).with_context(|| format!("reading {}", p.display())))
        .transpose()?;
    let words = load_words(words, config.encoder.d)?;

    let (run, previous_log) = match resumed {
        None => (fresh(&config, graph.as_ref(), kg_triples.as_deref(), words.as_ref())?, String::new()),
        Some(cp) => {
            let dir = opts.resume.as_deref().expect("resuming");
            let log = fs::read_to_string(dir.join(LOSS_LOG)).unwrap_or_default();
            let log = log.strip_prefix(LOSS_HEADER).unwrap_or(&log).to_string();
            (
                resume(cp, &config, graph.as_ref(), kg_triples.as_deref(), words.as_ref())?,
                log,
            )
        }
    };

    let checkpoint = Checkpoint {
        config,
        state: TrainingState {
            epochs_done: run.epochs_done,
            rng_word_pos: run.rng_word_pos,
        },
        model: run.model,
    };
    checkpoint
        .save(&opts.out)
        .with_context(|| format!("writing checkpoint {}", opts.out.display()))?;
    let log = format!("{LOSS_HEADER}{previous_log}{}", loss_lines(&run.kg_curve, &run.ecg_curve));
    fs::write(opts.out.join(LOSS_LOG), log)?;
    eprintln!(
        "trained {} epochs; checkpoint written to {}",
        run.epochs_done,
        opts.out.display()
    );
    Ok(())
}

fn fresh(
    config: &RunConfig,
    graph: Option<&EntityContextGraph>,
    kg: Option<&[KgTriple]>,
    words: Option<&WordEmbeddingTable>,
) -> Result<TrainingRun> {
    let need_words = || words.ok_or_else(|| anyhow!("ECG training needs --words"));
    Ok(match (graph, kg) {
        (Some(g), Some(kg)) => train_joint(kg, g, config.encoder.clone(), need_words()?, &config.training)?,
        (Some(g), None) => train_ecg(g, config.encoder.clone(), need_words()?, &config.training)?,
        (None, Some(kg)) => train_kg(kg, &config.training)?,
        (None, None) => bail!("nothing to train on"),
    })
}

fn resume(
    cp: Checkpoint,
    config: &RunConfig,
    graph: Option<&EntityContextGraph>,
    kg: Option<&[KgTriple]>,
    words: Option<&WordEmbeddingTable>,
) -> Result<TrainingRun> {
    if config.encoder != cp.config.encoder || config.training.k != cp.config.training.k {
        bail!("the encoder settings and k of a resumed run must match the checkpoint");
    }
    let mut model = cp.model;
    let kg = kg.filter(|t| !t.is_empty());
    let graph = graph.filter(|g| !g.triples().is_empty());
    let kg_net = kg
        .map(|t| {
            let rel = model
                .relations
                .as_ref()
                .ok_or_else(|| anyhow!("checkpoint has no relation table"))?;
            Ok::<_, anyhow::Error>(KgNetwork::new(t, &model.entities, rel)?)
        })
        .transpose()?;
    let ecg_net = match graph {
        Some(g) => {
            let enc = model
                .encoder
                .as_ref()
                .ok_or_else(|| anyhow!("checkpoint has no relation encoder"))?;
            let words = words.ok_or_else(|| anyhow!("ECG training needs --words"))?;
            Some(EcgNetwork::new(g, &model.entities, words, enc)?)
        }
        None => None,
    };
    if kg_net.is_none() && ecg_net.is_none() {
        bail!("nothing to train on");
    }
    let mut trainer = Trainer::resume(config.training.clone(), cp.state.epochs_done, cp.state.rng_word_pos)?;
    let remaining = config.training.epochs.saturating_sub(cp.state.epochs_done);
    let (kg_curve, ecg_curve) = trainer.fit(&mut model, kg_net.as_ref(), ecg_net.as_ref(), remaining)?;
    Ok(TrainingRun {
        model,
        ecg_curve,
        kg_curve,
        epochs_done: trainer.epochs_done(),
        rng_word_pos: trainer.rng_word_pos(),
    })
}

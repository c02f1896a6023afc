use std::fs::{File, OpenOptions};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use ecg_core::checkpoint::{write_embeddings, Checkpoint};
use ecg_core::corpus::read_ecg;
use ecg_core::encoder::WordEmbeddingTable;
use ecg_core::evaluator::{
    classify_cv, cosine_nearest, link_prediction as rank_all, Classifier, LabelScorer, LabeledEntitySet, Ranker,
    RelationScorer, TextScorer,
};
use ecg_core::triples::{read_kg_file, KnownTriples, LinkTriple, Relation};
use serde::Serialize;

use crate::ClassifierArg;

pub struct LpArgs {
    pub checkpoint: PathBuf,
    pub test_kg: Option<PathBuf>,
    pub test_ecg: Option<PathBuf>,
    pub words: Option<PathBuf>,
    pub known: Vec<PathBuf>,
    pub filtered: bool,
    pub out: Option<PathBuf>,
}

fn load(dir: &Path) -> Result<Checkpoint> {
    Checkpoint::load(dir).with_context(|| format!("loading checkpoint {}", dir.display()))
}

fn append_json<T: Serialize>(path: &Path, record: &T) -> Result<()> {
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    writeln!(f, "{}", serde_json::to_string(record)?)?;
    Ok(())
}

fn read_link_triples(path: &Path, ecg: bool) -> Result<Vec<LinkTriple>> {
    let ctx = || format!("reading {}", path.display());
    Ok(if ecg {
        read_ecg(path).with_context(ctx)?.triples().iter().map(LinkTriple::from).collect()
    } else {
        read_kg_file(path).with_context(ctx)?.iter().map(LinkTriple::from).collect()
    })
}

pub fn link_prediction(args: &LpArgs) -> Result<()> {
    let cp = load(&args.checkpoint)?;
    let model = &cp.model;
    let ecg = args.test_ecg.is_some();
    let test_path = args
        .test_ecg
        .as_deref()
        .or(args.test_kg.as_deref())
        .expect("clap requires one test file");
    let tests = read_link_triples(test_path, ecg)?;

    let words;
    let label_scorer;
    let text_scorer;
    let scorer: &dyn RelationScorer = if ecg {
        let path = args.words.as_deref().ok_or_else(|| anyhow!("--test-ecg needs --words"))?;
        let encoder = model
            .encoder
            .as_ref()
            .ok_or_else(|| anyhow!("checkpoint has no relation encoder"))?;
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        words = WordEmbeddingTable::read(BufReader::new(file), Some(encoder.config().d))
            .with_context(|| format!("reading {}", path.display()))?;
        text_scorer = TextScorer {
            encoder,
            words: &words,
        };
        &text_scorer
    } else {
        let relations = model
            .relations
            .as_ref()
            .ok_or_else(|| anyhow!("checkpoint has no KG relation table"))?;
        label_scorer = LabelScorer(relations);
        &label_scorer
    };

    let covered = |t: &LinkTriple| -> Option<String> {
        for e in [&t.head, &t.tail] {
            if model.entities.index_of(e).is_none() {
                return Some(format!("unknown entity `{e}`"));
            }
        }
        match (&t.relation, &model.relations) {
            (Relation::Label(l), Some(rel)) if rel.index_of(l).is_none() => Some(format!("unknown relation `{l}`")),
            _ => None,
        }
    };
    let mut usable = Vec::with_capacity(tests.len());
    let mut skipped = 0;
    for t in tests {
        match covered(&t) {
            Some(why) => {
                eprintln!("skipping {} / {} : {why}", t.head, t.tail);
                skipped += 1;
            }
            None => usable.push(t),
        }
    }
    if skipped > 0 {
        log::warn!("{skipped} test triples excluded for missing coverage");
    }

    let known = if args.filtered || !args.known.is_empty() {
        let mut known = KnownTriples::new();
        let mut add = |t: &LinkTriple| {
            if let (Some(h), Some(tl)) = (model.entities.index_of(&t.head), model.entities.index_of(&t.tail)) {
                known.insert(h, t.relation.clone(), tl);
            }
        };
        usable.iter().for_each(&mut add);
        for path in &args.known {
            read_link_triples(path, ecg)?.iter().for_each(&mut add);
        }
        Some(known)
    } else {
        None
    };

    let ranker = Ranker::new(&model.entities, cp.config.training.dissimilarity)?;
    let report = rank_all(&usable, &ranker, scorer, known.as_ref())?;
    println!("{report}");
    if let Some(out) = &args.out {
        append_json(out, &report)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ClsRecord {
    classifier: &'static str,
    folds: usize,
    entities: usize,
    accuracy: f64,
    fold_accuracies: Vec<f64>,
}

pub fn classify(
    checkpoint: &Path,
    labels: &Path,
    which: ClassifierArg,
    folds: usize,
    neighbours: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<()> {
    let cp = load(checkpoint)?;
    let file = File::open(labels).with_context(|| format!("opening {}", labels.display()))?;
    let mut set = LabeledEntitySet::read(BufReader::new(file)).with_context(|| format!("reading {}", labels.display()))?;
    let before = set.len();
    set.entries.retain(|(e, _)| {
        let known = cp.model.entities.index_of(e).is_some();
        if !known {
            eprintln!("skipping `{e}`: not in the embedding table");
        }
        known
    });
    if set.len() < before {
        log::warn!("{} labelled entities excluded for missing coverage", before - set.len());
    }
    let classifiers: Vec<(&'static str, Classifier)> = match which {
        ClassifierArg::Nb => vec![("nb", Classifier::NaiveBayes)],
        ClassifierArg::Knn => vec![("knn", Classifier::Knn { k: neighbours })],
        ClassifierArg::Both => vec![
            ("nb", Classifier::NaiveBayes),
            ("knn", Classifier::Knn { k: neighbours }),
        ],
    };
    println!("classifier\tfolds\taccuracy");
    for (name, clf) in classifiers {
        let r = classify_cv(&cp.model.entities, &set, clf, folds, seed)?;
        println!("{name}\t{folds}\t{:.4}", r.accuracy);
        if let Some(out) = out {
            append_json(
                out,
                &ClsRecord {
                    classifier: name,
                    folds,
                    entities: set.len(),
                    accuracy: r.accuracy,
                    fold_accuracies: r.fold_accuracies,
                },
            )?;
        }
    }
    Ok(())
}

fn output(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn nearest(checkpoint: &Path, entity: &str, n: usize, out: Option<&Path>) -> Result<()> {
    let cp = load(checkpoint)?;
    let neighbours = cosine_nearest(entity, n, &cp.model.entities)?;
    let mut w = output(out)?;
    for (e, s) in neighbours {
        writeln!(w, "{e}\t{s}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn export(checkpoint: &Path, out: Option<&Path>) -> Result<()> {
    let cp = load(checkpoint)?;
    write_embeddings(&cp.model.entities, output(out)?)?;
    Ok(())
}

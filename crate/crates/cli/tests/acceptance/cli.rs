use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use ecg_core::config::RunConfig;
use ecg_core::trainer::TrainingConfig;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::learning::small_encoder;
use crate::{check, Verdict};

const BIN: &str = env!("CARGO_BIN_EXE_ecg");

fn write_inputs(dir: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let vocab: Vec<String> = (0..30).map(|i| format!("w{i}")).collect();
    let entities: Vec<String> = (0..16).map(|i| format!("E{i}")).collect();

    let mut corpus = String::new();
    for (i, primary) in entities.iter().enumerate() {
        let paragraphs: Vec<_> = (0..3)
            .map(|_| {
                let mut tokens: Vec<String> = (0..rng.gen_range(6..20))
                    .map(|_| vocab.choose(&mut rng).unwrap().clone())
                    .collect();
                let at = rng.gen_range(0..tokens.len());
                let other = entities.choose(&mut rng).unwrap().clone();
                tokens[at] = other.to_lowercase();
                json!({"tokens": tokens, "mentions": [{"entity": other, "start": at, "end": at + 1}]})
            })
            .collect();
        let doc = json!({"id": format!("doc{i}"), "primary_entity": primary, "paragraphs": paragraphs});
        corpus.push_str(&format!("{doc}\n"));
    }
    fs::write(dir.join("corpus.jsonl"), corpus).unwrap();

    let mut words = String::new();
    for t in vocab.iter().cloned().chain(entities.iter().map(|e| e.to_lowercase())) {
        let v: Vec<String> = (0..8).map(|_| format!("{:.4}", rng.gen_range(-1.0..1.0))).collect();
        words.push_str(&format!("{t} {}\n", v.join(" ")));
    }
    fs::write(dir.join("words.txt"), words).unwrap();

    let mut kg = String::new();
    for h in &entities {
        for r in ["a", "b"] {
            let t = entities.iter().filter(|e| *e != h).collect::<Vec<_>>();
            kg.push_str(&format!("{h}\t{r}\t{}\n", t.choose(&mut rng).unwrap()));
        }
    }
    fs::write(dir.join("kg.tsv"), kg).unwrap();

    let labels: String = entities.iter().enumerate().map(|(i, e)| format!("{e}\tL{}\n", i % 2)).collect();
    fs::write(dir.join("labels.tsv"), labels).unwrap();

    let config = RunConfig {
        training: TrainingConfig {
            k: 8,
            gamma: 2.0,
            learning_rate: 0.05,
            batch_size: 7,
            epochs: 6,
            seed: 42,
            ..TrainingConfig::default()
        },
        encoder: small_encoder(8),
    };
    fs::write(dir.join("config.txt"), config.to_text()).unwrap();
}

/// Runs every subcommand inside `dir`; returns the captured standard output
/// of each step.
fn pipeline(dir: &Path, threads: &str) -> Result<Vec<(String, Vec<u8>)>, String> {
    write_inputs(dir);
    let steps: Vec<Vec<&str>> = vec![
        vec!["build-ecg", "--input", "corpus.jsonl", "--m", "12", "--out", "ecg.txt"],
        vec!["train", "--ecg", "ecg.txt", "--words", "words.txt", "--config", "config.txt", "--out", "ecg_run"],
        vec!["train-kg", "--kg", "kg.tsv", "--config", "config.txt", "--out", "kg_run"],
        vec![
            "train-joint", "--kg", "kg.tsv", "--ecg", "ecg.txt", "--words", "words.txt", "--config", "config.txt",
            "--out", "joint_run",
        ],
        // three epochs, then resume to six
        vec![
            "train-joint", "--kg", "kg.tsv", "--ecg", "ecg.txt", "--words", "words.txt", "--config", "config.txt",
            "--set", "epochs=3", "--out", "half_run",
        ],
        vec![
            "train-joint", "--kg", "kg.tsv", "--ecg", "ecg.txt", "--words", "words.txt", "--set", "epochs=6",
            "--resume", "half_run", "--out", "resumed_run",
        ],
        vec!["eval-lp", "--checkpoint", "kg_run", "--test-kg", "kg.tsv", "--filtered", "--out", "lp.jsonl"],
        vec![
            "eval-lp", "--checkpoint", "joint_run", "--test-ecg", "ecg.txt", "--words", "words.txt", "--out",
            "lp.jsonl",
        ],
        vec!["eval-cls", "--checkpoint", "joint_run", "--labels", "labels.tsv", "--folds", "4", "--out", "cls.jsonl"],
        vec!["nearest", "--checkpoint", "joint_run", "--entity", "E3", "--n", "5", "--out", "nearest.tsv"],
        vec!["nearest", "--checkpoint", "ecg_run", "--entity", "E3", "--n", "0"],
        vec!["export-embeddings", "--checkpoint", "joint_run", "--out", "embeddings.tsv"],
    ];
    let mut outputs = Vec::new();
    for step in steps {
        let out = Command::new(BIN)
            .current_dir(dir)
            .arg("--threads")
            .arg(threads)
            .args(&step)
            .env("RUST_LOG", "warn")
            .output()
            .map_err(|e| e.to_string())?;
        check!(
            out.status.success(),
            "`ecg {}` failed: {}",
            step.join(" "),
            String::from_utf8_lossy(&out.stderr)
        );
        outputs.push((step.join(" "), out.stdout));
    }
    Ok(outputs)
}

fn files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

pub fn determinism() -> Verdict {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let out_a = pipeline(a.path(), "1")?;
    let out_b = pipeline(b.path(), "2")?;
    for ((step, x), (_, y)) in out_a.iter().zip(&out_b) {
        check!(x == y, "standard output of `ecg {step}` differs between runs");
    }
    let (fa, fb) = (files(a.path()), files(b.path()));
    check!(
        fa.keys().eq(fb.keys()),
        "runs produced different file sets: {:?} vs {:?}",
        fa.keys(),
        fb.keys()
    );
    for (name, bytes) in &fa {
        check!(bytes == &fb[name], "{name} differs between runs");
    }
    for file in ["entities.tsv", "relations.tsv", "encoder.txt", "state.txt"] {
        check!(
            fa[&format!("joint_run/{file}")] == fa[&format!("resumed_run/{file}")],
            "resumed run differs from the uninterrupted run in {file}"
        );
    }
    check!(out_a[10].1.is_empty(), "nearest with n=0 printed output");
    Ok(format!(
        "{} commands, {} output files byte-identical across reruns (1 and 2 threads); resume matches an uninterrupted run",
        out_a.len(),
        fa.len()
    ))
}

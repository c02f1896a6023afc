use std::time::Instant;

use ecg_core::corpus::{ContextTriple, EntityContextGraph, Provenance};
use ecg_core::encoder::{ConvLayer, EncoderConfig, PoolLayer, WordEmbeddingTable};
use ecg_core::evaluator::{link_prediction, LabelScorer, Ranker, RankingReport, TextScorer};
use ecg_core::trainer::{train_ecg, train_joint, train_kg, Dissimilarity, TrainingConfig, TrainingRun};
use ecg_core::triples::{KgTriple, LinkTriple};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{check, Verdict};

/// Small encoder for desk-scale runs: m=12, d=8, windows 2/3/4, beta=5.
pub fn small_encoder(k: usize) -> EncoderConfig {
    EncoderConfig {
        m: 12,
        d: 8,
        windows: [2, 3, 4],
        branch_filters: [8, 8, 8],
        beta: 5,
        layer2: ConvLayer {
            window: 2,
            stride: 1,
            filters: 16,
        },
        layer3: ConvLayer {
            window: 2,
            stride: 1,
            filters: 16,
        },
        pool: PoolLayer { window: 2, stride: 1 },
        k,
    }
}

fn word_table(tokens: impl IntoIterator<Item = String>, d: usize, rng: &mut ChaCha8Rng) -> WordEmbeddingTable {
    let entries: Vec<(String, Vec<f64>)> = tokens
        .into_iter()
        .map(|t| (t, (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()))
        .collect();
    WordEmbeddingTable::new(d, entries).unwrap()
}

fn context(head: String, tail: String, tokens: Vec<String>, n: usize) -> ContextTriple {
    ContextTriple {
        head,
        tail,
        relation_tokens: tokens,
        source: Provenance {
            document: format!("d{n}"),
            paragraph: 0,
            chunk: 0,
        },
    }
}

fn text(vocab: &[String], rng: &mut ChaCha8Rng) -> Vec<String> {
    (0..rng.gen_range(3..9)).map(|_| vocab.choose(rng).unwrap().clone()).collect()
}

const ECG_ENTITIES: usize = 200;
const CLUSTERS: usize = 20;

fn ecg_config() -> TrainingConfig {
    TrainingConfig {
        k: 32,
        gamma: 3.0,
        learning_rate: 0.05,
        batch_size: 50,
        dissimilarity: Dissimilarity::L1,
        mu_lambda: 1e-5,
        epochs: 100,
        seed: 1,
        filter_negatives: false,
    }
}

/// 200 entities in 20 clusters of 10. Template `j` links cluster `j` to
/// cluster `j + 1` with words drawn from its own vocabulary. Each entity
/// heads ten training triples and one held-out triple.
fn planted_ecg(rng: &mut ChaCha8Rng) -> (EntityContextGraph, Vec<LinkTriple>, WordEmbeddingTable) {
    let vocab: Vec<Vec<String>> = (0..CLUSTERS)
        .map(|j| (0..6).map(|w| format!("t{j}w{w}")).collect())
        .collect();
    let words = word_table(vocab.iter().flatten().cloned(), 8, rng);
    let name = |i: usize| format!("e{i}");
    let mut graph = EntityContextGraph::new();
    let mut test = Vec::new();
    for i in 0..ECG_ENTITIES {
        graph.add_entity(name(i));
    }
    for i in 0..ECG_ENTITIES {
        let c = i / 10;
        let next = (c + 1) % CLUSTERS;
        for n in 0..11 {
            let tail = name(next * 10 + rng.gen_range(0..10));
            let t = context(name(i), tail, text(&vocab[c], rng), i * 11 + n);
            if n == 10 {
                test.push(LinkTriple::from(&t));
            } else {
                graph.push(t);
            }
        }
    }
    (graph, test, words)
}

pub fn synthetic_ecg() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (graph, test, words) = planted_ecg(&mut rng);
    let config = ecg_config();
    let run = train_ecg(&graph, small_encoder(config.k), &words, &config).map_err(|e| e.to_string())?;
    let encoder = run.model.encoder.as_ref().unwrap();
    let ranker = Ranker::new(&run.model.entities, config.dissimilarity).map_err(|e| e.to_string())?;
    let report = link_prediction(&test, &ranker, &TextScorer { encoder, words: &words }, None).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let (first, fiftieth) = (run.ecg_curve[0].loss, run.ecg_curve[49].loss);
    let hits = report.tail.hits_at_10;
    check!(hits >= 0.5, "tail Hits@10 {hits:.3} < 0.50 (random 0.05)");
    check!(fiftieth < first, "epoch-50 loss {fiftieth:.4} >= epoch-1 loss {first:.4}");
    check!(secs < 600.0, "took {secs:.0}s");
    Ok(format!(
        "{} train triples, tail Hits@10 {hits:.3} (random 0.05), loss {first:.3} -> {fiftieth:.3} by epoch 50",
        graph.triples().len()
    ))
}

const SIDE: usize = 10;

/// 10×10 grid with `right`, `up` and `diag` edges, no wraparound.
fn grid() -> Vec<KgTriple> {
    let cell = |x: usize, y: usize| format!("c{x}_{y}");
    let mut out = Vec::new();
    for x in 0..SIDE {
        for y in 0..SIDE {
            if x + 1 < SIDE {
                out.push(KgTriple::new(cell(x, y), "right", cell(x + 1, y)));
            }
            if y + 1 < SIDE {
                out.push(KgTriple::new(cell(x, y), "up", cell(x, y + 1)));
            }
            if x + 1 < SIDE && y + 1 < SIDE {
                out.push(KgTriple::new(cell(x, y), "diag", cell(x + 1, y + 1)));
            }
        }
    }
    out
}

fn kg_report(run: &TrainingRun, test: &[KgTriple], dissimilarity: Dissimilarity) -> Result<RankingReport, String> {
    let ranker = Ranker::new(&run.model.entities, dissimilarity).map_err(|e| e.to_string())?;
    let test: Vec<LinkTriple> = test.iter().map(LinkTriple::from).collect();
    let scorer = LabelScorer(run.model.relations.as_ref().unwrap());
    link_prediction(&test, &ranker, &scorer, None).map_err(|e| e.to_string())
}

pub fn toy_kg() -> Verdict {
    let start = Instant::now();
    let triples = grid();
    let config = TrainingConfig {
        k: 20,
        gamma: 1.0,
        learning_rate: 0.05,
        batch_size: 20,
        dissimilarity: Dissimilarity::L1,
        mu_lambda: 0.0,
        epochs: 300,
        seed: 5,
        filter_negatives: false,
    };
    let run = train_kg(&triples, &config).map_err(|e| e.to_string())?;
    let report = kg_report(&run, &triples, config.dissimilarity)?;
    let secs = start.elapsed().as_secs_f64();
    let hits = report.tail.hits_at_10;
    check!(hits > 0.8, "tail Hits@10 {hits:.3} <= 0.80 after {} epochs", config.epochs);
    check!(secs < 300.0, "took {secs:.0}s");
    Ok(format!(
        "{} triples, tail Hits@10 {hits:.3} after {} epochs",
        triples.len(),
        config.epochs
    ))
}

const JOINT_ENTITIES: usize = 60;

/// Random KG over 60 entities and two relations, 30% of it held out, plus
/// an ECG stating every held-out edge in relation-specific words.
fn complementary(seed: u64) -> (Vec<KgTriple>, Vec<KgTriple>, EntityContextGraph, WordEmbeddingTable) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let relations = ["likes", "owns"];
    let mut edges = Vec::new();
    for h in 0..JOINT_ENTITIES {
        for r in relations {
            let mut tails: Vec<usize> = (0..JOINT_ENTITIES).filter(|&t| t != h).collect();
            tails.shuffle(&mut rng);
            for &t in &tails[..2] {
                edges.push(KgTriple::new(format!("n{h}"), r, format!("n{t}")));
            }
        }
    }
    edges.shuffle(&mut rng);
    let held = edges.len() * 3 / 10;
    let test = edges[..held].to_vec();
    let train = edges[held..].to_vec();

    let vocab: Vec<Vec<String>> = relations
        .iter()
        .map(|r| (0..6).map(|w| format!("{r}{w}")).collect())
        .collect();
    let words = word_table(vocab.iter().flatten().cloned(), 8, &mut rng);
    let mut graph = EntityContextGraph::new();
    for (n, t) in test.iter().enumerate() {
        let v = &vocab[relations.iter().position(|r| *r == t.relation).unwrap()];
        for copy in 0..3 {
            graph.push(context(t.head.clone(), t.tail.clone(), text(v, &mut rng), n * 3 + copy));
        }
    }
    (train, test, graph, words)
}

pub fn joint_complementarity() -> Verdict {
    let mut details = Vec::new();
    let mut wins = 0;
    for seed in 0..5 {
        let (train, test, graph, words) = complementary(100 + seed);
        let config = TrainingConfig {
            k: 32,
            gamma: 2.0,
            learning_rate: 0.05,
            batch_size: 20,
            dissimilarity: Dissimilarity::L1,
            mu_lambda: 1e-5,
            epochs: 100,
            seed,
            filter_negatives: false,
        };
        let kg_only = train_kg(&train, &config).map_err(|e| e.to_string())?;
        let joint =
            train_joint(&train, &graph, small_encoder(config.k), &words, &config).map_err(|e| e.to_string())?;
        let a = kg_report(&kg_only, &test, config.dissimilarity)?.hits_at_10;
        let b = kg_report(&joint, &test, config.dissimilarity)?.hits_at_10;
        if b > a {
            wins += 1;
        }
        details.push(format!("{a:.3}->{b:.3}"));
    }
    check!(wins == 5, "joint beat KG-only on {wins}/5 seeds (KG-only->joint Hits@10: {})", details.join(", "));
    Ok(format!("joint > KG-only on 5/5 seeds, Hits@10 {}", details.join(", ")))
}

/// A 20-entity version of the planted ECG for quick checks.
pub fn planted_ecg_small(rng: &mut ChaCha8Rng) -> (EntityContextGraph, WordEmbeddingTable) {
    let vocab: Vec<Vec<String>> = (0..4).map(|j| (0..4).map(|w| format!("s{j}w{w}")).collect()).collect();
    let words = word_table(vocab.iter().flatten().cloned(), 8, rng);
    let mut graph = EntityContextGraph::new();
    for i in 0..20 {
        let c = i / 5;
        for n in 0..3 {
            let tail = format!("e{}", ((c + 1) % 4) * 5 + rng.gen_range(0..5));
            graph.push(context(format!("e{i}"), tail, text(&vocab[c], rng), i * 3 + n));
        }
    }
    (graph, words)
}

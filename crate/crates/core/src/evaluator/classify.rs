use std::collections::BTreeMap;
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::EvalError;
use crate::trainer::{EmbeddingTable, TrainError};

/// `(entity, label)` pairs. An entity may appear more than once.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabeledEntitySet {
    pub entries: Vec<(String, String)>,
}

impl LabeledEntitySet {
    /// Reads `entity<TAB>label` lines; blank lines are skipped.
    pub fn read<R: BufRead>(input: R) -> Result<Self, EvalError> {
        let mut entries = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match line.split_once('\t') {
                Some((e, l)) if !e.trim().is_empty() && !l.trim().is_empty() && !l.contains('\t') => {
                    entries.push((e.trim().to_string(), l.trim().to_string()));
                }
                _ => {
                    return Err(EvalError::Parse {
                        line: i + 1,
                        message: "expected `entity<TAB>label`".into(),
                    })
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classifier {
    /// Gaussian naive Bayes.
    NaiveBayes,
    /// Majority vote among the `k` nearest training points (Euclidean).
    Knn { k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub classifier: Classifier,
    pub folds: usize,
    pub accuracy: f64,
    pub fold_accuracies: Vec<f64>,
}

/// Fold number for every sample. Samples of each class are shuffled with
/// `seed` and dealt round-robin, continuing the deal across classes, so every
/// fold receives an almost equal share of every class.
pub fn stratified_folds(labels: &[usize], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    assignment
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

struct GaussianNb {
    /// `(class, log prior, means, variances)` for classes seen in training.
    classes: Vec<(usize, f64, Vec<f64>, Vec<f64>)>,
}

impl GaussianNb {
    fn fit(x: &[&[f64]], y: &[usize], n_classes: usize) -> Self {
        let dim = x[0].len();
        // variance floor proportional to the largest feature variance
        let mean_all: Vec<f64> = (0..dim).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / x.len() as f64).collect();
        let max_var = (0..dim)
            .map(|j| x.iter().map(|r| (r[j] - mean_all[j]).powi(2)).sum::<f64>() / x.len() as f64)
            .fold(0.0, f64::max);
        let floor = 1e-9 * max_var + 1e-12;

        let total = y.len() as f64;
        let mut classes = Vec::new();
        for c in 0..n_classes {
            let rows: Vec<&[f64]> = x.iter().zip(y).filter(|(_, &l)| l == c).map(|(r, _)| *r).collect();
            if rows.is_empty() {
                continue;
            }
            let n = rows.len() as f64;
            let mean: Vec<f64> = (0..dim).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
            let var: Vec<f64> = (0..dim)
                .map(|j| rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n + floor)
                .collect();
            let prior = ((n + 1.0) / (total + n_classes as f64)).ln();
            classes.push((c, prior, mean, var));
        }
        Self { classes }
    }

    fn predict(&self, x: &[f64]) -> usize {
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for (c, prior, mean, var) in &self.classes {
            let ll: f64 = x
                .iter()
                .zip(mean)
                .zip(var)
                .map(|((v, m), s)| -0.5 * ((2.0 * std::f64::consts::PI * s).ln() + (v - m).powi(2) / s))
                .sum();
            let score = prior + ll;
            if score > best.0 {
                best = (score, *c);
            }
        }
        best.1
    }
}

fn knn_predict(train_x: &[&[f64]], train_y: &[usize], x: &[f64], k: usize, n_classes: usize) -> usize {
    let mut dist: Vec<(f64, usize)> = train_x
        .iter()
        .enumerate()
        .map(|(i, r)| (squared_distance(r, x), i))
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let neighbours = &dist[..k.min(dist.len())];
    let mut votes = vec![0usize; n_classes];
    for &(_, i) in neighbours {
        votes[train_y[i]] += 1;
    }
    let top = *votes.iter().max().expect("at least one class");
    // a tied vote goes to the tied class with the closest neighbour
    neighbours
        .iter()
        .map(|&(_, i)| train_y[i])
        .find(|&c| votes[c] == top)
        .expect("some neighbour has the top vote")
}

/// Mean held-out accuracy over `folds` stratified folds.
pub fn cross_validate(
    features: &[Vec<f64>],
    labels: &[String],
    classifier: Classifier,
    folds: usize,
    seed: u64,
) -> Result<CvReport, EvalError> {
    if folds < 2 {
        return Err(EvalError::Config("cross validation needs at least 2 folds".into()));
    }
    if features.len() != labels.len() {
        return Err(EvalError::Config("features and labels differ in length".into()));
    }
    if labels.len() < folds {
        return Err(EvalError::Config(format!(
            "{} labelled entities cannot fill {folds} folds",
            labels.len()
        )));
    }
    if let Classifier::Knn { k: 0 } = classifier {
        return Err(EvalError::Config("KNN needs k >= 1".into()));
    }
    let class_names: Vec<&String> = {
        let mut v: Vec<&String> = labels.iter().collect();
        v.sort();
        v.dedup();
        v
    };
    let y: Vec<usize> = labels
        .iter()
        .map(|l| class_names.binary_search(&l).expect("label is present"))
        .collect();
    let assignment = stratified_folds(&y, folds, seed);

    let mut fold_accuracies = Vec::with_capacity(folds);
    for f in 0..folds {
        let (mut tx, mut ty, mut test) = (Vec::new(), Vec::new(), Vec::new());
        for (i, row) in features.iter().enumerate() {
            if assignment[i] == f {
                test.push(i);
            } else {
                tx.push(row.as_slice());
                ty.push(y[i]);
            }
        }
        let nb = matches!(classifier, Classifier::NaiveBayes).then(|| GaussianNb::fit(&tx, &ty, class_names.len()));
        let correct = test
            .iter()
            .filter(|&&i| {
                let predicted = match classifier {
                    Classifier::NaiveBayes => nb.as_ref().expect("fitted").predict(&features[i]),
                    Classifier::Knn { k } => knn_predict(&tx, &ty, &features[i], k, class_names.len()),
                };
                predicted == y[i]
            })
            .count();
        fold_accuracies.push(correct as f64 / test.len() as f64);
    }
    Ok(CvReport {
        classifier,
        folds,
        accuracy: fold_accuracies.iter().sum::<f64>() / folds as f64,
        fold_accuracies,
    })
}

/// Cross-validated classification of labelled entities from their
/// unit-normalized embeddings.
pub fn classify_cv(
    embeddings: &EmbeddingTable,
    labels: &LabeledEntitySet,
    classifier: Classifier,
    folds: usize,
    seed: u64,
) -> Result<CvReport, EvalError> {
    let mut features = Vec::with_capacity(labels.len());
    let mut ys = Vec::with_capacity(labels.len());
    for (entity, label) in &labels.entries {
        let row = embeddings
            .get(entity)
            .ok_or_else(|| EvalError::UnknownEntity(entity.clone()))?;
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(TrainError::Degenerate(entity.clone()).into());
        }
        features.push(row.iter().map(|v| v / norm).collect());
        ys.push(label.clone());
    }
    cross_validate(&features, &ys, classifier, folds, seed)
}

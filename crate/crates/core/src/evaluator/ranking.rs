use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use super::EvalError;
use crate::encoder::{RelationEncoder, WordEmbeddingTable};
use crate::numerics::NORM_EPSILON;
use crate::trainer::{Dissimilarity, EmbeddingTable, Side};
use crate::triples::{KnownTriples, LinkTriple, Relation};

/// Produces the (unnormalized) relation vector of a test triple.
pub trait RelationScorer: Sync {
    fn relation_vector(&self, relation: &Relation) -> Result<Vec<f64>, EvalError>;
}

/// Relation vectors looked up by label, for KG triples.
pub struct LabelScorer<'a>(pub &'a EmbeddingTable);

impl RelationScorer for LabelScorer<'_> {
    fn relation_vector(&self, relation: &Relation) -> Result<Vec<f64>, EvalError> {
        match relation {
            Relation::Label(label) => self
                .0
                .get(label)
                .map(<[f64]>::to_vec)
                .ok_or_else(|| EvalError::UnknownRelation(label.clone())),
            Relation::Text(tokens) => Err(EvalError::UnknownRelation(tokens.join(" "))),
        }
    }
}

/// Relation vectors produced by encoding relation text.
pub struct TextScorer<'a> {
    pub encoder: &'a RelationEncoder,
    pub words: &'a WordEmbeddingTable,
}

impl RelationScorer for TextScorer<'_> {
    fn relation_vector(&self, relation: &Relation) -> Result<Vec<f64>, EvalError> {
        match relation {
            Relation::Text(tokens) => {
                let input = self.words.prepare_relation(tokens, self.encoder.config().m)?;
                Ok(self.encoder.encode(&input)?.into_data())
            }
            Relation::Label(label) => Err(EvalError::UnknownRelation(label.clone())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    Raw,
    Filtered,
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Setting::Raw => "raw",
            Setting::Filtered => "filtered",
        })
    }
}

fn unit(v: &[f64], what: &str) -> Result<Vec<f64>, EvalError> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > NORM_EPSILON) {
        return Err(EvalError::Config(format!("{what} vector has (near-)zero norm")));
    }
    Ok(v.iter().map(|x| x / norm).collect())
}

/// Normalized entity vectors prepared once for many ranking queries.
#[derive(Debug, Clone)]
pub struct Ranker<'a> {
    entities: &'a EmbeddingTable,
    unit: Vec<f64>,
    dissimilarity: Dissimilarity,
}

impl<'a> Ranker<'a> {
    pub fn new(entities: &'a EmbeddingTable, dissimilarity: Dissimilarity) -> Result<Self, EvalError> {
        Ok(Self {
            entities,
            unit: entities.normalized_rows()?,
            dissimilarity,
        })
    }

    pub fn entities(&self) -> &EmbeddingTable {
        self.entities
    }

    fn row(&self, i: usize) -> &[f64] {
        let k = self.entities.k();
        &self.unit[i * k..(i + 1) * k]
    }

    fn index(&self, name: &str) -> Result<usize, EvalError> {
        self.entities
            .index_of(name)
            .ok_or_else(|| EvalError::UnknownEntity(name.to_string()))
    }

    fn score(&self, head: &[f64], relation: &[f64], tail: &[f64]) -> f64 {
        let diff = head.iter().zip(relation).zip(tail).map(|((h, r), t)| h + r - t);
        match self.dissimilarity {
            Dissimilarity::L1 => diff.map(f64::abs).sum(),
            Dissimilarity::L2 => diff.map(|v| v * v).sum::<f64>().sqrt(),
        }
    }

    /// Rank of the true entity on `side` given an already normalized relation
    /// vector: one plus the number of other candidates scoring strictly
    /// better. With `known`, candidates forming another known triple are
    /// skipped.
    pub fn rank_indices(
        &self,
        head: usize,
        relation: &Relation,
        relation_unit: &[f64],
        tail: usize,
        side: Side,
        known: Option<&KnownTriples>,
    ) -> usize {
        let truth = self.score(self.row(head), relation_unit, self.row(tail));
        let (fixed, target) = match side {
            Side::Head => (tail, head),
            Side::Tail => (head, tail),
        };
        let mut better = 0;
        for c in 0..self.entities.len() {
            if c == target {
                continue;
            }
            let (h, t) = match side {
                Side::Head => (c, fixed),
                Side::Tail => (fixed, c),
            };
            if known.is_some_and(|k| k.contains(h, relation, t)) {
                continue;
            }
            if self.score(self.row(h), relation_unit, self.row(t)) < truth {
                better += 1;
            }
        }
        better + 1
    }
}

/// Rank of the held-out `side` entity of `triple` among all entities.
pub fn rank_entity(
    triple: &LinkTriple,
    side: Side,
    ranker: &Ranker<'_>,
    scorer: &dyn RelationScorer,
    known: Option<&KnownTriples>,
) -> Result<usize, EvalError> {
    let h = ranker.index(&triple.head)?;
    let t = ranker.index(&triple.tail)?;
    let r = unit(&scorer.relation_vector(&triple.relation)?, "relation")?;
    Ok(ranker.rank_indices(h, &triple.relation, &r, t, side, known))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideReport {
    pub count: usize,
    pub mean_rank: f64,
    pub hits_at_10: f64,
}

impl SideReport {
    fn from_ranks(ranks: &[usize]) -> Self {
        let n = ranks.len().max(1) as f64;
        Self {
            count: ranks.len(),
            mean_rank: ranks.iter().sum::<usize>() as f64 / n,
            hits_at_10: ranks.iter().filter(|&&r| r <= 10).count() as f64 / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingReport {
    pub setting: Setting,
    pub triples: usize,
    pub mean_rank: f64,
    pub hits_at_10: f64,
    pub head: SideReport,
    pub tail: SideReport,
    /// `(head rank, tail rank)` per test triple, in input order.
    #[serde(skip)]
    pub ranks: Vec<(usize, usize)>,
}

impl RankingReport {
    pub fn from_ranks(ranks: Vec<(usize, usize)>, setting: Setting) -> Result<Self, EvalError> {
        if ranks.is_empty() {
            return Err(EvalError::EmptyTestSet);
        }
        let heads: Vec<usize> = ranks.iter().map(|r| r.0).collect();
        let tails: Vec<usize> = ranks.iter().map(|r| r.1).collect();
        let all: Vec<usize> = heads.iter().chain(&tails).copied().collect();
        let both = SideReport::from_ranks(&all);
        Ok(Self {
            setting,
            triples: ranks.len(),
            mean_rank: both.mean_rank,
            hits_at_10: both.hits_at_10,
            head: SideReport::from_ranks(&heads),
            tail: SideReport::from_ranks(&tails),
            ranks,
        })
    }
}

impl fmt::Display for RankingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "link prediction ({}, {} triples)", self.setting, self.triples)?;
        writeln!(f, "{:<8} {:>12} {:>10}", "side", "mean rank", "hits@10")?;
        for (name, s) in [("head", &self.head), ("tail", &self.tail)] {
            writeln!(f, "{name:<8} {:>12.2} {:>9.2}%", s.mean_rank, 100.0 * s.hits_at_10)?;
        }
        write!(f, "{:<8} {:>12.2} {:>9.2}%", "both", self.mean_rank, 100.0 * self.hits_at_10)
    }
}

/// Ranks both sides of every test triple. Passing `known` switches to the
/// filtered setting.
pub fn link_prediction(
    test: &[LinkTriple],
    ranker: &Ranker<'_>,
    scorer: &dyn RelationScorer,
    known: Option<&KnownTriples>,
) -> Result<RankingReport, EvalError> {
    if test.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    let ranks = test
        .par_iter()
        .map(|triple| {
            let h = ranker.index(&triple.head)?;
            let t = ranker.index(&triple.tail)?;
            let r = unit(&scorer.relation_vector(&triple.relation)?, "relation")?;
            Ok((
                ranker.rank_indices(h, &triple.relation, &r, t, Side::Head, known),
                ranker.rank_indices(h, &triple.relation, &r, t, Side::Tail, known),
            ))
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let setting = if known.is_some() { Setting::Filtered } else { Setting::Raw };
    RankingReport::from_ranks(ranks, setting)
}

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;

use super::{corrupt, corrupt_filtered, triple_margin_loss, BatchLoss, Corruption, EmbeddingTable, TrainError, TrainingConfig};
use crate::corpus::EntityContextGraph;
use crate::encoder::{RelationEncoder, WordEmbeddingTable};
use crate::numerics::{GradBuffer, Tensor, NORM_EPSILON};
use crate::triples::{KgTriple, KnownTriples, Relation};

/// Triples handed to one rayon task. Fixed so that the floating-point
/// reduction order does not depend on the thread count.
const PARALLEL_CHUNK: usize = 8;

/// Redraw budget for filtered negatives.
const FILTER_TRIES: usize = 32;

fn entity_row(entities: &EmbeddingTable, name: &str) -> Result<usize, TrainError> {
    entities
        .index_of(name)
        .ok_or_else(|| TrainError::UnknownEntity(name.to_string()))
}

/// Entities a network may draw negatives from, as a local index space over
/// rows of the shared table. A network never corrupts towards entities that
/// only the other network knows.
#[derive(Debug, Clone, Default)]
struct Universe {
    rows: Vec<usize>,
    local: HashMap<usize, usize>,
}

impl Universe {
    fn intern(&mut self, row: usize) -> usize {
        *self.local.entry(row).or_insert_with(|| {
            self.rows.push(row);
            self.rows.len() - 1
        })
    }

    fn check(&self) -> Result<(), TrainError> {
        if self.rows.len() < 2 {
            return Err(TrainError::Config("corruption needs at least two entities".into()));
        }
        Ok(())
    }
}

/// Draws in the universe's local index space and returns table rows.
#[allow(clippy::too_many_arguments)]
fn draw_negative<R: Rng + ?Sized>(
    universe: &Universe,
    head: usize,
    tail: usize,
    relation: &Relation,
    known: &KnownTriples,
    config: &TrainingConfig,
    rng: &mut R,
) -> Corruption {
    let n = universe.rows.len();
    let c = if config.filter_negatives {
        corrupt_filtered(head, relation, tail, n, known, FILTER_TRIES, rng)
    } else {
        corrupt(head, tail, n, rng)
    };
    Corruption {
        head: universe.rows[c.head],
        tail: universe.rows[c.tail],
        side: c.side,
    }
}

fn apply_entity_grads(entities: &mut EmbeddingTable, rows: &[(usize, Vec<f64>)], scale: f64) {
    let mut scaled = Vec::new();
    for (row, g) in rows {
        scaled.clear();
        scaled.extend(g.iter().map(|v| v * scale));
        entities.add_row_grad(*row, &scaled);
    }
}

/// The KG side: relation vectors are rows of a label table.
#[derive(Debug, Clone)]
pub struct KgNetwork {
    universe: Universe,
    heads: Vec<usize>,
    labels: Vec<usize>,
    tails: Vec<usize>,
    relations: Vec<Relation>,
    known: KnownTriples,
}

impl KgNetwork {
    pub fn new(triples: &[KgTriple], entities: &EmbeddingTable, relations: &EmbeddingTable) -> Result<Self, TrainError> {
        if triples.is_empty() {
            return Err(TrainError::EmptyInput("no KG triples".into()));
        }
        let mut net = Self {
            universe: Universe::default(),
            heads: Vec::with_capacity(triples.len()),
            labels: Vec::with_capacity(triples.len()),
            tails: Vec::with_capacity(triples.len()),
            relations: relations.names().iter().map(|l| Relation::Label(l.clone())).collect(),
            known: KnownTriples::new(),
        };
        for t in triples {
            let h = net.universe.intern(entity_row(entities, &t.head)?);
            let tl = net.universe.intern(entity_row(entities, &t.tail)?);
            let r = relations
                .index_of(&t.relation)
                .ok_or_else(|| TrainError::UnknownRelation(t.relation.clone()))?;
            net.known.insert(h, net.relations[r].clone(), tl);
            net.heads.push(h);
            net.labels.push(r);
            net.tails.push(tl);
        }
        net.universe.check()?;
        Ok(net)
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    /// One SGD step on the triples at `batch` (indices into the training list).
    pub fn step<R: Rng + ?Sized>(
        &self,
        batch: &[usize],
        entities: &mut EmbeddingTable,
        relations: &mut EmbeddingTable,
        config: &TrainingConfig,
        rng: &mut R,
    ) -> Result<BatchLoss, TrainError> {
        if batch.is_empty() {
            return Ok(BatchLoss::default());
        }
        let mut hinge = 0.0;
        let mut entity_grads = Vec::new();
        let mut relation_grads = Vec::new();
        for &i in batch {
            let r = self.labels[i];
            let c = draw_negative(&self.universe, self.heads[i], self.tails[i], &self.relations[r], &self.known, config, rng);
            let (h, t) = (self.universe.rows[self.heads[i]], self.universe.rows[self.tails[i]]);
            let l = triple_margin_loss(
                entities.row(h),
                relations.row(r),
                entities.row(t),
                entities.row(c.head),
                entities.row(c.tail),
                config.gamma,
                config.dissimilarity,
                0.0,
            )?;
            if l.hinge > 0.0 {
                hinge += l.hinge;
                let [gh, gr, gt, gnh, gnt] = l.grads;
                entity_grads.extend([(h, gh), (t, gt), (c.head, gnh), (c.tail, gnt)]);
                relation_grads.push((r, gr));
            }
        }
        let scale = 1.0 / batch.len() as f64;
        apply_entity_grads(entities, &entity_grads, scale);
        apply_entity_grads(relations, &relation_grads, scale);
        entities.sgd_step(config.learning_rate);
        relations.sgd_step(config.learning_rate);
        let hinge = hinge * scale;
        Ok(BatchLoss { loss: hinge, hinge })
    }
}

/// The context-triple side: relation vectors come from encoding the
/// relation text with the CNN.
#[derive(Debug, Clone)]
pub struct EcgNetwork<'w> {
    words: &'w WordEmbeddingTable,
    universe: Universe,
    heads: Vec<usize>,
    tails: Vec<usize>,
    relations: Vec<Relation>,
    known: KnownTriples,
    m: usize,
}

struct ChunkGrads {
    hinge: f64,
    rows: Vec<(usize, Vec<f64>)>,
    encoder: GradBuffer,
}

impl<'w> EcgNetwork<'w> {
    pub fn new(
        graph: &EntityContextGraph,
        entities: &EmbeddingTable,
        words: &'w WordEmbeddingTable,
        encoder: &RelationEncoder,
    ) -> Result<Self, TrainError> {
        if graph.triples().is_empty() {
            return Err(TrainError::EmptyInput("the entity context graph has no triples".into()));
        }
        let cfg = encoder.config();
        if words.dim() != cfg.d {
            return Err(TrainError::Config(format!(
                "word vectors have dimension {}, the encoder expects d = {}",
                words.dim(),
                cfg.d
            )));
        }
        if cfg.k != entities.k() {
            return Err(TrainError::Config(format!(
                "encoder output size {} differs from entity dimension {}",
                cfg.k,
                entities.k()
            )));
        }
        let longest = graph.longest_relation();
        if longest > cfg.m {
            return Err(TrainError::Config(format!(
                "graph has relations of {longest} tokens but the encoder accepts m = {}",
                cfg.m
            )));
        }
        let mut net = Self {
            words,
            universe: Universe::default(),
            heads: Vec::with_capacity(graph.triples().len()),
            tails: Vec::with_capacity(graph.triples().len()),
            relations: Vec::with_capacity(graph.triples().len()),
            known: KnownTriples::new(),
            m: cfg.m,
        };
        for e in graph.entities() {
            net.universe.intern(entity_row(entities, e)?);
        }
        for t in graph.triples() {
            let h = net.universe.intern(entity_row(entities, &t.head)?);
            let tl = net.universe.intern(entity_row(entities, &t.tail)?);
            let rel = Relation::Text(t.relation_tokens.clone());
            net.known.insert(h, rel.clone(), tl);
            net.heads.push(h);
            net.tails.push(tl);
            net.relations.push(rel);
        }
        net.universe.check()?;
        Ok(net)
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    fn tokens(&self, i: usize) -> &[String] {
        match &self.relations[i] {
            Relation::Text(tokens) => tokens,
            Relation::Label(_) => unreachable!("context triples carry text relations"),
        }
    }

    /// One SGD step on the triples at `batch`: encode, corrupt, average the
    /// margin loss, add the encoder penalty and update entities and encoder.
    ///
    /// Corruptions are drawn sequentially from `rng`; the per-triple forward
    /// and backward passes run in parallel and are reduced in batch order.
    pub fn step<R: Rng + ?Sized>(
        &self,
        batch: &[usize],
        entities: &mut EmbeddingTable,
        encoder: &mut RelationEncoder,
        config: &TrainingConfig,
        rng: &mut R,
    ) -> Result<BatchLoss, TrainError> {
        if batch.is_empty() {
            return Ok(BatchLoss::default());
        }
        let negatives: Vec<Corruption> = batch
            .iter()
            .map(|&i| draw_negative(&self.universe, self.heads[i], self.tails[i], &self.relations[i], &self.known, config, rng))
            .collect();

        let (ent, enc) = (&*entities, &*encoder);
        let chunks: Vec<Result<ChunkGrads, TrainError>> = batch
            .par_chunks(PARALLEL_CHUNK)
            .zip(negatives.par_chunks(PARALLEL_CHUNK))
            .map(|(idx, negs)| {
                let mut out = ChunkGrads {
                    hinge: 0.0,
                    rows: Vec::new(),
                    encoder: enc.store().grad_buffer(),
                };
                for (&i, c) in idx.iter().zip(negs) {
                    let (h, t) = (self.universe.rows[self.heads[i]], self.universe.rows[self.tails[i]]);
                    let input = self.words.prepare_relation(self.tokens(i), self.m)?;
                    let (r, acts) = enc.forward(&input)?;
                    if !(r.l2_norm() > NORM_EPSILON) {
                        return Err(TrainError::Degenerate(format!("relation text {}", self.tokens(i).join(" "))));
                    }
                    let l = triple_margin_loss(
                        ent.row(h),
                        r.data(),
                        ent.row(t),
                        ent.row(c.head),
                        ent.row(c.tail),
                        config.gamma,
                        config.dissimilarity,
                        0.0,
                    )?;
                    if l.hinge > 0.0 {
                        out.hinge += l.hinge;
                        let [gh, gr, gt, gnh, gnt] = l.grads;
                        enc.backward(&acts, &Tensor::vector(gr), &mut out.encoder)?;
                        out.rows.extend([(h, gh), (t, gt), (c.head, gnh), (c.tail, gnt)]);
                    }
                }
                Ok(out)
            })
            .collect();

        let scale = 1.0 / batch.len() as f64;
        let mut hinge = 0.0;
        let mut encoder_grads = encoder.store().grad_buffer();
        for chunk in chunks {
            let chunk = chunk?;
            hinge += chunk.hinge;
            encoder_grads.merge(&chunk.encoder)?;
            apply_entity_grads(entities, &chunk.rows, scale);
        }
        encoder_grads.scale(scale);
        let mu = encoder.weight_penalty(config.mu_lambda, Some(&mut encoder_grads))?;
        let store = encoder.store_mut();
        store.accumulate(&encoder_grads)?;
        store.sgd_step(config.learning_rate);
        entities.sgd_step(config.learning_rate);
        let hinge = hinge * scale;
        Ok(BatchLoss { loss: hinge + mu, hinge })
    }
}

use indexmap::IndexSet;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{BatchLoss, EcgNetwork, EmbeddingTable, EpochLoss, KgNetwork, TrainError, TrainingConfig};
use crate::corpus::EntityContextGraph;
use crate::encoder::{EncoderConfig, RelationEncoder, WordEmbeddingTable};
use crate::triples::KgTriple;

/// Everything a run learns. Both networks read and write the single
/// `entities` table.
#[derive(Debug, Clone)]
pub struct EmbeddingModel {
    pub entities: EmbeddingTable,
    pub relations: Option<EmbeddingTable>,
    pub encoder: Option<RelationEncoder>,
}

impl EmbeddingModel {
    /// Draws entity rows, then relation rows, then encoder weights from `rng`.
    pub fn initialize<E, S>(
        entities: E,
        relation_labels: Option<Vec<String>>,
        encoder: Option<EncoderConfig>,
        k: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self, TrainError>
    where
        E: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let entities = EmbeddingTable::init_uniform(entities, k, rng)?;
        let relations = relation_labels
            .map(|labels| EmbeddingTable::init_uniform(labels, k, rng))
            .transpose()?;
        let encoder = encoder.map(|cfg| RelationEncoder::new(cfg, rng)).transpose()?;
        Ok(Self {
            entities,
            relations,
            encoder,
        })
    }
}

/// Output of the `train_*` entry points.
#[derive(Debug, Clone)]
pub struct TrainingRun {
    pub model: EmbeddingModel,
    pub ecg_curve: Vec<EpochLoss>,
    pub kg_curve: Vec<EpochLoss>,
    pub epochs_done: usize,
    /// Generator position after the last epoch, for [`Trainer::resume`].
    pub rng_word_pos: u128,
}

struct Cursor {
    order: Vec<usize>,
    pos: usize,
}

impl Cursor {
    fn new(n: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        Self { order, pos: 0 }
    }

    /// Next minibatch; after a full pass the order is reshuffled. The last
    /// batch of a pass may be short.
    fn next(&mut self, b: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        if self.pos >= self.order.len() {
            self.order.shuffle(rng);
            self.pos = 0;
        }
        let end = (self.pos + b).min(self.order.len());
        let batch = self.order[self.pos..end].to_vec();
        self.pos = end;
        batch
    }
}

#[derive(Default)]
struct Accumulator {
    loss: f64,
    hinge: f64,
    batches: usize,
}

impl Accumulator {
    fn add(&mut self, l: BatchLoss) {
        self.loss += l.loss;
        self.hinge += l.hinge;
        self.batches += 1;
    }

    fn finish(&self, epoch: usize) -> EpochLoss {
        let n = self.batches.max(1) as f64;
        EpochLoss {
            epoch,
            loss: self.loss / n,
            hinge: self.hinge / n,
        }
    }
}

/// Epoch driver holding the run's only random generator.
///
/// An epoch is `ceil(n / b)` minibatches of a freshly shuffled training set.
/// With both networks present an epoch runs as many iterations as the larger
/// one needs; each iteration is one KG step followed by one ECG step, and the
/// smaller set starts a reshuffled pass when it runs out.
#[derive(Debug, Clone)]
pub struct Trainer {
    config: TrainingConfig,
    rng: ChaCha8Rng,
    epochs_done: usize,
}

impl Trainer {
    pub fn new(config: TrainingConfig) -> Result<Self, TrainError> {
        config.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Self {
            config,
            rng,
            epochs_done: 0,
        })
    }

    /// Continues a run saved after `epochs_done` epochs whose generator had
    /// advanced to `rng_word_pos`.
    pub fn resume(config: TrainingConfig, epochs_done: usize, rng_word_pos: u128) -> Result<Self, TrainError> {
        let mut t = Self::new(config)?;
        t.rng.set_word_pos(rng_word_pos);
        t.epochs_done = epochs_done;
        Ok(t)
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn rng_word_pos(&self) -> u128 {
        self.rng.get_word_pos()
    }

    pub fn epochs_done(&self) -> usize {
        self.epochs_done
    }

    /// Runs one epoch. Returns the (KG, ECG) epoch losses of the networks
    /// that took part.
    pub fn run_epoch(
        &mut self,
        model: &mut EmbeddingModel,
        kg: Option<&KgNetwork>,
        ecg: Option<&EcgNetwork<'_>>,
    ) -> Result<(Option<EpochLoss>, Option<EpochLoss>), TrainError> {
        let b = self.config.batch_size;
        let epoch = self.epochs_done + 1;
        if kg.is_some() && model.relations.is_none() {
            return Err(TrainError::Config("KG training needs a relation table".into()));
        }
        if ecg.is_some() && model.encoder.is_none() {
            return Err(TrainError::Config("ECG training needs a relation encoder".into()));
        }
        let mut kg_cursor = kg.map(|n| Cursor::new(n.len(), &mut self.rng));
        let mut ecg_cursor = ecg.map(|n| Cursor::new(n.len(), &mut self.rng));
        let iterations = [kg.map(KgNetwork::len), ecg.map(EcgNetwork::len)]
            .into_iter()
            .flatten()
            .map(|n| n.div_ceil(b))
            .max()
            .ok_or_else(|| TrainError::EmptyInput("no network to train".into()))?;

        let (mut kg_acc, mut ecg_acc) = (Accumulator::default(), Accumulator::default());
        for _ in 0..iterations {
            if let (Some(net), Some(cursor)) = (kg, kg_cursor.as_mut()) {
                let batch = cursor.next(b, &mut self.rng);
                let relations = model.relations.as_mut().expect("checked above");
                kg_acc.add(net.step(&batch, &mut model.entities, relations, &self.config, &mut self.rng)?);
            }
            if let (Some(net), Some(cursor)) = (ecg, ecg_cursor.as_mut()) {
                let batch = cursor.next(b, &mut self.rng);
                let encoder = model.encoder.as_mut().expect("checked above");
                ecg_acc.add(net.step(&batch, &mut model.entities, encoder, &self.config, &mut self.rng)?);
            }
        }
        self.epochs_done = epoch;
        let kg_loss = kg.map(|_| kg_acc.finish(epoch));
        let ecg_loss = ecg.map(|_| ecg_acc.finish(epoch));
        match (kg_loss, ecg_loss) {
            (Some(k), Some(e)) => log::info!("epoch {epoch}: kg loss {:.6}, ecg loss {:.6}", k.loss, e.loss),
            (Some(k), None) => log::info!("epoch {epoch}: kg loss {:.6}", k.loss),
            (None, Some(e)) => log::info!("epoch {epoch}: ecg loss {:.6}", e.loss),
            (None, None) => {}
        }
        Ok((kg_loss, ecg_loss))
    }

    /// Runs `epochs` epochs and collects the loss curves.
    pub fn fit(
        &mut self,
        model: &mut EmbeddingModel,
        kg: Option<&KgNetwork>,
        ecg: Option<&EcgNetwork<'_>>,
        epochs: usize,
    ) -> Result<(Vec<EpochLoss>, Vec<EpochLoss>), TrainError> {
        let (mut kg_curve, mut ecg_curve) = (Vec::new(), Vec::new());
        for _ in 0..epochs {
            let (k, e) = self.run_epoch(model, kg, ecg)?;
            kg_curve.extend(k);
            ecg_curve.extend(e);
        }
        Ok((kg_curve, ecg_curve))
    }
}

fn kg_vocabulary(triples: &[KgTriple]) -> (IndexSet<String>, Vec<String>) {
    let mut entities = IndexSet::new();
    let mut labels = IndexSet::new();
    for t in triples {
        entities.insert(t.head.clone());
        entities.insert(t.tail.clone());
        labels.insert(t.relation.clone());
    }
    (entities, labels.into_iter().collect())
}

/// Trains entity embeddings and the relation encoder on an ECG.
pub fn train_ecg(
    graph: &EntityContextGraph,
    encoder: EncoderConfig,
    words: &WordEmbeddingTable,
    config: &TrainingConfig,
) -> Result<TrainingRun, TrainError> {
    let mut trainer = Trainer::new(config.clone())?;
    if graph.triples().is_empty() {
        return Err(TrainError::EmptyInput("the entity context graph has no triples".into()));
    }
    let mut model = EmbeddingModel::initialize(graph.entities().iter().cloned(), None, Some(encoder), config.k, trainer.rng())?;
    let net = EcgNetwork::new(graph, &model.entities, words, model.encoder.as_ref().expect("initialized"))?;
    let (_, ecg_curve) = trainer.fit(&mut model, None, Some(&net), config.epochs)?;
    Ok(TrainingRun {
        model,
        ecg_curve,
        kg_curve: Vec::new(),
        epochs_done: trainer.epochs_done(),
        rng_word_pos: trainer.rng_word_pos(),
    })
}

/// Translational training on labelled KG triples.
pub fn train_kg(triples: &[KgTriple], config: &TrainingConfig) -> Result<TrainingRun, TrainError> {
    let mut trainer = Trainer::new(config.clone())?;
    if triples.is_empty() {
        return Err(TrainError::EmptyInput("no KG triples".into()));
    }
    let (entities, labels) = kg_vocabulary(triples);
    let mut model = EmbeddingModel::initialize(entities, Some(labels), None, config.k, trainer.rng())?;
    let net = KgNetwork::new(triples, &model.entities, model.relations.as_ref().expect("initialized"))?;
    let (kg_curve, _) = trainer.fit(&mut model, Some(&net), None, config.epochs)?;
    Ok(TrainingRun {
        model,
        ecg_curve: Vec::new(),
        kg_curve,
        epochs_done: trainer.epochs_done(),
        rng_word_pos: trainer.rng_word_pos(),
    })
}

/// Both networks over one entity table. Entities are matched by identifier
/// string; KG entities take the first rows. With one side empty this falls
/// back to single-network training and logs a warning.
pub fn train_joint(
    kg: &[KgTriple],
    graph: &EntityContextGraph,
    encoder: EncoderConfig,
    words: &WordEmbeddingTable,
    config: &TrainingConfig,
) -> Result<TrainingRun, TrainError> {
    match (kg.is_empty(), graph.triples().is_empty()) {
        (true, true) => return Err(TrainError::EmptyInput("both the KG and the ECG are empty".into())),
        (true, false) => {
            log::warn!("KG is empty; training the ECG network alone");
            return train_ecg(graph, encoder, words, config);
        }
        (false, true) => {
            log::warn!("ECG is empty; training the KG network alone");
            return train_kg(kg, config);
        }
        (false, false) => {}
    }
    let mut trainer = Trainer::new(config.clone())?;
    let (mut entities, labels) = kg_vocabulary(kg);
    entities.extend(graph.entities().iter().cloned());
    let mut model = EmbeddingModel::initialize(entities, Some(labels), Some(encoder), config.k, trainer.rng())?;
    let kg_net = KgNetwork::new(kg, &model.entities, model.relations.as_ref().expect("initialized"))?;
    let ecg_net = EcgNetwork::new(graph, &model.entities, words, model.encoder.as_ref().expect("initialized"))?;
    let (kg_curve, ecg_curve) = trainer.fit(&mut model, Some(&kg_net), Some(&ecg_net), config.epochs)?;
    Ok(TrainingRun {
        model,
        ecg_curve,
        kg_curve,
        epochs_done: trainer.epochs_done(),
        rng_word_pos: trainer.rng_word_pos(),
    })
}

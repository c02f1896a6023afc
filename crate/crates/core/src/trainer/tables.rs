use indexmap::IndexSet;
use rand::Rng;

use super::TrainError;
use crate::numerics::{ParamId, ParameterStore, Tensor, NORM_EPSILON};

/// Named rows of `k`-dimensional vectors backed by one `[n, k]` entry of a
/// [`ParameterStore`]. Used for entities and for KG relation labels.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    names: IndexSet<String>,
    store: ParameterStore,
    id: ParamId,
    k: usize,
}

pub type EntityEmbeddingTable = EmbeddingTable;
pub type KgRelationTable = EmbeddingTable;

impl EmbeddingTable {
    /// Each coordinate uniform in `(−6/√k, 6/√k)`, then every row scaled to
    /// unit L2 norm.
    pub fn init_uniform<I, S, R>(names: I, k: usize, rng: &mut R) -> Result<Self, TrainError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
        R: Rng + ?Sized,
    {
        if k == 0 {
            return Err(TrainError::Config("embedding dimension k must be positive".into()));
        }
        let names: IndexSet<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(TrainError::EmptyInput("no entities or relations to embed".into()));
        }
        let bound = 6.0 / (k as f64).sqrt();
        let mut data = Vec::with_capacity(names.len() * k);
        for _ in 0..names.len() {
            let start = data.len();
            loop {
                data.truncate(start);
                data.extend((0..k).map(|_| rng.gen_range(-bound..bound)));
                let norm = data[start..].iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > NORM_EPSILON {
                    data[start..].iter_mut().for_each(|v| *v /= norm);
                    break;
                }
            }
        }
        Self::from_rows(names, k, data)
    }

    pub fn from_rows<I, S>(names: I, k: usize, data: Vec<f64>) -> Result<Self, TrainError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: IndexSet<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() || k == 0 {
            return Err(TrainError::EmptyInput("embedding table needs at least one row".into()));
        }
        let mut store = ParameterStore::new();
        let id = store.insert("rows", Tensor::new(vec![names.len(), k], data)?, false)?;
        Ok(Self { names, store, id, k })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn names(&self) -> &IndexSet<String> {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.get_index_of(name)
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn row(&self, index: usize) -> &[f64] {
        self.store.value(self.id).row(index)
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.index_of(name).map(|i| self.row(i))
    }

    /// Row-major `[n, k]` values.
    pub fn rows(&self) -> &[f64] {
        self.store.value(self.id).data()
    }

    /// Overwrites a row; for checkpoint restore and tests.
    pub fn set_row(&mut self, index: usize, values: &[f64]) {
        self.store.value_mut(self.id).row_mut(index).copy_from_slice(values);
    }

    pub fn store(&self) -> &ParameterStore {
        &self.store
    }

    pub fn add_row_grad(&mut self, index: usize, grad: &[f64]) {
        for (g, v) in self.store.grad_mut(self.id).row_mut(index).iter_mut().zip(grad) {
            *g += v;
        }
    }

    pub fn sgd_step(&mut self, learning_rate: f64) {
        self.store.sgd_step(learning_rate);
    }

    /// Rows scaled to unit norm.
    pub fn normalized_rows(&self) -> Result<Vec<f64>, TrainError> {
        let mut out = self.rows().to_vec();
        for (i, row) in out.chunks_mut(self.k).enumerate() {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm > NORM_EPSILON) {
                return Err(TrainError::Degenerate(self.names[i].clone()));
            }
            row.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(out)
    }
}

/// Builds an entity table from a seed.
pub fn init_entities<I, S>(entities: I, k: usize, seed: u64) -> Result<EntityEmbeddingTable, TrainError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    EmbeddingTable::init_uniform(entities, k, &mut rng)
}

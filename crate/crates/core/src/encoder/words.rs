use std::collections::HashMap;
use std::io::BufRead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EncoderError;
use crate::numerics::Tensor;

const PADDING_ROW: usize = 0;
const OOV_ROW: usize = 1;
const OOV_SEED: u64 = 0x00_0e_c9_00;
const OOV_BOUND: f64 = 0.01;

/// Frozen pretrained word vectors.
///
/// Row 0 is the all-zero padding row, row 1 the shared OOV vector (drawn once
/// from a fixed seed), rows 2.. the vocabulary. There is no mutable access to
/// the matrix.
#[derive(Debug, Clone)]
pub struct WordEmbeddingTable {
    vocab: HashMap<String, usize>,
    matrix: Vec<f64>,
    d: usize,
}

impl WordEmbeddingTable {
    pub fn new<I>(d: usize, entries: I) -> Result<Self, EncoderError>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        if d == 0 {
            return Err(EncoderError::Config("word dimension must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(OOV_SEED);
        let mut matrix = vec![0.0; d];
        matrix.extend((0..d).map(|_| rng.gen_range(-OOV_BOUND..OOV_BOUND)));
        let mut vocab = HashMap::new();
        for (token, vector) in entries {
            if vector.len() != d {
                return Err(EncoderError::WordDimension {
                    token,
                    expected: d,
                    found: vector.len(),
                });
            }
            if vocab.contains_key(&token) {
                continue;
            }
            vocab.insert(token, matrix.len() / d);
            matrix.extend(vector);
        }
        Ok(Self { vocab, matrix, d })
    }

    /// Reads the common text layout: `token v1 … vd` per line. A leading
    /// `count dim` line is skipped. When `expected_d` is given, any other
    /// dimension is an error.
    pub fn read<R: BufRead>(input: R, expected_d: Option<usize>) -> Result<Self, EncoderError> {
        let mut entries = Vec::new();
        let mut d = expected_d;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else { continue };
            let rest: Vec<&str> = fields.collect();
            if i == 0 && rest.len() == 1 && token.parse::<usize>().is_ok() && rest[0].parse::<usize>().is_ok() {
                let header_d: usize = rest[0].parse().unwrap_or(0);
                if let Some(exp) = expected_d {
                    if header_d != exp {
                        return Err(EncoderError::WordFileDimension {
                            line: 1,
                            expected: exp,
                            found: header_d,
                        });
                    }
                }
                continue;
            }
            let values = rest
                .iter()
                .map(|v| v.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| EncoderError::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            match d {
                Some(exp) if exp != values.len() => {
                    return Err(EncoderError::WordFileDimension {
                        line: i + 1,
                        expected: exp,
                        found: values.len(),
                    })
                }
                None => d = Some(values.len()),
                _ => {}
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(EncoderError::Parse {
                    line: i + 1,
                    message: "non-finite value".into(),
                });
            }
            entries.push((token.to_string(), values));
        }
        let d = d.ok_or_else(|| EncoderError::Config("word vector file is empty".into()))?;
        Self::new(d, entries)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab.len()
    }

    /// Always true: the table is never updated by training.
    pub fn frozen(&self) -> bool {
        true
    }

    pub fn contains(&self, token: &str) -> bool {
        self.vocab.contains_key(token)
    }

    fn row_index(&self, token: &str) -> usize {
        self.vocab.get(token).copied().unwrap_or(OOV_ROW)
    }

    pub fn vector(&self, token: &str) -> &[f64] {
        let r = self.row_index(token);
        &self.matrix[r * self.d..(r + 1) * self.d]
    }

    pub fn oov_vector(&self) -> &[f64] {
        &self.matrix[OOV_ROW * self.d..(OOV_ROW + 1) * self.d]
    }

    pub fn padding_vector(&self) -> &[f64] {
        &self.matrix[PADDING_ROW * self.d..(PADDING_ROW + 1) * self.d]
    }

    /// Raw matrix including the padding and OOV rows.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    /// `[m, d]` encoder input: word vectors for the tokens followed by zero
    /// padding rows.
    pub fn prepare_relation(&self, tokens: &[String], m: usize) -> Result<Tensor, EncoderError> {
        if tokens.is_empty() {
            return Err(EncoderError::EmptyRelation);
        }
        if tokens.len() > m {
            return Err(EncoderError::RelationTooLong { len: tokens.len(), m });
        }
        let mut data = Vec::with_capacity(m * self.d);
        for t in tokens {
            data.extend_from_slice(self.vector(t));
        }
        data.resize(m * self.d, 0.0);
        Ok(Tensor::new(vec![m, self.d], data)?)
    }
}

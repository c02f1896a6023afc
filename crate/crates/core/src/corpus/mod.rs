//! Entity Context Graph construction.
//!
//! A topic document describes one primary entity and mentions a number of
//! secondary entities. Every paragraph is stopword-filtered and split into
//! chunks of at most `m` tokens; each chunk becomes the relation text of a
//! context triple `(primary, chunk, secondary)` for every distinct secondary
//! entity mentioned in that chunk.

mod build;
mod format;
mod spotter;
mod text;

use std::fmt;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use build::{build_ecg, document_from_text, reviews_to_ecg, EcgConfig, Review};
pub use format::{deserialize_ecg, read_ecg, serialize_ecg, write_ecg, ECG_HEADER};
pub use spotter::{spot_mentions, SpotterDictionary};
pub use text::{
    chunk_paragraph, filter_paragraph, remove_stopwords, segment_paragraphs, tokenize, Stoplist, ENGLISH_STOPWORDS,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("document `{document}`: {message}")]
    InvalidDocument { document: String, message: String },
    #[error("dictionary: {0}")]
    Dictionary(String),
    #[error("cannot serialize: {0}")]
    Unserializable(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub entity: String,
    pub start: usize,
    pub end: usize,
}

impl EntityMention {
    pub fn new(entity: impl Into<String>, start: usize, end: usize) -> Self {
        Self {
            entity: entity.into(),
            start,
            end,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Paragraph {
    pub tokens: Vec<String>,
    #[serde(default)]
    pub mentions: Vec<EntityMention>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicDocument {
    pub id: String,
    pub primary_entity: String,
    pub paragraphs: Vec<Paragraph>,
}

impl TopicDocument {
    /// Checks mention spans against their paragraphs.
    pub fn validate(&self) -> Result<(), CorpusError> {
        for (pi, p) in self.paragraphs.iter().enumerate() {
            for m in &p.mentions {
                if m.start >= m.end || m.end > p.tokens.len() {
                    return Err(CorpusError::InvalidDocument {
                        document: self.id.clone(),
                        message: format!(
                            "paragraph {pi}: mention `{}` span {}..{} outside 0..{}",
                            m.entity,
                            m.start,
                            m.end,
                            p.tokens.len()
                        ),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Where a context triple came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Provenance {
    pub document: String,
    pub paragraph: usize,
    pub chunk: usize,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.document, self.paragraph, self.chunk)
    }
}

impl std::str::FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.rsplitn(3, ':');
        let chunk = parts.next().and_then(|c| c.parse().ok());
        let paragraph = parts.next().and_then(|p| p.parse().ok());
        match (parts.next(), paragraph, chunk) {
            (Some(doc), Some(paragraph), Some(chunk)) => Ok(Provenance {
                document: doc.to_string(),
                paragraph,
                chunk,
            }),
            _ => Err(format!("bad provenance `{s}`, expected document:paragraph:chunk")),
        }
    }
}

/// An ECG edge whose relation is free text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextTriple {
    pub head: String,
    pub tail: String,
    pub relation_tokens: Vec<String>,
    pub source: Provenance,
}

/// Counts in the shape of a corpus statistics table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GraphStats {
    pub entities: usize,
    /// Distinct relation texts.
    pub relations: usize,
    pub triples: usize,
}

/// Entity set plus context-triple multiset. Entity order is first-insertion
/// order, which is what embedding rows follow.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntityContextGraph {
    entities: IndexSet<String>,
    triples: Vec<ContextTriple>,
}

impl EntityContextGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_entity(&mut self, entity: impl Into<String>) -> usize {
        self.entities.insert_full(entity.into()).0
    }

    /// Adds a triple, registering head and tail as entities.
    pub fn push(&mut self, triple: ContextTriple) {
        assert!(triple.head != triple.tail, "context triple head equals tail");
        assert!(!triple.relation_tokens.is_empty(), "empty relation text");
        self.entities.insert(triple.head.clone());
        self.entities.insert(triple.tail.clone());
        self.triples.push(triple);
    }

    pub fn entities(&self) -> &IndexSet<String> {
        &self.entities
    }

    pub fn entity_index(&self, entity: &str) -> Option<usize> {
        self.entities.get_index_of(entity)
    }

    pub fn triples(&self) -> &[ContextTriple] {
        &self.triples
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn longest_relation(&self) -> usize {
        self.triples.iter().map(|t| t.relation_tokens.len()).max().unwrap_or(0)
    }

    pub fn stats(&self) -> GraphStats {
        let relations: std::collections::HashSet<&[String]> =
            self.triples.iter().map(|t| t.relation_tokens.as_slice()).collect();
        GraphStats {
            entities: self.entities.len(),
            relations: relations.len(),
            triples: self.triples.len(),
        }
    }

    /// Appends another graph, keeping this graph's entity order first.
    pub fn extend(&mut self, other: EntityContextGraph) {
        for e in other.entities {
            self.entities.insert(e);
        }
        self.triples.extend(other.triples);
    }
}

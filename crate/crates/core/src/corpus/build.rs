use indexmap::IndexSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::text::{chunk_paragraph, filter_paragraph, segment_paragraphs, tokenize};
use super::{
    spot_mentions, ContextTriple, CorpusError, EntityContextGraph, EntityMention, Paragraph, Provenance,
    SpotterDictionary, Stoplist, TopicDocument,
};

/// Documents handed to the worker pool at a time.
const DOCUMENT_BATCH: usize = 256;

#[derive(Debug, Clone)]
pub struct EcgConfig {
    /// Maximum relation length in tokens.
    pub m: usize,
    pub stoplist: Stoplist,
    /// Drop the tail's own mention tokens from its relation text.
    pub remove_mention_tokens: bool,
}

impl EcgConfig {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            stoplist: Stoplist::english(),
            remove_mention_tokens: false,
        }
    }
}

/// Builds a topic document from raw page text by segmenting paragraphs and
/// spotting mentions with a dictionary.
pub fn document_from_text(
    id: impl Into<String>,
    primary_entity: impl Into<String>,
    raw_text: &str,
    dictionary: &SpotterDictionary,
) -> TopicDocument {
    let paragraphs = segment_paragraphs(raw_text)
        .into_iter()
        .map(|tokens| {
            let mentions = spot_mentions(&tokens, dictionary);
            Paragraph { tokens, mentions }
        })
        .collect();
    TopicDocument {
        id: id.into(),
        primary_entity: primary_entity.into(),
        paragraphs,
    }
}

struct DocumentTriples {
    primary: String,
    triples: Vec<ContextTriple>,
}

fn relation_for(chunk: &[String], chunk_start: usize, tail: &str, mentions: &[EntityMention]) -> Vec<String> {
    let chunk_end = chunk_start + chunk.len();
    let mut keep = vec![true; chunk.len()];
    for m in mentions.iter().filter(|m| m.entity == tail) {
        let (s, e) = (m.start.max(chunk_start), m.end.min(chunk_end));
        for k in s..e.max(s) {
            keep[k - chunk_start] = false;
        }
    }
    chunk
        .iter()
        .zip(keep)
        .filter(|&(_, k)| k)
        .map(|(t, _)| t.clone())
        .collect()
}

fn document_triples(doc: &TopicDocument, config: &EcgConfig) -> Result<Option<DocumentTriples>, CorpusError> {
    if doc.primary_entity.trim().is_empty() {
        log::warn!("skipping document `{}`: empty primary entity", doc.id);
        return Ok(None);
    }
    doc.validate()?;
    let primary = &doc.primary_entity;
    let mut triples = Vec::new();
    for (pi, paragraph) in doc.paragraphs.iter().enumerate() {
        let filtered = filter_paragraph(paragraph, &config.stoplist);
        for (ci, chunk) in chunk_paragraph(&filtered.tokens, config.m).into_iter().enumerate() {
            let chunk_start = ci * config.m;
            // a mention belongs to the chunk holding its first token
            let in_chunk: Vec<&EntityMention> = filtered
                .mentions
                .iter()
                .filter(|m| m.start / config.m == ci)
                .collect();
            let mut tails: IndexSet<&str> = IndexSet::new();
            for m in &in_chunk {
                if m.entity != *primary {
                    tails.insert(&m.entity);
                }
            }
            for tail in tails {
                let relation_tokens = if config.remove_mention_tokens {
                    relation_for(&chunk, chunk_start, tail, &filtered.mentions)
                } else {
                    chunk.clone()
                };
                if relation_tokens.is_empty() {
                    continue;
                }
                triples.push(ContextTriple {
                    head: primary.clone(),
                    tail: tail.to_string(),
                    relation_tokens,
                    source: Provenance {
                        document: doc.id.clone(),
                        paragraph: pi,
                        chunk: ci,
                    },
                });
            }
        }
    }
    Ok(Some(DocumentTriples {
        primary: primary.clone(),
        triples,
    }))
}

/// Builds an ECG from topic documents.
///
/// Documents are processed in parallel but merged in input order, so the
/// graph (entity order and triple order) is a pure function of the input.
pub fn build_ecg<I>(documents: I, config: &EcgConfig) -> Result<EntityContextGraph, CorpusError>
where
    I: IntoIterator<Item = TopicDocument>,
{
    assert!(config.m >= 1, "m must be positive");
    let mut graph = EntityContextGraph::new();
    let mut pending = Vec::with_capacity(DOCUMENT_BATCH);
    let flush = |batch: &mut Vec<TopicDocument>, graph: &mut EntityContextGraph| -> Result<(), CorpusError> {
        let results: Vec<_> = batch.par_iter().map(|d| document_triples(d, config)).collect();
        batch.clear();
        for r in results {
            if let Some(doc) = r? {
                graph.add_entity(doc.primary);
                for t in doc.triples {
                    graph.push(t);
                }
            }
        }
        Ok(())
    };
    for doc in documents {
        pending.push(doc);
        if pending.len() == DOCUMENT_BATCH {
            flush(&mut pending, &mut graph)?;
        }
    }
    flush(&mut pending, &mut graph)?;
    Ok(graph)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub user: String,
    pub text: String,
    pub product: String,
}

/// `user, review text, aspect` triples, one per distinct aspect spotted in a
/// review. The relation is the stopword-filtered review truncated to `m`.
pub fn reviews_to_ecg<I>(
    reviews: I,
    aspects: &SpotterDictionary,
    m: usize,
    stoplist: &Stoplist,
) -> Result<EntityContextGraph, CorpusError>
where
    I: IntoIterator<Item = Review>,
{
    assert!(m >= 1, "m must be positive");
    let mut graph = EntityContextGraph::new();
    for (i, review) in reviews.into_iter().enumerate() {
        if review.user.trim().is_empty() {
            log::warn!("skipping review {i}: empty user");
            continue;
        }
        let tokens = tokenize(&review.text);
        let mentions = spot_mentions(&tokens, aspects);
        if mentions.is_empty() {
            continue;
        }
        let filtered = filter_paragraph(&Paragraph { tokens, mentions }, stoplist);
        let mut relation = filtered.tokens;
        relation.truncate(m);
        let mut seen: IndexSet<&str> = IndexSet::new();
        for mention in &filtered.mentions {
            if mention.entity != review.user {
                seen.insert(&mention.entity);
            }
        }
        for aspect in seen {
            graph.push(ContextTriple {
                head: review.user.clone(),
                tail: aspect.to_string(),
                relation_tokens: relation.clone(),
                source: Provenance {
                    document: format!("{}#{i}", review.product),
                    paragraph: 0,
                    chunk: 0,
                },
            });
        }
    }
    Ok(graph)
}

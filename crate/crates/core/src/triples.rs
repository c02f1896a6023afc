//! Labelled KG triples, a relation type covering both labels and free text,
//! and a lookup of known-true triples used for filtering.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::corpus::ContextTriple;

#[derive(Debug, Error)]
pub enum TripleFileError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `(head, relation_label, tail)` from a conventional KG.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KgTriple {
    pub head: String,
    pub relation: String,
    pub tail: String,
}

impl KgTriple {
    pub fn new(head: impl Into<String>, relation: impl Into<String>, tail: impl Into<String>) -> Self {
        Self {
            head: head.into(),
            relation: relation.into(),
            tail: tail.into(),
        }
    }
}

/// Reads `head<TAB>relation<TAB>tail` lines.
pub fn read_kg_triples<R: BufRead>(input: R) -> Result<Vec<KgTriple>, TripleFileError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 3 || fields.iter().any(|f| f.is_empty()) {
            return Err(TripleFileError::Parse {
                line: i + 1,
                message: "expected `head<TAB>relation<TAB>tail`".into(),
            });
        }
        out.push(KgTriple::new(fields[0], fields[1], fields[2]));
    }
    Ok(out)
}

pub fn read_kg_file(path: &Path) -> Result<Vec<KgTriple>, TripleFileError> {
    read_kg_triples(BufReader::new(File::open(path)?))
}

pub fn write_kg_triples<W: Write>(triples: &[KgTriple], mut out: W) -> std::io::Result<()> {
    for t in triples {
        writeln!(out, "{}\t{}\t{}", t.head, t.relation, t.tail)?;
    }
    out.flush()
}

pub fn write_kg_file(triples: &[KgTriple], path: &Path) -> std::io::Result<()> {
    write_kg_triples(triples, BufWriter::new(File::create(path)?))
}

/// A relation is either a KG label or a tokenized relation text.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Relation {
    Label(String),
    Text(Vec<String>),
}

/// Triple in the form the evaluator ranks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinkTriple {
    pub head: String,
    pub relation: Relation,
    pub tail: String,
}

impl From<&KgTriple> for LinkTriple {
    fn from(t: &KgTriple) -> Self {
        Self {
            head: t.head.clone(),
            relation: Relation::Label(t.relation.clone()),
            tail: t.tail.clone(),
        }
    }
}

impl From<&ContextTriple> for LinkTriple {
    fn from(t: &ContextTriple) -> Self {
        Self {
            head: t.head.clone(),
            relation: Relation::Text(t.relation_tokens.clone()),
            tail: t.tail.clone(),
        }
    }
}

/// Known-true `(head, relation, tail)` triples keyed by entity row index.
#[derive(Debug, Clone, Default)]
pub struct KnownTriples {
    by_relation: HashMap<Relation, HashSet<(usize, usize)>>,
}

impl KnownTriples {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, head: usize, relation: Relation, tail: usize) {
        self.by_relation.entry(relation).or_default().insert((head, tail));
    }

    pub fn contains(&self, head: usize, relation: &Relation, tail: usize) -> bool {
        self.by_relation
            .get(relation)
            .is_some_and(|pairs| pairs.contains(&(head, tail)))
    }

    pub fn len(&self) -> usize {
        self.by_relation.values().map(HashSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

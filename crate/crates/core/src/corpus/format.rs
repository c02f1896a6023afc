//! Line-based ECG file.
//!
//! ```text
//! #ecg-v1
//! #entity<TAB>id                                  (one per entity, in graph order)
//! head<TAB>tail<TAB>doc:paragraph:chunk<TAB>tok tok tok
//! ```
//!
//! Files without `#entity` lines are accepted; entities are then taken from
//! the triples in order of appearance.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{ContextTriple, CorpusError, EntityContextGraph, Provenance};

pub const ECG_HEADER: &str = "#ecg-v1";
const ENTITY_PREFIX: &str = "#entity\t";

fn check_field(value: &str, what: &str) -> Result<(), CorpusError> {
    if value.is_empty() || value.contains(['\t', '\n', '\r']) {
        return Err(CorpusError::Unserializable(format!(
            "{what} `{}` is empty or contains tab/newline",
            value.escape_debug()
        )));
    }
    Ok(())
}

pub fn serialize_ecg<W: Write>(graph: &EntityContextGraph, mut out: W) -> Result<(), CorpusError> {
    writeln!(out, "{ECG_HEADER}")?;
    for e in graph.entities() {
        check_field(e, "entity")?;
        writeln!(out, "{ENTITY_PREFIX}{e}")?;
    }
    for t in graph.triples() {
        check_field(&t.head, "head")?;
        check_field(&t.tail, "tail")?;
        let provenance = t.source.to_string();
        check_field(&provenance, "provenance")?;
        for tok in &t.relation_tokens {
            if tok.is_empty() || tok.contains(char::is_whitespace) {
                return Err(CorpusError::Unserializable(format!(
                    "relation token `{}` is empty or contains whitespace",
                    tok.escape_debug()
                )));
            }
        }
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            t.head,
            t.tail,
            provenance,
            t.relation_tokens.join(" ")
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn deserialize_ecg<R: BufRead>(input: R) -> Result<EntityContextGraph, CorpusError> {
    let mut graph = EntityContextGraph::new();
    let mut lines = input.lines().enumerate();
    let header = lines.next().map(|(_, l)| l).transpose()?;
    if header.as_deref().map(str::trim_end) != Some(ECG_HEADER) {
        return Err(CorpusError::Parse {
            line: 1,
            message: format!("missing `{ECG_HEADER}` header"),
        });
    }
    for (i, line) in lines {
        let line = line?;
        let lineno = i + 1;
        let err = |message: String| CorpusError::Parse { line: lineno, message };
        if line.is_empty() {
            continue;
        }
        if let Some(entity) = line.strip_prefix(ENTITY_PREFIX) {
            if entity.is_empty() {
                return Err(err("empty entity identifier".into()));
            }
            graph.add_entity(entity);
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(err(format!("expected 4 tab-separated fields, found {}", fields.len())));
        }
        let (head, tail) = (fields[0], fields[1]);
        if head.is_empty() || tail.is_empty() {
            return Err(err("empty head or tail".into()));
        }
        if head == tail {
            return Err(err(format!("head equals tail (`{head}`)")));
        }
        let source: Provenance = fields[2].parse().map_err(err)?;
        let relation_tokens: Vec<String> = fields[3].split_whitespace().map(str::to_owned).collect();
        if relation_tokens.is_empty() {
            return Err(err("empty relation text".into()));
        }
        graph.push(ContextTriple {
            head: head.to_owned(),
            tail: tail.to_owned(),
            relation_tokens,
            source,
        });
    }
    Ok(graph)
}

pub fn write_ecg(graph: &EntityContextGraph, path: &Path) -> Result<(), CorpusError> {
    serialize_ecg(graph, BufWriter::new(File::create(path)?))
}

pub fn read_ecg(path: &Path) -> Result<EntityContextGraph, CorpusError> {
    deserialize_ecg(BufReader::new(File::open(path)?))
}

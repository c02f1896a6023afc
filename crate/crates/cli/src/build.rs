use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ecg_core::corpus::{
    build_ecg as build_graph, document_from_text, reviews_to_ecg, write_ecg, EcgConfig, EntityContextGraph, Review,
    SpotterDictionary, Stoplist, TopicDocument,
};
use serde::Deserialize;

pub struct BuildArgs {
    pub input: PathBuf,
    pub dictionary: Option<PathBuf>,
    pub m: usize,
    pub stopwords: Option<PathBuf>,
    pub case_fold: bool,
    pub remove_mention_tokens: bool,
    pub out: PathBuf,
}

/// A corpus line: pre-annotated paragraphs or raw page text.
#[derive(Deserialize)]
#[serde(untagged)]
enum CorpusRecord {
    Annotated(TopicDocument),
    Raw {
        id: String,
        primary_entity: String,
        text: String,
    },
}

fn load_stoplist(path: Option<&Path>) -> Result<Stoplist> {
    Ok(match path {
        Some(p) => Stoplist::parse(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?),
        None => Stoplist::english(),
    })
}

fn load_dictionary(path: &Path, case_fold: bool) -> Result<SpotterDictionary> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    SpotterDictionary::parse(&text, case_fold).with_context(|| format!("parsing {}", path.display()))
}

fn json_lines(path: &Path) -> Result<impl Iterator<Item = (usize, std::io::Result<String>)>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(file)
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty())))
}

fn report(graph: &EntityContextGraph, out: &Path) -> Result<()> {
    write_ecg(graph, out).with_context(|| format!("writing {}", out.display()))?;
    let s = graph.stats();
    eprintln!("entities: {}  relations: {}  triples: {}", s.entities, s.relations, s.triples);
    Ok(())
}

pub fn build_ecg(args: &BuildArgs) -> Result<()> {
    let dictionary = args
        .dictionary
        .as_deref()
        .map(|p| load_dictionary(p, args.case_fold))
        .transpose()?;
    let mut config = EcgConfig::new(args.m);
    if args.m == 0 {
        bail!("--m must be at least 1");
    }
    config.stoplist = load_stoplist(args.stopwords.as_deref())?;
    config.remove_mention_tokens = args.remove_mention_tokens;

    let mut documents = Vec::new();
    for (line, text) in json_lines(&args.input)? {
        let text = text.with_context(|| format!("reading {}", args.input.display()))?;
        let record: CorpusRecord =
            serde_json::from_str(&text).with_context(|| format!("{} line {line}", args.input.display()))?;
        documents.push(match record {
            CorpusRecord::Annotated(doc) => doc,
            CorpusRecord::Raw {
                id,
                primary_entity,
                text,
            } => {
                let Some(dict) = &dictionary else {
                    bail!(
                        "{} line {line}: raw text documents need --dictionary",
                        args.input.display()
                    );
                };
                document_from_text(id, primary_entity, &text, dict)
            }
        });
    }
    let graph = build_graph(documents, &config)?;
    report(&graph, &args.out)
}

pub fn build_reviews(input: &Path, aspects: &Path, m: usize, stopwords: Option<&Path>, out: &Path) -> Result<()> {
    if m == 0 {
        bail!("--m must be at least 1");
    }
    let aspects = load_dictionary(aspects, true)?;
    let stoplist = load_stoplist(stopwords)?;
    let mut reviews = Vec::new();
    for (line, text) in json_lines(input)? {
        let text = text.with_context(|| format!("reading {}", input.display()))?;
        let review: Review = serde_json::from_str(&text).with_context(|| format!("{} line {line}", input.display()))?;
        reviews.push(review);
    }
    let graph = reviews_to_ecg(reviews, &aspects, m, &stoplist)?;
    report(&graph, out)
}

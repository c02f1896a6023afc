use ecg_core::corpus::{build_ecg, EcgConfig, EntityMention, Paragraph, Stoplist, TopicDocument};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{check, Verdict};

const WORDS: [&str; 10] = ["the", "of", "and", "rocket", "orbit", "city", "river", "founded", "music", "band"];
const ENTITIES: [&str; 6] = ["E0", "E1", "E2", "E3", "E4", "E5"];

fn random_document(rng: &mut ChaCha8Rng, id: usize) -> TopicDocument {
    let primary = if rng.gen_bool(0.1) {
        String::new()
    } else {
        ENTITIES.choose(rng).unwrap().to_string()
    };
    let paragraphs = (0..rng.gen_range(0..4))
        .map(|_| {
            let len = rng.gen_range(0..16);
            let tokens: Vec<String> = (0..len).map(|_| WORDS.choose(rng).unwrap().to_string()).collect();
            let mut mentions = Vec::new();
            let mut i = 0;
            while i < len {
                if rng.gen_bool(0.3) {
                    let end = rng.gen_range(i + 1..=len.min(i + 3));
                    mentions.push(EntityMention::new(*ENTITIES.choose(rng).unwrap(), i, end));
                    i = end;
                } else {
                    i += 1;
                }
            }
            Paragraph { tokens, mentions }
        })
        .collect();
    TopicDocument {
        id: format!("doc{id}"),
        primary_entity: primary,
        paragraphs,
    }
}

/// `(head, tail, relation tokens, document, paragraph, chunk)`.
type Row = (String, String, Vec<String>, String, usize, usize);

/// Direct enumeration: every (document, paragraph, chunk, secondary entity)
/// combination, in that nesting order.
fn enumerate(docs: &[TopicDocument], m: usize, stop: &[&str], drop_mentions: bool) -> (Vec<String>, Vec<Row>) {
    let mut entities: Vec<String> = Vec::new();
    let see = |e: &str, entities: &mut Vec<String>| {
        if !entities.iter().any(|x| x == e) {
            entities.push(e.to_string());
        }
    };
    let mut rows = Vec::new();
    for doc in docs {
        if doc.primary_entity.is_empty() {
            continue;
        }
        see(&doc.primary_entity, &mut entities);
        for (pi, p) in doc.paragraphs.iter().enumerate() {
            let covered = |i: usize| p.mentions.iter().any(|m| m.start <= i && i < m.end);
            // original positions that survive stopword removal
            let kept: Vec<usize> = (0..p.tokens.len())
                .filter(|&i| covered(i) || !stop.contains(&p.tokens[i].as_str()))
                .collect();
            let n_chunks = kept.len().div_ceil(m);
            for c in 0..n_chunks {
                let positions = &kept[c * m..((c + 1) * m).min(kept.len())];
                let mut tails: Vec<&str> = Vec::new();
                for mention in &p.mentions {
                    let first = kept.iter().position(|&i| i == mention.start).unwrap();
                    if first / m == c && mention.entity != doc.primary_entity && !tails.contains(&mention.entity.as_str()) {
                        tails.push(&mention.entity);
                    }
                }
                for tail in tails {
                    let tokens: Vec<String> = positions
                        .iter()
                        .filter(|&&i| {
                            !(drop_mentions
                                && p.mentions
                                    .iter()
                                    .any(|mm| mm.entity == tail && mm.start <= i && i < mm.end))
                        })
                        .map(|&i| p.tokens[i].clone())
                        .collect();
                    if tokens.is_empty() {
                        continue;
                    }
                    see(&doc.primary_entity, &mut entities);
                    see(tail, &mut entities);
                    rows.push((doc.primary_entity.clone(), tail.to_string(), tokens, doc.id.clone(), pi, c));
                }
            }
        }
    }
    (entities, rows)
}

pub fn extraction_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut total = 0;
    for corpus in 0..20 {
        let docs: Vec<TopicDocument> = (0..rng.gen_range(1..=10)).map(|i| random_document(&mut rng, i)).collect();
        let stop: Vec<&str> = WORDS.iter().copied().filter(|_| rng.gen_bool(0.3)).collect();
        let m = rng.gen_range(1..7);
        let drop_mentions = rng.gen_bool(0.5);
        let mut config = EcgConfig::new(m);
        config.stoplist = Stoplist::parse(&stop.join("\n"));
        config.remove_mention_tokens = drop_mentions;

        let graph = build_ecg(docs.clone(), &config).map_err(|e| e.to_string())?;
        let (entities, rows) = enumerate(&docs, m, &stop, drop_mentions);
        let got_entities: Vec<String> = graph.entities().iter().cloned().collect();
        check!(
            got_entities == entities,
            "corpus {corpus}: entities {got_entities:?}, oracle {entities:?}"
        );
        let got: Vec<Row> = graph
            .triples()
            .iter()
            .map(|t| {
                (
                    t.head.clone(),
                    t.tail.clone(),
                    t.relation_tokens.clone(),
                    t.source.document.clone(),
                    t.source.paragraph,
                    t.source.chunk,
                )
            })
            .collect();
        check!(
            got.len() == rows.len(),
            "corpus {corpus}: {} triples, oracle {}",
            got.len(),
            rows.len()
        );
        for (i, (g, o)) in got.iter().zip(&rows).enumerate() {
            check!(g == o, "corpus {corpus} triple {i}: {g:?}, oracle {o:?}");
        }
        total += rows.len();
    }
    check!(total > 50, "fixtures too small: {total} triples overall");
    Ok(format!("20 random corpora, {total} triples identical to the enumeration"))
}

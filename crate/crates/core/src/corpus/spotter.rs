use std::collections::HashMap;

use super::text::{tokenize, tokenize_preserving_case};
use super::{CorpusError, EntityMention};

/// Surface form → entity map used for greedy longest-match spotting.
#[derive(Debug, Clone)]
pub struct SpotterDictionary {
    forms: HashMap<Vec<String>, String>,
    max_len: usize,
    case_fold: bool,
}

impl SpotterDictionary {
    pub fn new<I, S, E>(entries: I, case_fold: bool) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = (S, E)>,
        S: AsRef<str>,
        E: Into<String>,
    {
        let mut forms: HashMap<Vec<String>, String> = HashMap::new();
        for (surface, entity) in entries {
            let surface = surface.as_ref();
            let key = if case_fold {
                tokenize(surface)
            } else {
                tokenize_preserving_case(surface)
            };
            if key.is_empty() {
                return Err(CorpusError::Dictionary(format!("empty surface form `{surface}`")));
            }
            let entity = entity.into();
            match forms.get(&key) {
                Some(prev) if *prev != entity => {
                    return Err(CorpusError::Dictionary(format!(
                        "surface form `{}` maps to both `{prev}` and `{entity}`",
                        key.join(" ")
                    )));
                }
                _ => {
                    forms.insert(key, entity);
                }
            }
        }
        let max_len = forms.keys().map(Vec::len).max().unwrap_or(0);
        Ok(Self {
            forms,
            max_len,
            case_fold,
        })
    }

    /// Parses `surface<TAB>entity` lines.
    pub fn parse(text: &str, case_fold: bool) -> Result<Self, CorpusError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (surface, entity) = line.split_once('\t').ok_or_else(|| CorpusError::Parse {
                line: i + 1,
                message: "expected `surface<TAB>entity`".into(),
            })?;
            let entity = entity.trim();
            if entity.is_empty() {
                return Err(CorpusError::Parse {
                    line: i + 1,
                    message: "empty entity identifier".into(),
                });
            }
            entries.push((surface.to_string(), entity.to_string()));
        }
        Self::new(entries, case_fold)
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn case_fold(&self) -> bool {
        self.case_fold
    }

    fn lookup(&self, window: &[String]) -> Option<&String> {
        if self.case_fold && window.iter().any(|t| t.chars().any(char::is_uppercase)) {
            let folded: Vec<String> = window.iter().map(|t| t.to_lowercase()).collect();
            self.forms.get(&folded)
        } else {
            self.forms.get(window)
        }
    }
}

/// Greedy left-to-right longest match; returned mentions never overlap.
pub fn spot_mentions(tokens: &[String], dictionary: &SpotterDictionary) -> Vec<EntityMention> {
    let mut mentions = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let longest = dictionary.max_len.min(tokens.len() - i);
        let hit = (1..=longest)
            .rev()
            .find_map(|len| dictionary.lookup(&tokens[i..i + len]).map(|e| (len, e)));
        match hit {
            Some((len, entity)) => {
                mentions.push(EntityMention::new(entity.clone(), i, i + len));
                i += len;
            }
            None => i += 1,
        }
    }
    mentions
}

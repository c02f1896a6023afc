use std::collections::HashSet;

use super::{EntityMention, Paragraph};

/// The classic 127-word English stopword list.
pub const ENGLISH_STOPWORDS: &[&str] = &[
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your", "yours", "yourself",
    "yourselves", "he", "him", "his", "himself", "she", "her", "hers", "herself", "it", "its", "itself",
    "they", "them", "their", "theirs", "themselves", "what", "which", "who", "whom", "this", "that",
    "these", "those", "am", "is", "are", "was", "were", "be", "been", "being", "have", "has", "had",
    "having", "do", "does", "did", "doing", "a", "an", "the", "and", "but", "if", "or", "because", "as",
    "until", "while", "of", "at", "by", "for", "with", "about", "against", "between", "into", "through",
    "during", "before", "after", "above", "below", "to", "from", "up", "down", "in", "out", "on", "off",
    "over", "under", "again", "further", "then", "once", "here", "there", "when", "where", "why", "how",
    "all", "any", "both", "each", "few", "more", "most", "other", "some", "such", "no", "nor", "not",
    "only", "own", "same", "so", "than", "too", "very", "s", "t", "can", "will", "just", "don", "should",
    "now",
];

/// Set of lowercase stopwords.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stoplist(HashSet<String>);

impl Stoplist {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn english() -> Self {
        ENGLISH_STOPWORDS.iter().copied().collect()
    }

    /// One word per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Self {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    }

    pub fn contains(&self, token: &str) -> bool {
        if self.0.contains(token) {
            return true;
        }
        token.chars().any(char::is_uppercase) && self.0.contains(&token.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: AsRef<str>> FromIterator<S> for Stoplist {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(|s| s.as_ref().to_lowercase()).collect())
    }
}

fn strip_punctuation(word: &str) -> &str {
    word.trim_matches(|c: char| !c.is_alphanumeric())
}

/// Whitespace split, edge punctuation stripped, lowercased; empty results dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(strip_punctuation)
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Like [`tokenize`] but keeps case.
pub(crate) fn tokenize_preserving_case(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(strip_punctuation)
        .filter(|w| !w.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Splits raw text into paragraphs on blank lines and tokenizes each one.
/// Paragraphs with no tokens are dropped.
pub fn segment_paragraphs(raw_text: &str) -> Vec<Vec<String>> {
    let mut paragraphs = Vec::new();
    let mut current = String::new();
    for line in raw_text.lines() {
        if line.trim().is_empty() {
            push_paragraph(&mut paragraphs, &current);
            current.clear();
        } else {
            current.push_str(line);
            current.push('\n');
        }
    }
    push_paragraph(&mut paragraphs, &current);
    paragraphs
}

fn push_paragraph(out: &mut Vec<Vec<String>>, text: &str) {
    let tokens = tokenize(text);
    if !tokens.is_empty() {
        out.push(tokens);
    }
}

/// Order-preserving stopword filter.
pub fn remove_stopwords(tokens: &[String], stoplist: &Stoplist) -> Vec<String> {
    tokens.iter().filter(|t| !stoplist.contains(t)).cloned().collect()
}

/// Stopword filter that never removes tokens covered by a mention, and
/// remaps mention spans onto the filtered offsets.
pub fn filter_paragraph(paragraph: &Paragraph, stoplist: &Stoplist) -> Paragraph {
    let n = paragraph.tokens.len();
    let mut protected = vec![false; n];
    for m in &paragraph.mentions {
        for p in &mut protected[m.start.min(n)..m.end.min(n)] {
            *p = true;
        }
    }
    // new_index[i] = number of kept tokens before position i
    let mut new_index = Vec::with_capacity(n + 1);
    let mut tokens = Vec::with_capacity(n);
    for (i, tok) in paragraph.tokens.iter().enumerate() {
        new_index.push(tokens.len());
        if protected[i] || !stoplist.contains(tok) {
            tokens.push(tok.clone());
        }
    }
    new_index.push(tokens.len());
    let mentions = paragraph
        .mentions
        .iter()
        .map(|m| EntityMention {
            entity: m.entity.clone(),
            start: new_index[m.start],
            end: new_index[m.end],
        })
        .collect();
    Paragraph { tokens, mentions }
}

/// Consecutive non-overlapping chunks of at most `m` tokens.
pub fn chunk_paragraph(tokens: &[String], m: usize) -> Vec<Vec<String>> {
    assert!(m >= 1, "chunk length must be positive");
    tokens.chunks(m).map(<[String]>::to_vec).collect()
}

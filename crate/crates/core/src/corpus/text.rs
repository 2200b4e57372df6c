//! Sentence splitting, tokenization and token-sequence preprocessing.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tokens kept even when they appear in the stopword list.
pub const NEGATION_ALLOWLIST: [&str; 5] = ["not", "no", "never", "n't", "bad"];

pub const DEFAULT_PAD: &str = "<pad>";

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");
const DEFAULT_ABBREVIATIONS: &str = include_str!("../../data/abbreviations.txt");

/// A plain-text token list: one token per line, `#` comments and blank lines ignored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordList(BTreeSet<String>);

impl WordList {
    pub fn parse(text: &str) -> Self {
        WordList(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn default_stopwords() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    pub fn default_abbreviations() -> Self {
        Self::parse(DEFAULT_ABBREVIATIONS)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for WordList {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        WordList(iter.into_iter().map(|s| s.into().to_lowercase()).collect())
    }
}

/// One sentence of a review.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub review_id: String,
    pub index: usize,
    pub tokens: Vec<String>,
    pub raw: String,
}

/// Splits review text on `.`, `!` and `?`, guarding abbreviations and decimals.
#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    abbreviations: WordList,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        Self::new(WordList::default_abbreviations())
    }
}

impl SentenceSplitter {
    pub fn new(abbreviations: WordList) -> Self {
        SentenceSplitter { abbreviations }
    }

    /// Raw sentence strings in order; segments without any alphanumeric
    /// character are dropped.
    pub fn split<'a>(&self, text: &'a str) -> Vec<&'a str> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut out = Vec::new();
        let mut start = 0usize;
        let mut i = 0usize;
        while i < chars.len() {
            let (pos, c) = chars[i];
            if !matches!(c, '.' | '!' | '?') {
                i += 1;
                continue;
            }
            if c == '.' {
                let next_is_digit = chars.get(i + 1).is_some_and(|&(_, n)| n.is_ascii_digit());
                if next_is_digit || self.is_abbreviation(&text[start..pos]) {
                    i += 1;
                    continue;
                }
            }
            let mut j = i + 1;
            while j < chars.len() && matches!(chars[j].1, '.' | '!' | '?' | '"' | '\'' | ')') {
                j += 1;
            }
            if j < chars.len() && !chars[j].1.is_whitespace() {
                i = j;
                continue;
            }
            let end = chars.get(j).map_or(text.len(), |&(p, _)| p);
            push_segment(&mut out, &text[start..end]);
            start = end;
            i = j;
        }
        push_segment(&mut out, &text[start..]);
        out
    }

    fn is_abbreviation(&self, before: &str) -> bool {
        let word = before
            .rsplit(char::is_whitespace)
            .next()
            .unwrap_or("")
            .trim_start_matches(|c: char| !c.is_alphanumeric())
            .to_lowercase();
        if word.is_empty() {
            return false;
        }
        // single-letter initials ("J. Smith")
        let single_letter = word.chars().count() == 1 && word.chars().all(char::is_alphabetic);
        single_letter || self.abbreviations.contains(&word)
    }

    /// Splits and tokenizes a review; sentences without tokens are dropped and
    /// the remaining ones numbered from zero.
    pub fn segment(&self, review_id: &str, text: &str) -> Vec<Sentence> {
        self.split(text)
            .into_iter()
            .map(|raw| (raw, tokenize(raw)))
            .filter(|(_, tokens)| !tokens.is_empty())
            .enumerate()
            .map(|(index, (raw, tokens))| Sentence {
                review_id: review_id.to_string(),
                index,
                tokens,
                raw: raw.to_string(),
            })
            .collect()
    }
}

fn push_segment<'a>(out: &mut Vec<&'a str>, seg: &'a str) {
    let seg = seg.trim();
    if seg.chars().any(char::is_alphanumeric) {
        out.push(seg);
    }
}

/// Lowercased word tokens. Contractions ending in `n't` are split into the
/// stem and a separate `n't` token; other clitics (`'s`, `'re`, ...) are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase().replace('\u{2019}', "'");
    let mut tokens = Vec::new();
    for word in lower.split(|c: char| !(c.is_alphanumeric() || c == '\'')) {
        let word = word.trim_matches('\'');
        if word.is_empty() {
            continue;
        }
        if let Some(stem) = word.strip_suffix("n't") {
            let stem = match stem {
                "ca" => "can",
                "wo" => "will",
                "sha" => "shall",
                s => s,
            };
            if !stem.is_empty() {
                tokens.push(stem.to_string());
            }
            tokens.push("n't".to_string());
            continue;
        }
        let base = word.split('\'').next().unwrap_or(word);
        if !base.is_empty() {
            tokens.push(base.to_string());
        }
    }
    tokens
}

/// A fixed-length token sequence: content tokens followed by padding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSeq {
    pub tokens: Vec<String>,
    pub content_len: usize,
}

impl TokenSeq {
    pub fn content(&self) -> &[String] {
        &self.tokens[..self.content_len]
    }

    /// True when every position is padding.
    pub fn is_empty(&self) -> bool {
        self.content_len == 0
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }
}

/// Preprocessing options shared by every sentence of a run.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    pub stopwords: WordList,
    pub pad_token: String,
    pub max_len: usize,
}

impl Preprocessor {
    pub fn new(stopwords: WordList, pad_token: impl Into<String>, max_len: usize) -> Self {
        assert!(max_len >= 1, "max_len must be at least 1");
        Preprocessor {
            stopwords,
            pad_token: pad_token.into(),
            max_len,
        }
    }

    pub fn apply<S: AsRef<str>>(&self, tokens: &[S]) -> TokenSeq {
        preprocess(tokens, &self.stopwords, &self.pad_token, self.max_len)
    }
}

/// Lowercases, drops stopwords (keeping the negation allowlist) and pads or
/// truncates to exactly `max_len` tokens.
pub fn preprocess<S: AsRef<str>>(
    tokens: &[S],
    stopwords: &WordList,
    pad_token: &str,
    max_len: usize,
) -> TokenSeq {
    let mut out: Vec<String> = tokens
        .iter()
        .map(|t| t.as_ref().to_lowercase())
        .filter(|t| !t.is_empty() && t != pad_token)
        .filter(|t| NEGATION_ALLOWLIST.contains(&t.as_str()) || !stopwords.contains(t))
        .take(max_len)
        .collect();
    let content_len = out.len();
    out.resize(max_len, pad_token.to_string());
    TokenSeq {
        tokens: out,
        content_len,
    }
}

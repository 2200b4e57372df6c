use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_POS: &str = include_str!("../../data/pos_lexicon.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PosTag {
    Noun,
    Adj,
    Verb,
    Adv,
    Det,
    Pron,
    Adp,
    Conj,
    Num,
    Other,
}

impl std::str::FromStr for PosTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "NOUN" | "N" | "NN" => PosTag::Noun,
            "ADJ" | "JJ" => PosTag::Adj,
            "VERB" | "V" | "VB" => PosTag::Verb,
            "ADV" | "RB" => PosTag::Adv,
            "DET" | "DT" => PosTag::Det,
            "PRON" | "PRP" => PosTag::Pron,
            "ADP" | "IN" => PosTag::Adp,
            "CONJ" | "CC" => PosTag::Conj,
            "NUM" | "CD" => PosTag::Num,
            "OTHER" | "X" => PosTag::Other,
            other => return Err(format!("unknown tag {other:?}")),
        })
    }
}

/// Lexicon lookup with suffix heuristics for unknown words.
#[derive(Debug, Clone)]
pub struct PosTagger {
    lexicon: HashMap<String, PosTag>,
}

const ADJ_SUFFIXES: [&str; 9] = ["ous", "ful", "ive", "able", "ible", "less", "ish", "ic", "al"];
const NOUN_SUFFIXES: [&str; 10] = [
    "tion", "sion", "ment", "ness", "ity", "ance", "ence", "ship", "ism", "ist",
];

impl PosTagger {
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let mut lexicon = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (tok, tag) = line.split_once('\t').ok_or_else(|| Error::Parse {
                path: path.to_string(),
                line: i + 1,
                message: "expected `token<TAB>tag`".into(),
            })?;
            let tag: PosTag = tag.trim().parse().map_err(|message| Error::Parse {
                path: path.to_string(),
                line: i + 1,
                message,
            })?;
            lexicon.insert(tok.trim().to_lowercase(), tag);
        }
        Ok(PosTagger { lexicon })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn tag(&self, token: &str) -> PosTag {
        if let Some(t) = self.lexicon.get(token) {
            return *t;
        }
        if token.chars().any(|c| c.is_ascii_digit()) {
            return PosTag::Num;
        }
        if token.chars().count() < 3 || !token.chars().all(char::is_alphabetic) {
            return PosTag::Other;
        }
        if token.ends_with("ly") {
            return PosTag::Adv;
        }
        if NOUN_SUFFIXES.iter().any(|s| token.ends_with(s)) {
            return PosTag::Noun;
        }
        if ADJ_SUFFIXES.iter().any(|s| token.ends_with(s)) {
            return PosTag::Adj;
        }
        if token.ends_with("ed") {
            return PosTag::Verb;
        }
        // open-class default
        PosTag::Noun
    }

    pub fn tag_all<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<PosTag> {
        tokens.iter().map(|t| self.tag(t.as_ref())).collect()
    }
}

impl Default for PosTagger {
    fn default() -> Self {
        Self::parse(DEFAULT_POS, "pos_lexicon.tsv").expect("bundled POS lexicon is well-formed")
    }
}

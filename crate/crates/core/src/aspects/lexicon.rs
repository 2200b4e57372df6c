use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AspectCategory;
use crate::error::{Error, Result};

const DEFAULT_CATEGORIES: &str = include_str!("../../data/category_lexicon.tsv");

const EXACT_MATCH: f64 = 1.0;
const STEM_MATCH: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub category: AspectCategory,
    pub term: String,
    pub sense_rank: u8,
    pub weight: f64,
}

/// Weighted synonym lists per aspect category.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryLexicon {
    entries: Vec<(LexiconEntry, String)>,
}

impl CategoryLexicon {
    pub fn new(entries: Vec<LexiconEntry>) -> Self {
        let entries = entries
            .into_iter()
            .filter(|e| e.category != AspectCategory::None)
            .map(|e| {
                let stem = stem(&e.term);
                (e, stem)
            })
            .collect();
        CategoryLexicon { entries }
    }

    /// Parses `category<TAB>term<TAB>sense_rank<TAB>weight` lines.
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_string(),
            line,
            message,
        };
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            let [cat, term, rank, weight] = cols[..] else {
                return Err(err(n, format!("expected 4 columns, found {}", cols.len())));
            };
            let category: AspectCategory = cat.parse().map_err(|e| err(n, e))?;
            if category == AspectCategory::None {
                return Err(err(n, "NONE cannot carry lexicon terms".into()));
            }
            let sense_rank: u8 = rank
                .parse()
                .ok()
                .filter(|r| (1..=3).contains(r))
                .ok_or_else(|| err(n, format!("sense_rank must be 1, 2 or 3, got {rank:?}")))?;
            let weight: f64 = weight
                .parse()
                .ok()
                .filter(|w: &f64| w.is_finite() && *w > 0.0)
                .ok_or_else(|| err(n, format!("weight must be positive, got {weight:?}")))?;
            entries.push(LexiconEntry {
                category,
                term: term.to_lowercase(),
                sense_rank,
                weight,
            });
        }
        if entries.is_empty() {
            return Err(Error::EmptyFile {
                path: path.to_string(),
            });
        }
        Ok(Self::new(entries))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn entries(&self) -> impl Iterator<Item = &LexiconEntry> {
        self.entries.iter().map(|(e, _)| e)
    }

    /// Best match score of `term` against each category's synonyms.
    pub fn scores(&self, term: &str) -> Vec<(AspectCategory, f64)> {
        let term_stem = stem(term);
        let word_stems: Vec<String> = term.split_whitespace().map(stem).collect();
        let mut best = [0.0f64; AspectCategory::COUNT];
        for (e, e_stem) in &self.entries {
            let m = if e.term == term {
                EXACT_MATCH
            } else if *e_stem == term_stem || word_stems.iter().any(|w| w == e_stem) {
                STEM_MATCH
            } else {
                continue;
            };
            let slot = &mut best[e.category.index()];
            *slot = slot.max(e.weight * m);
        }
        AspectCategory::ALL
            .iter()
            .zip(best)
            .filter(|(_, s)| *s > 0.0)
            .map(|(c, s)| (*c, s))
            .collect()
    }
}

impl Default for CategoryLexicon {
    fn default() -> Self {
        Self::parse(DEFAULT_CATEGORIES, "category_lexicon.tsv")
            .expect("bundled category lexicon is well-formed")
    }
}

/// Crude suffix stripper, applied identically to terms and lexicon entries.
pub fn stem(word: &str) -> String {
    let w = word.trim().to_lowercase();
    let n = w.len();
    let cut = |k: usize| w[..n - k].to_string();
    if !w.is_ascii() || n <= 3 {
        return w;
    }
    if w.ends_with("ies") && n > 4 {
        return format!("{}y", &w[..n - 3]);
    }
    if ["ches", "shes", "xes", "sses"].iter().any(|s| w.ends_with(s)) {
        return cut(2);
    }
    if w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us") {
        return cut(1);
    }
    if w.ends_with("ing") && n > 5 {
        return cut(3);
    }
    if w.ends_with("ed") && n > 4 {
        return cut(2);
    }
    w
}

/// Categories with a positive match score, best first (ties in enum order),
/// at most `top_k`; `[None]` when nothing matches.
pub fn categorize_aspect(term: &str, lexicon: &CategoryLexicon, top_k: usize) -> Vec<AspectCategory> {
    let mut scored = lexicon.scores(term);
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let out: Vec<AspectCategory> = scored.into_iter().take(top_k).map(|(c, _)| c).collect();
    if out.is_empty() {
        vec![AspectCategory::None]
    } else {
        out
    }
}

//! Aspect terms: candidate extraction, rule-based mention detection,
//! category assignment, multi-label sentence labeling and per-place
//! popularity.

mod lexicon;
mod pos;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Preprocessor, Sentence, TokenSeq, WordList};
use crate::error::{Error, Result};
use crate::sentiment::{score_sentence, PolarSentence, Polarity, ValenceLexicon};

pub use lexicon::{categorize_aspect, stem, CategoryLexicon, LexiconEntry};
pub use pos::{PosTag, PosTagger};

/// Default corpus-frequency threshold for candidate aspects.
pub const DEFAULT_FREQ_THRESHOLD: usize = 100;
/// Tokens on each side of a mention used for its polarity.
pub const MENTION_WINDOW: usize = 3;
pub const DEFAULT_TOP_K: usize = 3;

/// Words that introduce an owned or offered thing ("has a pool", "with free parking").
const POSSESSIVE_CUES: [&str; 5] = ["has", "have", "had", "having", "with"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AspectCategory {
    Price,
    Food,
    Pet,
    Service,
    Amenities,
    Accessibility,
    Others,
    #[serde(rename = "NONE")]
    None,
}

impl AspectCategory {
    /// Every real category, in canonical order. `None` is excluded.
    pub const ALL: [AspectCategory; 7] = [
        AspectCategory::Price,
        AspectCategory::Food,
        AspectCategory::Pet,
        AspectCategory::Service,
        AspectCategory::Amenities,
        AspectCategory::Accessibility,
        AspectCategory::Others,
    ];
    pub const COUNT: usize = Self::ALL.len();

    /// Position in [`Self::ALL`]; `None` maps to `COUNT`.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            AspectCategory::Price => "Price",
            AspectCategory::Food => "Food",
            AspectCategory::Pet => "Pet",
            AspectCategory::Service => "Service",
            AspectCategory::Amenities => "Amenities",
            AspectCategory::Accessibility => "Accessibility",
            AspectCategory::Others => "Others",
            AspectCategory::None => "NONE",
        }
    }
}

impl fmt::Display for AspectCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for AspectCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let lower = s.trim().to_lowercase();
        if lower == "none" {
            return Ok(AspectCategory::None);
        }
        Self::ALL
            .into_iter()
            .find(|c| c.name().to_lowercase() == lower)
            .ok_or_else(|| format!("unknown aspect category {s:?}"))
    }
}

/// Everything the aspect stage reads besides the corpus.
#[derive(Debug, Clone)]
pub struct AspectResources {
    pub tagger: PosTagger,
    pub valence: ValenceLexicon,
    pub categories: CategoryLexicon,
    pub stopwords: WordList,
    pub top_k: usize,
}

impl Default for AspectResources {
    fn default() -> Self {
        AspectResources {
            tagger: PosTagger::default(),
            valence: ValenceLexicon::default(),
            categories: CategoryLexicon::default(),
            stopwords: WordList::default_stopwords(),
            top_k: DEFAULT_TOP_K,
        }
    }
}

impl AspectResources {
    fn is_candidate_noun(&self, token: &str, tag: PosTag) -> bool {
        tag == PosTag::Noun
            && token.len() >= 2
            && token.chars().all(char::is_alphabetic)
            && !self.stopwords.contains(token)
    }
}

/// Candidate aspect terms with their corpus frequencies.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectVocabulary {
    pub threshold: usize,
    pub terms: BTreeMap<String, usize>,
}

impl AspectVocabulary {
    pub fn contains(&self, term: &str) -> bool {
        self.terms.contains_key(term)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn from_terms<I: IntoIterator<Item = S>, S: Into<String>>(terms: I) -> Self {
        AspectVocabulary {
            threshold: 1,
            terms: terms.into_iter().map(|t| (t.into(), 1)).collect(),
        }
    }
}

/// Counts nouns and adjacent-noun bigrams and keeps those seen at least
/// `threshold` times.
pub fn extract_candidate_aspects<'a, I>(
    sentences: I,
    res: &AspectResources,
    threshold: usize,
) -> AspectVocabulary
where
    I: IntoIterator<Item = &'a Sentence>,
{
    let threshold = threshold.max(1);
    let mut counts: HashMap<String, usize> = HashMap::new();
    for s in sentences {
        let tags = res.tagger.tag_all(&s.tokens);
        let nouns: Vec<bool> = s
            .tokens
            .iter()
            .zip(&tags)
            .map(|(t, &tag)| res.is_candidate_noun(t, tag))
            .collect();
        for i in 0..s.tokens.len() {
            if !nouns[i] {
                continue;
            }
            *counts.entry(s.tokens[i].clone()).or_default() += 1;
            if i + 1 < s.tokens.len() && nouns[i + 1] {
                *counts
                    .entry(format!("{} {}", s.tokens[i], s.tokens[i + 1]))
                    .or_default() += 1;
            }
        }
    }
    AspectVocabulary {
        threshold,
        terms: counts.into_iter().filter(|(_, c)| *c >= threshold).collect(),
    }
}

/// One occurrence of an aspect term in a sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectMention {
    pub review_id: String,
    pub user_id: String,
    pub place_id: String,
    pub sentence_index: usize,
    /// Token index of the term's head word.
    pub position: usize,
    pub term: String,
    pub polarity: Polarity,
    /// Best-matching categories, never empty.
    pub categories: Vec<AspectCategory>,
}

impl AspectMention {
    pub fn primary_category(&self) -> AspectCategory {
        self.categories[0]
    }
}

/// Term and head position of each aspect in a token list.
fn detect_terms(tokens: &[String], vocab: &AspectVocabulary, res: &AspectResources) -> Vec<(String, usize)> {
    let n = tokens.len();
    let tags = res.tagger.tag_all(tokens);
    let mut covered = vec![false; n];
    let mut found: Vec<(String, usize)> = Vec::new();

    // vocabulary hits, bigrams first
    let mut i = 0;
    while i < n {
        if i + 1 < n {
            let bigram = format!("{} {}", tokens[i], tokens[i + 1]);
            if vocab.contains(&bigram) {
                found.push((bigram, i + 1));
                covered[i] = true;
                covered[i + 1] = true;
                i += 2;
                continue;
            }
        }
        if vocab.contains(&tokens[i]) {
            found.push((tokens[i].clone(), i));
            covered[i] = true;
        }
        i += 1;
    }

    let noun_at = |j: usize| res.is_candidate_noun(&tokens[j], tags[j]);

    // noun modified by a run of adjectives containing a valenced one
    for j in 1..n {
        if covered[j] || !noun_at(j) {
            continue;
        }
        let valenced = (1..=3)
            .take_while(|&b| b <= j && tags[j - b] == PosTag::Adj)
            .any(|b| res.valence.valence(&tokens[j - b]).is_some_and(|v| v != 0.0));
        if valenced {
            found.push((tokens[j].clone(), j));
            covered[j] = true;
        }
    }

    // first noun after a possessive cue, skipping up to two modifiers
    for j in 0..n {
        if !POSSESSIVE_CUES.contains(&tokens[j].as_str()) {
            continue;
        }
        let mut k = j + 1;
        let mut skipped = 0;
        while k < n && skipped < 2 && matches!(tags[k], PosTag::Det | PosTag::Adj | PosTag::Num) {
            k += 1;
            skipped += 1;
        }
        if k < n && !covered[k] && noun_at(k) {
            found.push((tokens[k].clone(), k));
            covered[k] = true;
        }
    }

    found.sort_by_key(|(_, p)| *p);
    found
}

/// Polarity of the tokens within [`MENTION_WINDOW`] of `position`.
pub fn window_polarity(tokens: &[String], position: usize, lexicon: &ValenceLexicon) -> Polarity {
    let lo = position.saturating_sub(MENTION_WINDOW);
    let hi = (position + MENTION_WINDOW + 1).min(tokens.len());
    score_sentence(&tokens[lo..hi], lexicon)
}

/// Aspect mentions of one sentence: vocabulary hits, valenced-adjective
/// modifiers and objects of possessive cues.
pub fn apply_extraction_rules(
    sentence: &PolarSentence,
    vocab: &AspectVocabulary,
    res: &AspectResources,
) -> Vec<AspectMention> {
    let tokens = &sentence.sentence.tokens;
    detect_terms(tokens, vocab, res)
        .into_iter()
        .map(|(term, position)| AspectMention {
            review_id: sentence.sentence.review_id.clone(),
            user_id: sentence.user_id.clone(),
            place_id: sentence.place_id.clone(),
            sentence_index: sentence.sentence.index,
            position,
            polarity: window_polarity(tokens, position, &res.valence),
            categories: categorize_aspect(&term, &res.categories, res.top_k),
            term,
        })
        .collect()
}

/// Mentions of every sentence, in sentence order.
pub fn extract_mentions(
    sentences: &[PolarSentence],
    vocab: &AspectVocabulary,
    res: &AspectResources,
) -> Vec<AspectMention> {
    sentences
        .par_iter()
        .map(|s| apply_extraction_rules(s, vocab, res))
        .flatten()
        .collect()
}

/// A preprocessed sentence with its category targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSentence {
    pub review_id: String,
    pub user_id: String,
    pub place_id: String,
    pub index: usize,
    pub seq: TokenSeq,
    /// Never empty; `None` only appears alone.
    pub labels: BTreeSet<AspectCategory>,
    pub polarity: Polarity,
}

impl LabeledSentence {
    pub fn has(&self, cat: AspectCategory) -> bool {
        self.labels.contains(&cat)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSet {
    pub pad_token: String,
    pub sentences: Vec<LabeledSentence>,
}

impl LabeledSet {
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Fraction of sentences labeled `None`.
    pub fn none_share(&self) -> f64 {
        if self.sentences.is_empty() {
            return 0.0;
        }
        let none = self.sentences.iter().filter(|s| s.has(AspectCategory::None)).count();
        none as f64 / self.sentences.len() as f64
    }
}

/// Labels each sentence with the union of its mentions' primary categories.
/// Sentences left empty by preprocessing are dropped.
pub fn label_sentences(
    sentences: &[PolarSentence],
    mentions: &[AspectMention],
    pre: &Preprocessor,
) -> LabeledSet {
    let mut by_sentence: HashMap<(&str, usize), BTreeSet<AspectCategory>> = HashMap::new();
    for m in mentions {
        let cat = m.primary_category();
        if cat != AspectCategory::None {
            by_sentence
                .entry((m.review_id.as_str(), m.sentence_index))
                .or_default()
                .insert(cat);
        }
    }
    let sentences = sentences
        .iter()
        .filter_map(|s| {
            let seq = pre.apply(&s.sentence.tokens);
            if seq.is_empty() {
                return None;
            }
            let labels = by_sentence
                .get(&(s.sentence.review_id.as_str(), s.sentence.index))
                .cloned()
                .unwrap_or_else(|| BTreeSet::from([AspectCategory::None]));
            Some(LabeledSentence {
                review_id: s.sentence.review_id.clone(),
                user_id: s.user_id.clone(),
                place_id: s.place_id.clone(),
                index: s.sentence.index,
                seq,
                labels,
                polarity: s.polarity,
            })
        })
        .collect();
    LabeledSet {
        pad_token: pre.pad_token.clone(),
        sentences,
    }
}

/// Positive-minus-negative mention counts, highest first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectPopularity {
    pub place_id: String,
    pub scores: Vec<(String, i64)>,
}

impl AspectPopularity {
    pub fn get(&self, term: &str) -> Option<i64> {
        self.scores.iter().find(|(t, _)| t == term).map(|(_, s)| *s)
    }
}

fn check_place(place_id: &str, corpus: &Corpus) -> Result<()> {
    if corpus.places.contains_key(place_id) {
        Ok(())
    } else {
        Err(Error::UnknownPlace(place_id.to_string()))
    }
}

/// Per-term popularity over all mentions at a place.
pub fn aspect_popularity(place_id: &str, corpus: &Corpus, mentions: &[AspectMention]) -> Result<AspectPopularity> {
    check_place(place_id, corpus)?;
    let mut scores: BTreeMap<&str, i64> = BTreeMap::new();
    for m in mentions.iter().filter(|m| m.place_id == place_id) {
        *scores.entry(&m.term).or_default() += m.polarity.sign();
    }
    let mut scores: Vec<(String, i64)> = scores.into_iter().map(|(t, s)| (t.to_string(), s)).collect();
    scores.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(AspectPopularity {
        place_id: place_id.to_string(),
        scores,
    })
}

/// Popularity aggregated by each mention's primary category (excluding
/// `None`), highest first with ties in canonical order.
pub fn category_popularity(
    place_id: &str,
    corpus: &Corpus,
    mentions: &[AspectMention],
) -> Result<Vec<(AspectCategory, i64)>> {
    check_place(place_id, corpus)?;
    let mut scores: BTreeMap<AspectCategory, i64> = BTreeMap::new();
    for m in mentions.iter().filter(|m| m.place_id == place_id) {
        let cat = m.primary_category();
        if cat != AspectCategory::None {
            *scores.entry(cat).or_default() += m.polarity.sign();
        }
    }
    let mut out: Vec<(AspectCategory, i64)> = scores.into_iter().collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(out)
}

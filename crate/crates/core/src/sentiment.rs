//! Lexicon-based sentence polarity.
//!
//! A sentence score is the sum of token valences. A valence is sign-flipped
//! when a negation token occurs among the three preceding tokens and scaled by
//! any intensifiers immediately before it. The sum is squashed with
//! `s / sqrt(s^2 + 15)` into a compound score in `[-1, 1]`.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use crate::corpus::{Corpus, Review, Sentence, SentenceSplitter, WordList};
use crate::error::{Error, Result};

pub const NORMALIZATION_ALPHA: f64 = 15.0;
pub const POLARITY_THRESHOLD: f64 = 0.05;
pub const NEGATION_WINDOW: usize = 3;

const DEFAULT_VALENCE: &str = include_str!("../data/valence.tsv");
const DEFAULT_NEGATIONS: &str = include_str!("../data/negations.txt");
const DEFAULT_INTENSIFIERS: &str = include_str!("../data/intensifiers.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolarityLabel {
    Positive,
    Negative,
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Polarity {
    pub compound: f64,
    pub label: PolarityLabel,
}

impl Polarity {
    pub const NEUTRAL: Polarity = Polarity {
        compound: 0.0,
        label: PolarityLabel::Neutral,
    };

    pub fn from_compound(compound: f64) -> Self {
        let compound = compound.clamp(-1.0, 1.0);
        let label = if compound >= POLARITY_THRESHOLD {
            PolarityLabel::Positive
        } else if compound <= -POLARITY_THRESHOLD {
            PolarityLabel::Negative
        } else {
            PolarityLabel::Neutral
        };
        Polarity { compound, label }
    }

    pub fn is_positive(&self) -> bool {
        self.label == PolarityLabel::Positive
    }

    pub fn is_negative(&self) -> bool {
        self.label == PolarityLabel::Negative
    }

    /// +1, -1 or 0.
    pub fn sign(&self) -> i64 {
        match self.label {
            PolarityLabel::Positive => 1,
            PolarityLabel::Negative => -1,
            PolarityLabel::Neutral => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValenceLexicon {
    valences: HashMap<String, f64>,
    negations: HashSet<String>,
    intensifiers: HashMap<String, f64>,
}

fn parse_tsv(text: &str, path: &str) -> Result<Vec<(usize, String, f64)>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        let token = parts.next().unwrap_or("").trim().to_lowercase();
        let value = parts.next().map(str::trim).unwrap_or("");
        let parsed: f64 = value.parse().map_err(|_| Error::Parse {
            path: path.to_string(),
            line: i + 1,
            message: format!("non-numeric value {value:?} for {token:?}"),
        })?;
        if token.is_empty() || !parsed.is_finite() {
            return Err(Error::Parse {
                path: path.to_string(),
                line: i + 1,
                message: "expected `token<TAB>number`".into(),
            });
        }
        rows.push((i + 1, token, parsed));
    }
    Ok(rows)
}

impl ValenceLexicon {
    /// Parses `token<TAB>valence` rows. Duplicate tokens keep the last row.
    pub fn parse_valences(text: &str, path: &str) -> Result<HashMap<String, f64>> {
        let rows = parse_tsv(text, path)?;
        if rows.is_empty() {
            return Err(Error::EmptyFile {
                path: path.to_string(),
            });
        }
        let mut out = HashMap::with_capacity(rows.len());
        for (line, token, v) in rows {
            if !(-4.0..=4.0).contains(&v) {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line,
                    message: format!("valence {v} outside [-4, 4]"),
                });
            }
            if out.insert(token.clone(), v).is_some() {
                log::warn!("{path}:{line}: duplicate token {token:?}, keeping last value");
            }
        }
        Ok(out)
    }

    pub fn new(
        valences: HashMap<String, f64>,
        negations: impl IntoIterator<Item = String>,
        intensifiers: HashMap<String, f64>,
    ) -> Self {
        debug_assert!(intensifiers.values().all(|m| *m > 0.0));
        ValenceLexicon {
            valences,
            negations: negations.into_iter().collect(),
            intensifiers,
        }
    }

    /// Loads a valence TSV and pairs it with the bundled negation and
    /// intensifier lists.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let valences = Self::parse_valences(&text, &path.display().to_string())?;
        let defaults = Self::default();
        Ok(ValenceLexicon {
            valences,
            ..defaults
        })
    }

    pub fn with_negations(mut self, list: &WordList) -> Self {
        self.negations = list_tokens(list);
        self
    }

    pub fn with_intensifiers_tsv(mut self, text: &str, path: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (line, token, m) in parse_tsv(text, path)? {
            if m <= 0.0 {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line,
                    message: format!("intensifier multiplier {m} must be positive"),
                });
            }
            map.insert(token, m);
        }
        self.intensifiers = map;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.valences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valences.is_empty()
    }

    pub fn valence(&self, token: &str) -> Option<f64> {
        self.valences.get(token).copied()
    }

    pub fn is_negation(&self, token: &str) -> bool {
        self.negations.contains(token)
    }

    pub fn intensifier(&self, token: &str) -> Option<f64> {
        self.intensifiers.get(token).copied()
    }

    /// Copy with every valence sign-flipped.
    pub fn negated(&self) -> Self {
        ValenceLexicon {
            valences: self.valences.iter().map(|(k, v)| (k.clone(), -v)).collect(),
            ..self.clone()
        }
    }
}

fn list_tokens(list: &WordList) -> HashSet<String> {
    list.iter().map(str::to_string).collect()
}

impl Default for ValenceLexicon {
    fn default() -> Self {
        let valences = Self::parse_valences(DEFAULT_VALENCE, "valence.tsv")
            .expect("bundled valence lexicon is well-formed");
        let negations = list_tokens(&WordList::parse(DEFAULT_NEGATIONS));
        let base = ValenceLexicon {
            valences,
            negations,
            intensifiers: HashMap::new(),
        };
        base.with_intensifiers_tsv(DEFAULT_INTENSIFIERS, "intensifiers.tsv")
            .expect("bundled intensifier list is well-formed")
    }
}

/// Loads a valence TSV (`token<TAB>valence`).
pub fn load_valence_lexicon(path: &Path) -> Result<ValenceLexicon> {
    ValenceLexicon::load(path)
}

/// Raw valence sum before normalization.
fn valence_sum<S: AsRef<str>>(tokens: &[S], lexicon: &ValenceLexicon) -> f64 {
    let mut sum = 0.0;
    for (i, tok) in tokens.iter().enumerate() {
        let Some(mut v) = lexicon.valence(tok.as_ref()) else {
            continue;
        };
        let mut j = i;
        while j > 0 {
            match lexicon.intensifier(tokens[j - 1].as_ref()) {
                Some(m) => v *= m,
                None => break,
            }
            j -= 1;
        }
        let negated = tokens[i.saturating_sub(NEGATION_WINDOW)..i]
            .iter()
            .any(|t| lexicon.is_negation(t.as_ref()));
        if negated {
            v = -v;
        }
        sum += v;
    }
    sum
}

/// Compound polarity of a token sequence. Unknown tokens (including padding)
/// contribute nothing.
pub fn score_sentence<S: AsRef<str>>(tokens: &[S], lexicon: &ValenceLexicon) -> Polarity {
    let s = valence_sum(tokens, lexicon);
    if s == 0.0 {
        return Polarity::NEUTRAL;
    }
    Polarity::from_compound(s / (s * s + NORMALIZATION_ALPHA).sqrt())
}

/// Compound score implied by a star rating: 5 -> 1.0, 4 -> 0.5, 3 -> 0, ...
fn rating_polarity(rating: Option<u8>) -> Polarity {
    match rating {
        Some(r) => Polarity::from_compound((f64::from(r) - 3.0) / 2.0),
        None => Polarity::NEUTRAL,
    }
}

/// Neutral sentences inherit the sign of the review rating; sentences with a
/// lexicon polarity keep it.
pub fn reconcile_polarity(review: &Review, sentence_polarities: &[Polarity]) -> Vec<Polarity> {
    let fallback = rating_polarity(review.rating);
    sentence_polarities
        .iter()
        .map(|p| {
            if p.label == PolarityLabel::Neutral {
                fallback
            } else {
                *p
            }
        })
        .collect()
}

/// A review sentence with its reconciled polarity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarSentence {
    pub user_id: String,
    pub place_id: String,
    pub sentence: Sentence,
    pub lexicon_polarity: Polarity,
    pub polarity: Polarity,
}

/// Splits, scores and reconciles every review of the corpus, in review order.
pub fn polar_sentences(
    corpus: &Corpus,
    splitter: &SentenceSplitter,
    lexicon: &ValenceLexicon,
) -> Vec<PolarSentence> {
    corpus
        .reviews
        .par_iter()
        .map(|review| {
            let sentences = splitter.segment(&review.review_id, &review.text);
            let raw: Vec<Polarity> = sentences
                .iter()
                .map(|s| score_sentence(&s.tokens, lexicon))
                .collect();
            let reconciled = reconcile_polarity(review, &raw);
            sentences
                .into_iter()
                .zip(raw)
                .zip(reconciled)
                .map(|((sentence, lexicon_polarity), polarity)| PolarSentence {
                    user_id: review.user_id.clone(),
                    place_id: review.place_id.clone(),
                    sentence,
                    lexicon_polarity,
                    polarity,
                })
                .collect::<Vec<_>>()
        })
        .flatten()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lex(pairs: &[(&str, f64)]) -> ValenceLexicon {
        ValenceLexicon::new(
            pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            ["not", "n't", "never", "no"].map(String::from),
            HashMap::from([("very".to_string(), 1.3)]),
        )
    }

    fn review(rating: Option<u8>) -> Review {
        Review {
            review_id: "r".into(),
            user_id: "u".into(),
            place_id: "p".into(),
            rating,
            text: String::new(),
            timestamp: chrono::DateTime::UNIX_EPOCH,
            extra: Default::default(),
        }
    }

    #[test]
    fn loads_tsv_and_reports_bad_rows() {
        let m = ValenceLexicon::parse_valences("good\t1.9\nbad\t-2.5\n", "x").unwrap();
        assert_eq!(m.len(), 2);
        let m = ValenceLexicon::parse_valences("good\t1.9\ngood\t2.0\nbad\t-1\n", "x").unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m["good"], 2.0);
        match ValenceLexicon::parse_valences("bad\t-1\ngood\tx\n", "lex.tsv") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            ValenceLexicon::parse_valences("", "e"),
            Err(Error::EmptyFile { .. })
        ));
    }

    #[test]
    fn load_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.tsv");
        std::fs::write(&path, "good\t1.9\nbad\t-2.5\n").unwrap();
        let lex = load_valence_lexicon(&path).unwrap();
        assert_eq!(lex.len(), 2);
        assert!(lex.is_negation("not"));
    }

    #[test]
    fn no_hits_is_neutral() {
        let p = score_sentence(&["food", "table"], &lex(&[("great", 3.1)]));
        assert_eq!(p, Polarity::NEUTRAL);
    }

    #[test]
    fn single_positive_hit() {
        let p = score_sentence(&["great", "food"], &lex(&[("great", 3.1)]));
        let expected = 3.1 / (3.1f64 * 3.1 + 15.0).sqrt();
        assert!((p.compound - expected).abs() < 1e-12);
        assert!((p.compound - 0.625).abs() < 1e-3);
        assert_eq!(p.label, PolarityLabel::Positive);
    }

    #[test]
    fn negation_flips() {
        let p = score_sentence(&["not", "good"], &lex(&[("good", 1.9)]));
        assert!(p.compound < 0.0);
        assert_eq!(p.label, PolarityLabel::Negative);
        // outside the three-token window
        let p = score_sentence(&["not", "a", "b", "c", "good"], &lex(&[("good", 1.9)]));
        assert!(p.compound > 0.0);
    }

    #[test]
    fn intensifier_scales_next_valence() {
        let l = lex(&[("good", 1.9)]);
        let plain = valence_sum(&["good"], &l);
        let boosted = valence_sum(&["very", "good"], &l);
        assert!((boosted - plain * 1.3).abs() < 1e-12);
    }

    #[test]
    fn thresholds() {
        assert_eq!(Polarity::from_compound(0.05).label, PolarityLabel::Positive);
        assert_eq!(Polarity::from_compound(0.049).label, PolarityLabel::Neutral);
        assert_eq!(Polarity::from_compound(-0.05).label, PolarityLabel::Negative);
    }

    #[test]
    fn reconcile_rules() {
        let neutral = Polarity::NEUTRAL;
        let neg = Polarity::from_compound(-0.6);
        let out = reconcile_polarity(&review(Some(5)), &[neutral, neg]);
        assert_eq!(out[0].label, PolarityLabel::Positive);
        assert_eq!(out[1], neg);
        let out = reconcile_polarity(&review(None), &[neutral]);
        assert_eq!(out[0].label, PolarityLabel::Neutral);
        assert_eq!(reconcile_polarity(&review(Some(3)), &[neutral])[0].label, PolarityLabel::Neutral);
        assert_eq!(reconcile_polarity(&review(Some(2)), &[neutral])[0].label, PolarityLabel::Negative);
    }

    #[test]
    fn bundled_lexicon_loads() {
        let l = ValenceLexicon::default();
        assert!(l.valence("great").unwrap() > 0.0);
        assert!(l.is_negation("n't"));
        assert!(l.intensifier("very").is_some());
    }

    fn token_strategy() -> impl Strategy<Value = Vec<String>> {
        let vocab = ["good", "bad", "great", "not", "very", "food", "never", "awful"];
        prop::collection::vec(prop::sample::select(vocab.to_vec()), 0..12)
            .prop_map(|v| v.into_iter().map(String::from).collect())
    }

    proptest! {
        #[test]
        fn compound_is_odd_under_lexicon_negation(tokens in token_strategy()) {
            let l = lex(&[("good", 1.9), ("bad", -2.5), ("great", 3.1), ("awful", -2.0)]);
            let a = score_sentence(&tokens, &l).compound;
            let b = score_sentence(&tokens, &l.negated()).compound;
            prop_assert!((a + b).abs() < 1e-12);
        }

        #[test]
        fn compound_is_bounded(tokens in token_strategy()) {
            let l = lex(&[("good", 4.0), ("great", 4.0), ("bad", -4.0)]);
            prop_assert!(score_sentence(&tokens, &l).compound.abs() <= 1.0);
        }

        #[test]
        fn reconcile_keeps_lexicon_polarity(c in -1.0f64..1.0, rating in prop::option::of(1u8..=5)) {
            let p = Polarity::from_compound(c);
            let out = reconcile_polarity(&review(rating), &[p])[0];
            if p.label != PolarityLabel::Neutral {
                prop_assert_eq!(out, p);
            }
        }
    }
}

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::SparseVec;
use super::vectors::{build_feature_vector, AspectProfiles, EntityVectors, FeatureVector};
use crate::aspects::AspectCategory;
use crate::corpus::{CheckInLog, Corpus};
use crate::error::{Error, Result};
use crate::textcnn::ClassifiedSentence;

/// Everything needed to encode a (user, place) pair as `[ue | le | fe]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpace {
    pub vectors: EntityVectors,
    /// Sorted venue-category universe; fixes the `r_cat` block layout.
    pub venue_categories: Vec<String>,
    pub features: BTreeMap<String, FeatureVector>,
    pub eps_km: f64,
}

impl FeatureSpace {
    pub fn new(corpus: &Corpus, log: &CheckInLog, vectors: EntityVectors, eps_km: f64) -> Self {
        let venue_categories: Vec<String> = corpus
            .places
            .values()
            .map(|p| p.category().to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let features = vectors
            .users
            .keys()
            .map(|u| (u.clone(), build_feature_vector(u, log, corpus, eps_km)))
            .collect();
        FeatureSpace {
            vectors,
            venue_categories,
            features,
            eps_km,
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.vectors.dim + self.venue_categories.len() + 2
    }

    pub fn knows_user(&self, user: &str) -> bool {
        self.vectors.users.contains_key(user)
    }

    pub fn row(&self, user: &str, place: &str) -> Result<SparseVec> {
        let ue = self
            .vectors
            .users
            .get(user)
            .ok_or_else(|| Error::ColdStart(user.to_string()))?;
        let le = self
            .vectors
            .places
            .get(place)
            .ok_or_else(|| Error::UnknownPlace(place.to_string()))?;
        let d = self.vectors.dim;
        for v in [ue, le] {
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, actual: v.len() });
            }
        }
        let mut x = Vec::with_capacity(self.dim());
        x.extend_from_slice(ue);
        x.extend_from_slice(le);
        let fe = &self.features[user];
        x.extend(
            self.venue_categories
                .iter()
                .map(|c| fe.r_cat.get(c).copied().unwrap_or(0.0)),
        );
        x.push(fe.r_soc);
        x.push(fe.r_dist);
        Ok(SparseVec::from_dense(&x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRow {
    pub user_id: String,
    pub place_id: String,
    pub x: SparseVec,
    pub y: u8,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub dim: usize,
    pub rows: Vec<DesignRow>,
}

impl DesignMatrix {
    pub fn training_rows(&self) -> Vec<(SparseVec, u8)> {
        self.rows.iter().map(|r| (r.x.clone(), r.y)).collect()
    }

    /// One row per line: `index:value` pairs then the target.
    pub fn to_sparse_text(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            for (i, v) in &r.x.entries {
                let _ = write!(out, "{i}:{v} ");
            }
            let _ = writeln!(out, "{}", r.y);
        }
        out
    }
}

/// Sum of sentence signs over the user's preferred categories at one place.
fn preferred_polarity(sentences: &[&ClassifiedSentence], preferred: &BTreeSet<AspectCategory>) -> i64 {
    sentences
        .iter()
        .map(|s| s.polarity.sign() * s.categories.intersection(preferred).count() as i64)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingConfig {
    /// Unvisited places sampled per positive row.
    pub neg_ratio: f64,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig { neg_ratio: 1.0, seed: 7 }
    }
}

/// One row per visited (user, place): `y = 0` when the user's own sentences
/// about the place are net negative on the user's preferred categories.
/// Unvisited places are sampled as extra `y = 0` rows. Rows are sorted by
/// (user, place).
pub fn assemble_design_matrix(
    corpus: &Corpus,
    log: &CheckInLog,
    classified: &[ClassifiedSentence],
    profiles: &AspectProfiles,
    space: &FeatureSpace,
    sampling: &SamplingConfig,
) -> Result<DesignMatrix> {
    let mut by_pair: BTreeMap<(&str, &str), Vec<&ClassifiedSentence>> = BTreeMap::new();
    for s in classified {
        by_pair.entry((&s.user_id, &s.place_id)).or_default().push(s);
    }
    let places: Vec<&String> = corpus.places.keys().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let mut rows = Vec::new();
    for user in space.vectors.users.keys() {
        let preferred = profiles.preferred(user);
        let visited: BTreeSet<&str> = log.visited(user).map(|(p, _)| p).collect();
        let mut user_rows = Vec::new();
        let mut positives = 0usize;
        for &place in &visited {
            let sentences = by_pair.get(&(user.as_str(), place)).map_or(&[][..], Vec::as_slice);
            let negative = !preferred.is_empty() && preferred_polarity(sentences, &preferred) < 0;
            let y = u8::from(!negative);
            positives += usize::from(y);
            user_rows.push((place.to_string(), y));
        }
        let unvisited: Vec<&String> = places.iter().copied().filter(|p| !visited.contains(p.as_str())).collect();
        let want = ((positives as f64) * sampling.neg_ratio).round() as usize;
        for p in unvisited.choose_multiple(&mut rng, want.min(unvisited.len())) {
            user_rows.push(((*p).clone(), 0));
        }
        user_rows.sort();
        for (place, y) in user_rows {
            rows.push(DesignRow {
                x: space.row(user, &place)?,
                user_id: user.clone(),
                place_id: place,
                y,
            });
        }
    }
    Ok(DesignMatrix { dim: space.dim(), rows })
}

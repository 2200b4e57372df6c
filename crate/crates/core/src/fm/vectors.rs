use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::aspects::{AspectCategory, LabeledSet};
use crate::corpus::{CheckInLog, Corpus};
use crate::textcnn::{CategoryModels, ClassifiedSentence};

pub const ASPECT_DIM: usize = 2 * AspectCategory::COUNT;

pub fn pos_slot(c: AspectCategory) -> usize {
    2 * c.index()
}

pub fn neg_slot(c: AspectCategory) -> usize {
    2 * c.index() + 1
}

/// Interleaved `(positive, negative)` shares per category. The denominator is
/// the number of (sentence, category) assignments other than `None`.
pub fn aspect_vector<'a, I: IntoIterator<Item = &'a ClassifiedSentence>>(sentences: I) -> Vec<f64> {
    let mut v = vec![0.0; ASPECT_DIM];
    let mut total = 0usize;
    for s in sentences {
        for &c in s.categories.iter().filter(|c| **c != AspectCategory::None) {
            total += 1;
            if s.polarity.is_positive() {
                v[pos_slot(c)] += 1.0;
            } else if s.polarity.is_negative() {
                v[neg_slot(c)] += 1.0;
            }
        }
    }
    if total > 0 {
        v.iter_mut().for_each(|x| *x /= total as f64);
    }
    v
}

/// Positive-minus-negative share of one category.
pub fn net(v: &[f64], c: AspectCategory) -> f64 {
    v[pos_slot(c)] - v[neg_slot(c)]
}

/// Category-sentiment histograms of users and places.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AspectProfiles {
    pub users: BTreeMap<String, Vec<f64>>,
    pub places: BTreeMap<String, Vec<f64>>,
}

impl AspectProfiles {
    pub fn build(classified: &[ClassifiedSentence]) -> Self {
        let mut by_user: BTreeMap<&str, Vec<&ClassifiedSentence>> = BTreeMap::new();
        let mut by_place: BTreeMap<&str, Vec<&ClassifiedSentence>> = BTreeMap::new();
        for s in classified {
            by_user.entry(&s.user_id).or_default().push(s);
            by_place.entry(&s.place_id).or_default().push(s);
        }
        let build = |m: BTreeMap<&str, Vec<&ClassifiedSentence>>| {
            m.into_iter()
                .map(|(k, ss)| (k.to_string(), aspect_vector(ss)))
                .collect()
        };
        AspectProfiles {
            users: build(by_user),
            places: build(by_place),
        }
    }

    /// Categories whose positive share exceeds the user's mean positive share.
    pub fn preferred(&self, user: &str) -> BTreeSet<AspectCategory> {
        self.users.get(user).map(|v| preferred_categories(v)).unwrap_or_default()
    }
}

pub fn preferred_categories(v: &[f64]) -> BTreeSet<AspectCategory> {
    let mean = AspectCategory::ALL.iter().map(|&c| v[pos_slot(c)]).sum::<f64>() / AspectCategory::COUNT as f64;
    AspectCategory::ALL
        .into_iter()
        .filter(|&c| v[pos_slot(c)] > mean)
        .collect()
}

/// How user and place vectors are formed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorMode {
    /// Category-sentiment histogram.
    #[default]
    CategorySentiment,
    /// Mean pooled classifier features, concatenated over categories.
    PooledCnn,
}

/// The `ue` and `le` blocks of the design rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EntityVectors {
    pub dim: usize,
    pub users: BTreeMap<String, Vec<f64>>,
    pub places: BTreeMap<String, Vec<f64>>,
}

impl EntityVectors {
    /// Histogram vectors; corpus places without classified sentences get zeros.
    pub fn from_profiles(profiles: &AspectProfiles, corpus: &Corpus) -> Self {
        let mut places = profiles.places.clone();
        for p in corpus.places.keys() {
            places.entry(p.clone()).or_insert_with(|| vec![0.0; ASPECT_DIM]);
        }
        EntityVectors {
            dim: ASPECT_DIM,
            users: profiles.users.clone(),
            places,
        }
    }

    /// Mean of each sentence's pooled features across all category models.
    pub fn pooled(models: &CategoryModels, labeled: &LabeledSet, corpus: &Corpus) -> Self {
        let dim: usize = models.models.iter().map(|m| m.pooled_dim()).sum();
        let mut users: BTreeMap<String, (Vec<f64>, usize)> = BTreeMap::new();
        let mut places: BTreeMap<String, (Vec<f64>, usize)> = BTreeMap::new();
        for s in &labeled.sentences {
            let f: Vec<f64> = models.models.iter().flat_map(|m| m.features(&s.seq)).collect();
            for (map, key) in [(&mut users, &s.user_id), (&mut places, &s.place_id)] {
                let (acc, n) = map.entry(key.clone()).or_insert_with(|| (vec![0.0; dim], 0));
                acc.iter_mut().zip(&f).for_each(|(a, b)| *a += b);
                *n += 1;
            }
        }
        let mean = |m: BTreeMap<String, (Vec<f64>, usize)>| -> BTreeMap<String, Vec<f64>> {
            m.into_iter()
                .map(|(k, (v, n))| (k, v.into_iter().map(|x| x / n as f64).collect()))
                .collect()
        };
        let mut places = mean(places);
        for p in corpus.places.keys() {
            places.entry(p.clone()).or_insert_with(|| vec![0.0; dim]);
        }
        EntityVectors {
            dim,
            users: mean(users),
            places,
        }
    }
}

/// Context ratios of one user's check-ins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Check-in share per venue category.
    pub r_cat: BTreeMap<String, f64>,
    /// Share of check-ins at places a friend visited first.
    pub r_soc: f64,
    /// Share of check-ins within `eps_km` of the home anchor.
    pub r_dist: f64,
    pub eps_km: f64,
}

pub fn build_feature_vector(user: &str, log: &CheckInLog, corpus: &Corpus, eps_km: f64) -> FeatureVector {
    let total = log.total(user);
    let mut fv = FeatureVector {
        r_cat: BTreeMap::new(),
        r_soc: 0.0,
        r_dist: 0.0,
        eps_km,
    };
    if total == 0 {
        return fv;
    }
    let t = total as f64;
    let anchor = corpus.home_anchor(user);
    for (place, count) in log.visited(user) {
        let p = corpus.places.get(place);
        let cat = p.map_or("unknown", |p| p.category());
        *fv.r_cat.entry(cat.to_string()).or_default() += count as f64 / t;
        let near = match (anchor, p.and_then(|p| p.coordinates)) {
            (Some(a), Some(c)) => a.distance_km(&c) <= eps_km,
            _ => false,
        };
        if near {
            fv.r_dist += count as f64 / t;
        }
    }
    let social: BTreeSet<&str> = log.social_places(user).collect();
    fv.r_soc = social.iter().map(|p| log.visits(user, p)).sum::<usize>() as f64 / t;
    fv
}

//! Seeded review corpora with planted user preferences and place profiles.
//!
//! Every place excels at one category, is liked for two more and disliked
//! for the remaining three. Places of one venue type mostly share the same
//! liked pair, the first of which draws more remarks. Every user cares most
//! about one category, visits places that excel at it most of the time, and
//! always comments on it.

use std::collections::BTreeMap;
use std::io::{BufRead, Cursor};

use chrono::{Duration, TimeZone, Utc};
use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand::seq::IndexedRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::aspects::AspectCategory;
use crate::config::RunConfig;
use crate::corpus::{ingest_reader, Corpus, IngestOptions};
use crate::error::Result;

/// Categories that receive planted terms. `Others` stays unused.
pub const PLANTED: [AspectCategory; 6] = [
    AspectCategory::Price,
    AspectCategory::Food,
    AspectCategory::Pet,
    AspectCategory::Service,
    AspectCategory::Amenities,
    AspectCategory::Accessibility,
];

fn terms(c: AspectCategory) -> &'static [&'static str] {
    match c {
        AspectCategory::Price => &["price", "cost", "deal", "bill", "fee"],
        AspectCategory::Food => &["pizza", "pasta", "soup", "steak", "coffee"],
        AspectCategory::Pet => &["dog", "puppy", "kitten", "pet", "leash"],
        AspectCategory::Service => &["staff", "waiter", "service", "manager", "host"],
        AspectCategory::Amenities => &["parking", "wifi", "pool", "gym", "spa"],
        AspectCategory::Accessibility => &["wheelchair", "ramp", "elevator", "subway", "location"],
        _ => &[],
    }
}

const PRAISE: [&str; 6] = ["great", "excellent", "amazing", "wonderful", "fantastic", "perfect"];
const COMPLAINT: [&str; 5] = ["terrible", "awful", "horrible", "poor", "disappointing"];
const FILLER: [&str; 4] = [
    "We went there on a weekend.",
    "My friends came along this time.",
    "It was our second visit.",
    "We stayed for an hour.",
];
/// Venue type per planted category, in `PLANTED` order, so places sharing a
/// venue type also share a specialty.
const VENUES: [&str; 6] = ["market", "restaurant", "pet_cafe", "bistro", "hotel", "station"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub users: usize,
    pub places: usize,
    pub reviews: usize,
    /// Chance that a visit goes to a place excelling at the user's category.
    pub focus: f64,
    /// Chance of an extra remark, drawn with weights 1 (specialty), 4 and 2
    /// (liked pair) and 0.5 (each disliked category).
    pub remark: f64,
    /// Chance that a place copies its venue type's liked pair.
    pub conformity: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            users: 100,
            places: 60,
            reviews: 2000,
            focus: 0.8,
            remark: 0.8,
            conformity: 0.75,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceProfile {
    pub specialty: AspectCategory,
    pub liked: Vec<AspectCategory>,
    pub disliked: Vec<AspectCategory>,
}

impl PlaceProfile {
    pub fn likes(&self, c: AspectCategory) -> bool {
        c == self.specialty || self.liked.contains(&c)
    }

    fn remark_weights(&self) -> Vec<(AspectCategory, f64)> {
        let mut w = vec![(self.specialty, 1.0), (self.liked[0], 4.0), (self.liked[1], 2.0)];
        w.extend(self.disliked.iter().map(|&c| (c, 0.5)));
        w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticData {
    pub jsonl: String,
    /// Each user's planted top category.
    pub users: BTreeMap<String, AspectCategory>,
    pub places: BTreeMap<String, PlaceProfile>,
}

impl SyntheticData {
    pub fn corpus(&self) -> Result<Corpus> {
        Ok(ingest_reader(Cursor::new(self.jsonl.as_bytes()), "synthetic", &IngestOptions::default())?.corpus)
    }

    pub fn lines(&self) -> impl Iterator<Item = String> + '_ {
        Cursor::new(self.jsonl.as_bytes()).lines().map_while(std::io::Result::ok)
    }
}

/// Run settings sized for generated corpora: a small classifier and an
/// aspect frequency threshold matched to 2,000 reviews.
pub fn desk_config(seed: u64) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.freq_threshold = 30;
    cfg.cnn.dim = 16;
    cfg.cnn.filters = 8;
    cfg.cnn.max_len = 12;
    cfg.cnn_train.epochs = 12;
    cfg.cnn_train.lr = 0.3;
    cfg.fm.epochs = 20;
    cfg.with_seed(seed)
}

fn sentence(rng: &mut ChaCha8Rng, c: AspectCategory, positive: bool) -> String {
    let term = terms(c).choose(rng).expect("planted category");
    let adj = if positive { PRAISE.choose(rng) } else { COMPLAINT.choose(rng) }.expect("non-empty");
    format!("The {term} was {adj}.")
}

pub fn generate(cfg: &SyntheticConfig) -> SyntheticData {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let place_ids: Vec<String> = (0..cfg.places).map(|i| format!("P{i:03}")).collect();
    let mut places = BTreeMap::new();
    let mut by_specialty: BTreeMap<AspectCategory, Vec<usize>> = BTreeMap::new();
    let others_of = |c: AspectCategory| -> Vec<AspectCategory> { PLANTED.iter().copied().filter(|&o| o != c).collect() };
    let shared: BTreeMap<AspectCategory, Vec<AspectCategory>> = PLANTED
        .iter()
        .map(|&c| {
            let mut o = others_of(c);
            o.shuffle(&mut rng);
            (c, o)
        })
        .collect();
    for (i, id) in place_ids.iter().enumerate() {
        let specialty = PLANTED[i % PLANTED.len()];
        let mut others = if rng.random::<f64>() < cfg.conformity {
            shared[&specialty].clone()
        } else {
            let mut o = others_of(specialty);
            o.shuffle(&mut rng);
            o
        };
        let disliked = others.split_off(2);
        by_specialty.entry(specialty).or_default().push(i);
        places.insert(
            id.clone(),
            PlaceProfile {
                specialty,
                liked: others,
                disliked,
            },
        );
    }
    // within a specialty group, earlier places draw more visits
    let group_weights: BTreeMap<AspectCategory, WeightedIndex<f64>> = by_specialty
        .iter()
        .map(|(c, idx)| {
            let w: Vec<f64> = (0..idx.len()).map(|r| 1.0 / (r as f64 + 2.0)).collect();
            (*c, WeightedIndex::new(w).expect("positive weights"))
        })
        .collect();
    let coords: Vec<(f64, f64)> = (0..cfg.places)
        .map(|_| (40.0 + rng.random_range(-0.2..0.2), -75.0 + rng.random_range(-0.2..0.2)))
        .collect();

    let mut users = BTreeMap::new();
    let mut lines = Vec::with_capacity(cfg.reviews);
    let base = Utc.with_ymd_and_hms(2017, 1, 1, 12, 0, 0).single().expect("valid date");
    let per_user = cfg.reviews / cfg.users.max(1);
    let extra = cfg.reviews % cfg.users.max(1);
    let mut review_no = 0usize;
    for u in 0..cfg.users {
        let uid = format!("U{u:03}");
        let top = PLANTED[u % PLANTED.len()];
        users.insert(uid.clone(), top);
        let count = per_user + usize::from(u < extra);
        for k in 0..count {
            let p = if rng.random::<f64>() < cfg.focus {
                by_specialty[&top][group_weights[&top].sample(&mut rng)]
            } else {
                rng.random_range(0..cfg.places)
            };
            let pid = &place_ids[p];
            let profile = &places[pid];
            let mut text = vec![sentence(&mut rng, profile.specialty, true)];
            text.push(sentence(&mut rng, top, profile.likes(top)));
            if rng.random::<f64>() < cfg.remark {
                let c = profile.remark_weights().choose_weighted(&mut rng, |(_, w)| *w).expect("positive weights").0;
                text.push(sentence(&mut rng, c, profile.likes(c)));
            }
            if rng.random::<f64>() < 0.5 {
                text.push(FILLER.choose(&mut rng).expect("non-empty").to_string());
            }
            text.shuffle(&mut rng);
            let when = base + Duration::days((k * 7 + u % 7) as i64) + Duration::minutes(u as i64);
            let rating = if profile.likes(top) { 5 } else { 2 };
            let rec = json!({
                "review_id": format!("R{review_no:05}"),
                "user_id": uid,
                "place_id": pid,
                "text": text.join(" "),
                "timestamp": when.to_rfc3339(),
                "rating": rating,
                "venue_category": VENUES[p % PLANTED.len()],
                "lat": coords[p].0,
                "lon": coords[p].1,
            });
            lines.push(rec.to_string());
            review_no += 1;
        }
    }
    SyntheticData {
        jsonl: lines.join("\n") + "\n",
        users,
        places,
    }
}

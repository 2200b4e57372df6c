//! Review corpus ingestion and the derived check-in log.
//!
//! Input is JSON Lines, one review per line:
//!
//! ```text
//! {"review_id":"r1","user_id":"u1","place_id":"p1","text":"Great food.","timestamp":"2017-03-01T12:00:00Z",
//!  "rating":5,"venue_category":"restaurant","lat":25.76,"lon":-80.19,"friends":["u2"]}
//! ```
//!
//! `review_id`, `user_id`, `place_id`, `text` and `timestamp` are required.
//! Place attributes (`venue_category`, `lat`, `lon`) and user attributes
//! (`friends`, `home_lat`, `home_lon`) may repeat on every line; the first
//! value seen wins. Any other keys are preserved verbatim on the review.

mod checkin;
pub mod text;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub use checkin::{CheckIn, CheckInLog};
pub use text::{
    preprocess, tokenize, Preprocessor, Sentence, SentenceSplitter, TokenSeq, WordList,
    DEFAULT_PAD, NEGATION_ALLOWLIST,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    const EARTH_RADIUS_KM: f64 = 6371.0088;

    pub fn new(lat: f64, lon: f64) -> Option<Self> {
        ((-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon))
            .then_some(GeoPoint { lat, lon })
    }

    /// Great-circle distance in kilometres (haversine).
    pub fn distance_km(&self, other: &GeoPoint) -> f64 {
        let (la1, la2) = (self.lat.to_radians(), other.lat.to_radians());
        let dlat = la2 - la1;
        let dlon = (other.lon - self.lon).to_radians();
        let h = (dlat / 2.0).sin().powi(2) + la1.cos() * la2.cos() * (dlon / 2.0).sin().powi(2);
        2.0 * Self::EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub review_id: String,
    pub user_id: String,
    pub place_id: String,
    pub rating: Option<u8>,
    pub text: String,
    pub timestamp: DateTime<Utc>,
    /// Source fields not interpreted by the pipeline.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Place {
    pub place_id: String,
    pub venue_category: Option<String>,
    pub coordinates: Option<GeoPoint>,
}

impl Place {
    /// Venue category, with places lacking one grouped under `"unknown"`.
    pub fn category(&self) -> &str {
        self.venue_category.as_deref().unwrap_or("unknown")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub user_id: String,
    pub friends: BTreeSet<String>,
    /// Explicit anchor from the input; when absent the centroid of visited
    /// places is used (see [`Corpus::home_anchor`]).
    pub home_anchor: Option<GeoPoint>,
}

/// An immutable review collection with deduplicated users and places.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub reviews: Vec<Review>,
    pub users: BTreeMap<String, User>,
    pub places: BTreeMap<String, Place>,
}

#[derive(Debug, Clone, Copy)]
pub struct IngestOptions {
    /// Maximum tolerated fraction of malformed lines.
    pub error_rate_cap: f64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            error_rate_cap: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RejectedLine {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub corpus: Corpus,
    pub rejected: Vec<RejectedLine>,
}

#[derive(Debug, Deserialize, Serialize)]
struct ReviewRecord {
    review_id: String,
    user_id: String,
    place_id: String,
    text: String,
    timestamp: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rating: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    venue_category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    friends: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    home_lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    home_lon: Option<f64>,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

/// Parses RFC 3339, naive `YYYY-MM-DD[T ]HH:MM:SS` (taken as UTC) or a bare date.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|t| t.and_utc())
}

fn point(lat: Option<f64>, lon: Option<f64>, what: &str) -> Result<Option<GeoPoint>, String> {
    match (lat, lon) {
        (None, None) => Ok(None),
        (Some(lat), Some(lon)) => GeoPoint::new(lat, lon)
            .map(Some)
            .ok_or_else(|| format!("{what} coordinates out of range ({lat}, {lon})")),
        _ => Err(format!("{what} coordinates need both latitude and longitude")),
    }
}

struct Builder {
    corpus: Corpus,
    seen_ids: HashSet<String>,
}

impl Builder {
    fn add(&mut self, rec: ReviewRecord) -> Result<Result<(), String>> {
        for (name, v) in [
            ("review_id", &rec.review_id),
            ("user_id", &rec.user_id),
            ("place_id", &rec.place_id),
        ] {
            if v.trim().is_empty() {
                return Ok(Err(format!("{name} is empty")));
            }
        }
        let Some(timestamp) = parse_timestamp(&rec.timestamp) else {
            return Ok(Err(format!("unparseable timestamp {:?}", rec.timestamp)));
        };
        let rating = match rec.rating {
            None => None,
            Some(r @ 1..=5) => Some(r as u8),
            Some(r) => return Ok(Err(format!("rating {r} outside 1..=5"))),
        };
        let place_point = match point(rec.lat, rec.lon, "place") {
            Ok(p) => p,
            Err(e) => return Ok(Err(e)),
        };
        let home = match point(rec.home_lat, rec.home_lon, "home") {
            Ok(p) => p,
            Err(e) => return Ok(Err(e)),
        };
        if !self.seen_ids.insert(rec.review_id.clone()) {
            return Err(Error::DuplicateReviewId(rec.review_id));
        }

        let place = self
            .corpus
            .places
            .entry(rec.place_id.clone())
            .or_insert_with(|| Place {
                place_id: rec.place_id.clone(),
                venue_category: None,
                coordinates: None,
            });
        merge_first(&mut place.venue_category, rec.venue_category, &rec.place_id);
        merge_first(&mut place.coordinates, place_point, &rec.place_id);

        let user = self
            .corpus
            .users
            .entry(rec.user_id.clone())
            .or_insert_with(|| User {
                user_id: rec.user_id.clone(),
                friends: BTreeSet::new(),
                home_anchor: None,
            });
        for f in rec.friends.into_iter().flatten() {
            if f != rec.user_id && !f.is_empty() {
                user.friends.insert(f);
            }
        }
        merge_first(&mut user.home_anchor, home, &rec.user_id);

        self.corpus.reviews.push(Review {
            review_id: rec.review_id,
            user_id: rec.user_id,
            place_id: rec.place_id,
            rating,
            text: rec.text,
            timestamp,
            extra: rec.extra,
        });
        Ok(Ok(()))
    }
}

fn merge_first<T: PartialEq + std::fmt::Debug>(slot: &mut Option<T>, value: Option<T>, id: &str) {
    match (slot.as_ref(), value) {
        (None, v) => *slot = v,
        (Some(old), Some(new)) if *old != new => {
            log::warn!("{id}: conflicting attribute {new:?}, keeping {old:?}");
        }
        _ => {}
    }
}

/// Reads a review JSONL file. Malformed lines are reported in
/// [`Ingested::rejected`] unless their share exceeds the error-rate cap.
pub fn ingest_reviews(path: &Path, opts: &IngestOptions) -> Result<Ingested> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(BufReader::new(file), &path.display().to_string(), opts)
}

pub fn ingest_reader<R: BufRead>(reader: R, name: &str, opts: &IngestOptions) -> Result<Ingested> {
    let mut builder = Builder {
        corpus: Corpus::default(),
        seen_ids: HashSet::new(),
    };
    let mut rejected = Vec::new();
    let mut total = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        let outcome = match serde_json::from_str::<ReviewRecord>(&line) {
            Ok(rec) => builder.add(rec)?,
            Err(e) => Err(e.to_string()),
        };
        if let Err(reason) = outcome {
            log::warn!("{name}:{}: rejected record: {reason}", i + 1);
            rejected.push(RejectedLine { line: i + 1, reason });
        }
    }
    if total > 0 && rejected.len() as f64 / total as f64 > opts.error_rate_cap {
        return Err(Error::ErrorRateExceeded {
            rejected: rejected.len(),
            total,
            cap: opts.error_rate_cap,
        });
    }
    Ok(Ingested {
        corpus: builder.corpus,
        rejected,
    })
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.reviews.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reviews.is_empty()
    }

    /// Same users and places, restricted review set.
    pub fn with_reviews(&self, reviews: Vec<Review>) -> Corpus {
        Corpus {
            reviews,
            users: self.users.clone(),
            places: self.places.clone(),
        }
    }

    /// Explicit home anchor, else the centroid of the user's visited places
    /// that have coordinates.
    pub fn home_anchor(&self, user_id: &str) -> Option<GeoPoint> {
        if let Some(p) = self.users.get(user_id).and_then(|u| u.home_anchor) {
            return Some(p);
        }
        let (mut lat, mut lon, mut n) = (0.0, 0.0, 0usize);
        for r in self.reviews.iter().filter(|r| r.user_id == user_id) {
            if let Some(c) = self.places.get(&r.place_id).and_then(|p| p.coordinates) {
                lat += c.lat;
                lon += c.lon;
                n += 1;
            }
        }
        (n > 0).then(|| GeoPoint {
            lat: lat / n as f64,
            lon: lon / n as f64,
        })
    }

    /// Writes the corpus back as JSONL in the ingest schema.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.reviews {
            let place = self.places.get(&r.place_id);
            let user = self.users.get(&r.user_id);
            let coords = place.and_then(|p| p.coordinates);
            let home = user.and_then(|u| u.home_anchor);
            let rec = ReviewRecord {
                review_id: r.review_id.clone(),
                user_id: r.user_id.clone(),
                place_id: r.place_id.clone(),
                text: r.text.clone(),
                timestamp: r.timestamp.to_rfc3339_opts(SecondsFormat::AutoSi, true),
                rating: r.rating.map(i64::from),
                venue_category: place.and_then(|p| p.venue_category.clone()),
                lat: coords.map(|c| c.lat),
                lon: coords.map(|c| c.lon),
                friends: user
                    .filter(|u| !u.friends.is_empty())
                    .map(|u| u.friends.iter().cloned().collect()),
                home_lat: home.map(|c| c.lat),
                home_lon: home.map(|c| c.lon),
                extra: r.extra.clone(),
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
        }
        Ok(())
    }

    pub fn build_checkin_log(&self) -> CheckInLog {
        CheckInLog::build(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn line(id: &str, user: &str, place: &str, ts: &str) -> String {
        format!(
            r#"{{"review_id":"{id}","user_id":"{user}","place_id":"{place}","text":"Nice.","timestamp":"{ts}"}}"#
        )
    }

    fn ingest(text: &str, cap: f64) -> Result<Ingested> {
        ingest_reader(
            Cursor::new(text.to_string()),
            "test",
            &IngestOptions { error_rate_cap: cap },
        )
    }

    #[test]
    fn rejects_line_missing_place() {
        let text = [
            line("r1", "u1", "p1", "2017-01-01T00:00:00Z"),
            r#"{"review_id":"r2","user_id":"u1","text":"x","timestamp":"2017-01-01"}"#.to_string(),
            line("r3", "u2", "p1", "2017-01-02T00:00:00Z"),
        ]
        .join("\n");
        let out = ingest(&text, 0.5).unwrap();
        assert_eq!(out.corpus.reviews.len(), 2);
        assert_eq!(out.rejected.len(), 1);
        assert_eq!(out.rejected[0].line, 2);
    }

    #[test]
    fn default_cap_is_one_percent() {
        let mut lines: Vec<String> = (0..99)
            .map(|i| line(&format!("r{i}"), "u", "p", "2017-01-01"))
            .collect();
        lines.push("not json".into());
        assert!(ingest_reader(Cursor::new(lines.join("\n")), "t", &IngestOptions::default()).is_ok());
        lines.push("still not json".into());
        let err = ingest_reader(Cursor::new(lines.join("\n")), "t", &IngestOptions::default());
        assert!(matches!(err, Err(Error::ErrorRateExceeded { rejected: 2, total: 101, .. })));
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        let out = ingest("", 0.01).unwrap();
        assert!(out.corpus.is_empty());
        assert!(out.corpus.users.is_empty());
    }

    #[test]
    fn duplicate_review_id_is_fatal() {
        let text = [
            line("r1", "u1", "p1", "2017-01-01"),
            line("r1", "u2", "p2", "2017-01-02"),
        ]
        .join("\n");
        assert!(matches!(ingest(&text, 1.0), Err(Error::DuplicateReviewId(id)) if id == "r1"));
    }

    #[test]
    fn validates_rating_and_coordinates() {
        let text = [
            r#"{"review_id":"a","user_id":"u","place_id":"p","text":"","timestamp":"2017-01-01","rating":7}"#,
            r#"{"review_id":"b","user_id":"u","place_id":"p","text":"","timestamp":"2017-01-01","lat":91,"lon":0}"#,
            r#"{"review_id":"c","user_id":"u","place_id":"p","text":"","timestamp":"yesterday"}"#,
            r#"{"review_id":"d","user_id":"u","place_id":"p","text":"","timestamp":"2017-01-01","lat":1}"#,
        ]
        .join("\n");
        let out = ingest(&text, 1.0).unwrap();
        assert_eq!(out.rejected.len(), 4);
    }

    #[test]
    fn user_is_never_own_friend() {
        let text = r#"{"review_id":"a","user_id":"u","place_id":"p","text":"","timestamp":"2017-01-01","friends":["u","v"]}"#;
        let c = ingest(text, 0.0).unwrap().corpus;
        assert_eq!(c.users["u"].friends, BTreeSet::from(["v".to_string()]));
    }

    #[test]
    fn timestamps_in_several_shapes() {
        assert!(parse_timestamp("2017-01-01T10:00:00+02:00").is_some());
        assert!(parse_timestamp("2017-01-01 10:00:00").is_some());
        assert!(parse_timestamp("2017-01-01").is_some());
        assert!(parse_timestamp("01/01/2017").is_none());
    }

    #[test]
    fn haversine_known_distance() {
        // Miami to Orlando, roughly 330 km
        let a = GeoPoint::new(25.7617, -80.1918).unwrap();
        let b = GeoPoint::new(28.5383, -81.3792).unwrap();
        let d = a.distance_km(&b);
        assert!((d - 330.0).abs() < 10.0, "{d}");
        assert_eq!(a.distance_km(&a), 0.0);
    }

    #[test]
    fn home_anchor_defaults_to_centroid() {
        let text = [
            r#"{"review_id":"a","user_id":"u","place_id":"p","text":"","timestamp":"2017-01-01","lat":10,"lon":20}"#,
            r#"{"review_id":"b","user_id":"u","place_id":"q","text":"","timestamp":"2017-01-01","lat":20,"lon":40}"#,
            r#"{"review_id":"c","user_id":"v","place_id":"q","text":"","timestamp":"2017-01-01","home_lat":1,"home_lon":2}"#,
        ]
        .join("\n");
        let c = ingest(&text, 0.0).unwrap().corpus;
        assert_eq!(c.home_anchor("u"), Some(GeoPoint { lat: 15.0, lon: 30.0 }));
        assert_eq!(c.home_anchor("v"), Some(GeoPoint { lat: 1.0, lon: 2.0 }));
    }
}

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::Corpus;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckIn {
    pub place_id: String,
    pub timestamp: DateTime<Utc>,
}

/// Per-user check-in history. Every review counts as one check-in.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckInLog {
    /// Chronological events per user.
    events: BTreeMap<String, Vec<CheckIn>>,
    /// `V_u(l)`: visit counts per user and place.
    counts: BTreeMap<String, BTreeMap<String, usize>>,
    /// Places where at least one of the user's check-ins was preceded by a
    /// friend's check-in.
    social: BTreeMap<String, BTreeSet<String>>,
}

impl CheckInLog {
    pub(crate) fn build(corpus: &Corpus) -> Self {
        let mut events: BTreeMap<String, Vec<CheckIn>> = BTreeMap::new();
        let mut counts: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
        // earliest check-in per (place, user)
        let mut first_visit: BTreeMap<&str, BTreeMap<&str, DateTime<Utc>>> = BTreeMap::new();
        for r in &corpus.reviews {
            events.entry(r.user_id.clone()).or_default().push(CheckIn {
                place_id: r.place_id.clone(),
                timestamp: r.timestamp,
            });
            *counts
                .entry(r.user_id.clone())
                .or_default()
                .entry(r.place_id.clone())
                .or_default() += 1;
            first_visit
                .entry(&r.place_id)
                .or_default()
                .entry(&r.user_id)
                .and_modify(|t| *t = (*t).min(r.timestamp))
                .or_insert(r.timestamp);
        }
        for evs in events.values_mut() {
            evs.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then(a.place_id.cmp(&b.place_id)));
        }

        let mut social: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (user, evs) in &events {
            let Some(friends) = corpus.users.get(user).map(|u| &u.friends) else {
                continue;
            };
            if friends.is_empty() {
                continue;
            }
            for ev in evs {
                let visitors = &first_visit[ev.place_id.as_str()];
                let influenced = friends
                    .iter()
                    .filter_map(|f| visitors.get(f.as_str()))
                    .any(|t| *t < ev.timestamp);
                if influenced {
                    social
                        .entry(user.clone())
                        .or_default()
                        .insert(ev.place_id.clone());
                }
            }
        }
        CheckInLog {
            events,
            counts,
            social,
        }
    }

    /// `V_u(l)`.
    pub fn visits(&self, user: &str, place: &str) -> usize {
        self.counts
            .get(user)
            .and_then(|m| m.get(place))
            .copied()
            .unwrap_or(0)
    }

    /// Visited places with their counts, ordered by place id.
    pub fn visited(&self, user: &str) -> impl Iterator<Item = (&str, usize)> {
        self.counts
            .get(user)
            .into_iter()
            .flatten()
            .map(|(p, &c)| (p.as_str(), c))
    }

    pub fn total(&self, user: &str) -> usize {
        self.visited(user).map(|(_, c)| c).sum()
    }

    pub fn events(&self, user: &str) -> &[CheckIn] {
        self.events.get(user).map_or(&[], Vec::as_slice)
    }

    /// The socially influenced subset of the user's visited places.
    pub fn social_places(&self, user: &str) -> impl Iterator<Item = &str> {
        self.social
            .get(user)
            .into_iter()
            .flatten()
            .map(String::as_str)
    }

    pub fn users(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }

    pub fn total_events(&self) -> usize {
        self.counts.values().flat_map(|m| m.values()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ingest_reader, IngestOptions};
    use std::io::Cursor;

    fn corpus(lines: &[(&str, &str, &str, &str, &str)]) -> Corpus {
        let text: Vec<String> = lines
            .iter()
            .map(|(id, u, p, ts, friends)| {
                format!(
                    r#"{{"review_id":"{id}","user_id":"{u}","place_id":"{p}","text":"ok","timestamp":"{ts}","friends":[{friends}]}}"#
                )
            })
            .collect();
        ingest_reader(Cursor::new(text.join("\n")), "t", &IngestOptions::default())
            .unwrap()
            .corpus
    }

    #[test]
    fn counts_repeated_visits() {
        let c = corpus(&[
            ("1", "u", "A", "2017-01-01", ""),
            ("2", "u", "A", "2017-01-02", ""),
            ("3", "u", "B", "2017-01-03", ""),
        ]);
        let log = c.build_checkin_log();
        assert_eq!(log.visits("u", "A"), 2);
        assert_eq!(log.visits("u", "B"), 1);
        assert_eq!(log.total("u"), 3);
        assert_eq!(log.total_events(), c.reviews.len());
        assert_eq!(log.social_places("u").count(), 0);
    }

    #[test]
    fn two_reviews_same_place_count_twice() {
        let c = corpus(&[
            ("1", "u", "P", "2017-01-01", ""),
            ("2", "u", "P", "2017-02-01", ""),
        ]);
        assert_eq!(c.build_checkin_log().visits("u", "P"), 2);
    }

    /// Brute-force scan of the event timeline against the log's social set.
    #[test]
    fn social_influence_follows_event_order() {
        let c = corpus(&[
            ("1", "f", "P", "2017-01-01", ""),
            ("2", "u", "P", "2017-01-05", "\"f\""),
            ("3", "u", "Q", "2017-01-01", "\"f\""),
            ("4", "f", "Q", "2017-01-09", ""),
            ("5", "u", "R", "2017-01-03", "\"f\""),
            ("6", "g", "R", "2017-01-01", ""),
        ]);
        let log = c.build_checkin_log();
        let mut expected = BTreeSet::new();
        for r in c.reviews.iter().filter(|r| r.user_id == "u") {
            let hit = c.reviews.iter().any(|o| {
                c.users["u"].friends.contains(&o.user_id)
                    && o.place_id == r.place_id
                    && o.timestamp < r.timestamp
            });
            if hit {
                expected.insert(r.place_id.as_str());
            }
        }
        let got: BTreeSet<&str> = log.social_places("u").collect();
        assert_eq!(got, expected);
        assert_eq!(got, BTreeSet::from(["P"]));
    }
}

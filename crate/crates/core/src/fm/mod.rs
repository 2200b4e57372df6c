//! Factorization-machine recommender over aspect and context features.

mod design;
mod model;
mod vectors;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use design::{assemble_design_matrix, DesignMatrix, DesignRow, FeatureSpace, SamplingConfig};
pub use model::{
    fm_gradient_check, fm_train, logistic_loss, row_gradient, row_objective, FmConfig, FmModel, SparseVec,
};
pub use vectors::{
    aspect_vector, build_feature_vector, net, neg_slot, pos_slot, preferred_categories, AspectProfiles,
    EntityVectors, FeatureVector, VectorMode, ASPECT_DIM,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub place_id: String,
    pub score: f64,
}

/// Scores every candidate, drops those negative on all of the user's
/// preferred categories, and returns the best `n` (ties by place id).
pub fn recommend(
    user: &str,
    model: &FmModel,
    space: &FeatureSpace,
    profiles: &AspectProfiles,
    candidates: &[String],
    n: usize,
) -> Result<Vec<Scored>> {
    if !space.knows_user(user) {
        return Err(Error::ColdStart(user.to_string()));
    }
    let preferred = profiles.preferred(user);
    let mut out = Vec::new();
    for place in candidates {
        let rejected = !preferred.is_empty()
            && profiles
                .places
                .get(place)
                .is_some_and(|v| preferred.iter().all(|&c| net(v, c) < 0.0));
        if rejected {
            continue;
        }
        let score = model.predict_proba(&space.row(user, place)?)?;
        out.push(Scored {
            place_id: place.clone(),
            score,
        });
    }
    out.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.place_id.cmp(&b.place_id)));
    out.truncate(n);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aspects::AspectCategory::{self, *};
    use crate::corpus::{ingest_reader, Corpus, IngestOptions};
    use crate::sentiment::Polarity;
    use crate::textcnn::ClassifiedSentence;
    use std::io::Cursor;

    fn cs(user: &str, place: &str, cats: &[AspectCategory], compound: f64) -> ClassifiedSentence {
        ClassifiedSentence {
            review_id: format!("{user}{place}"),
            user_id: user.into(),
            place_id: place.into(),
            index: 0,
            categories: cats.iter().copied().collect(),
            polarity: Polarity::from_compound(compound),
        }
    }

    fn fixture() -> (Corpus, AspectProfiles, FeatureSpace) {
        let lines: Vec<String> = [("1", "u", "a"), ("2", "w", "b"), ("3", "w", "c"), ("4", "w", "d")]
            .iter()
            .map(|(r, u, p)| format!(r#"{{"review_id":"{r}","user_id":"{u}","place_id":"{p}","text":"x","timestamp":"2017-01-01"}}"#))
            .collect();
        let c = ingest_reader(Cursor::new(lines.join("\n")), "t", &IngestOptions::default())
            .unwrap()
            .corpus;
        let classified = vec![
            cs("u", "a", &[Food], 0.5),
            cs("w", "b", &[Food], -0.5),
            cs("w", "c", &[Food], 0.5),
            cs("w", "d", &[Service], 0.5),
        ];
        let profiles = AspectProfiles::build(&classified);
        let log = c.build_checkin_log();
        let space = FeatureSpace::new(&c, &log, EntityVectors::from_profiles(&profiles, &c), 10.0);
        (c, profiles, space)
    }

    #[test]
    fn filter_ties_and_truncation() {
        let (_, profiles, space) = fixture();
        // a constant model: every candidate ties
        let model = FmModel::zeros(space.dim(), 2);
        let cands: Vec<String> = ["d", "c", "b"].map(String::from).to_vec();
        let got = recommend("u", &model, &space, &profiles, &cands, 10).unwrap();
        let ids: Vec<&str> = got.iter().map(|s| s.place_id.as_str()).collect();
        // b is negative on Food, u's only preferred category
        assert_eq!(ids, vec!["c", "d"]);
        assert!(got.iter().all(|s| s.score == 0.5));
        assert_eq!(recommend("u", &model, &space, &profiles, &cands, 1).unwrap().len(), 1);
    }

    #[test]
    fn filtered_place_is_dropped_despite_top_score() {
        let (_, profiles, space) = fixture();
        let mut model = FmModel::zeros(space.dim(), 1);
        // weight on le's Food-negative slot makes b the top scorer
        model.w[ASPECT_DIM + neg_slot(Food)] = 10.0;
        let cands: Vec<String> = ["b", "c"].map(String::from).to_vec();
        let got = recommend("u", &model, &space, &profiles, &cands, 2).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].place_id, "c");
    }

    #[test]
    fn unknown_user_is_cold_start() {
        let (_, profiles, space) = fixture();
        let model = FmModel::zeros(space.dim(), 1);
        assert!(matches!(
            recommend("ghost", &model, &space, &profiles, &[], 5),
            Err(Error::ColdStart(_))
        ));
    }
}

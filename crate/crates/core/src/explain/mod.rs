//! Explanations for a user's recommendations.
//!
//! All back-ends work on a graph linking the recommended places to the
//! categories they were praised for. Core peels bipartite cores with HITS,
//! Rank orders nodes by weighted PageRank, and Dense matches category
//! shingles of the user against those of the places.

mod graph;
mod hits;
mod pagerank;
mod render;
mod shingles;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::textcnn::ClassifiedSentence;

pub use graph::{add_user_edges, build_explanation_graph, positive_counts, ExplanationGraph, GraphMode, NodeKind};
pub use hits::{extract_bipartite_cores, hits, BipartiteCore, ScorePair, DEFAULT_MAX_ITER, DEFAULT_TOL};
pub use pagerank::{pagerank, rank_explanations, PageRank, RankedCategory, DEFAULT_DAMPING};
pub use render::{
    blocks_from_cores, blocks_from_ranked, blocks_from_shingles, ExplanationBlock, ExplanationReport, Templates,
};
pub use shingles::{
    match_shingles, shingle_finder, similarity_score, DenseExplanation, Shingle, ShingleBlock, ShingleCluster,
    ShingleConfig, ShingleSets,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplainMethod {
    Core,
    Rank,
    Dense,
}

impl ExplainMethod {
    pub const ALL: [ExplainMethod; 3] = [ExplainMethod::Core, ExplainMethod::Rank, ExplainMethod::Dense];

    pub fn name(self) -> &'static str {
        match self {
            ExplainMethod::Core => "core",
            ExplainMethod::Rank => "rank",
            ExplainMethod::Dense => "dense",
        }
    }
}

impl std::fmt::Display for ExplainMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ExplainMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExplainMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown explanation method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub shingles: ShingleConfig,
    /// Users kept per shingle cluster.
    pub top_users: usize,
    /// Places kept per shingle cluster.
    pub top_places: usize,
    pub templates: Templates,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            damping: DEFAULT_DAMPING,
            shingles: ShingleConfig::default(),
            top_users: 5,
            top_places: 10,
            templates: Templates::default(),
        }
    }
}

impl ExplainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.tol >= 0.0) || self.max_iter == 0 {
            return bad("tol must be non-negative and max_iter positive");
        }
        if !(0.0..1.0).contains(&self.damping) {
            return bad("damping must lie in [0, 1)");
        }
        let s = &self.shingles;
        if s.size == 0 || s.size > crate::aspects::AspectCategory::COUNT || s.permutations == 0 || s.keep == 0 {
            return bad("shingle size must be in 1..=7 and permutations, keep positive");
        }
        if self.top_users == 0 || self.top_places == 0 {
            return bad("cluster sizes must be positive");
        }
        Ok(())
    }
}

/// Explains why `places` were recommended to `user`.
pub fn explain_recommendations(
    user: &str,
    places: &[String],
    classified: &[ClassifiedSentence],
    corpus: &Corpus,
    method: ExplainMethod,
    cfg: &ExplainConfig,
) -> Result<ExplanationReport> {
    let blocks = match method {
        ExplainMethod::Core => {
            let g = build_explanation_graph(places, classified, corpus, GraphMode::Core)?;
            blocks_from_cores(&extract_bipartite_cores(&g), &cfg.templates)
        }
        ExplainMethod::Rank => {
            let g = build_explanation_graph(places, classified, corpus, GraphMode::Rank)?;
            let pr = pagerank(&g, cfg.damping, cfg.tol, cfg.max_iter);
            blocks_from_ranked(&rank_explanations(&g, &pr), &cfg.templates)
        }
        ExplainMethod::Dense => {
            let mut g = build_explanation_graph(places, classified, corpus, GraphMode::Dense)?;
            add_user_edges(&mut g, &[user.to_string()], classified);
            let sets = shingle_finder(&g, &cfg.shingles);
            let dense = match_shingles(&sets.users, &sets.places, cfg.top_users, cfg.top_places);
            let own = dense.users.get(user).cloned().unwrap_or_default();
            if own.is_empty() {
                // too few praised categories for a shingle: fall back to place clusters
                let fallback: Vec<ShingleBlock> = place_clusters(&sets, cfg.top_places);
                blocks_from_shingles(&fallback, &cfg.templates)
            } else {
                blocks_from_shingles(&own, &cfg.templates)
            }
        }
    };
    Ok(ExplanationReport {
        user_id: user.to_string(),
        method,
        blocks,
    })
}

/// Place shingles grouped by category set, best total score first.
fn place_clusters(sets: &ShingleSets, top_places: usize) -> Vec<ShingleBlock> {
    use std::collections::BTreeMap;
    let mut groups: BTreeMap<Vec<crate::aspects::AspectCategory>, Vec<(String, f64)>> = BTreeMap::new();
    for (p, shingles) in &sets.places {
        for s in shingles {
            groups.entry(s.categories.clone()).or_default().push((p.clone(), s.score));
        }
    }
    let mut blocks: Vec<ShingleBlock> = groups
        .into_iter()
        .map(|(categories, mut places)| {
            places.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            let score = places.iter().map(|(_, s)| s).sum();
            places.truncate(top_places);
            ShingleBlock {
                categories,
                score,
                places,
            }
        })
        .collect();
    blocks.sort_by(|a, b| b.score.total_cmp(&a.score));
    blocks
}

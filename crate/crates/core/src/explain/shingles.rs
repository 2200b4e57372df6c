use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::{ExplanationGraph, NodeKind};
use crate::aspects::AspectCategory;

pub const DEFAULT_SHINGLE_SIZE: usize = 3;
pub const DEFAULT_PERMUTATIONS: usize = 10;
pub const DEFAULT_SHINGLES_KEPT: usize = 5;

/// Source-normalized view of a graph: `W̃(i,j) = W(i,j) / Σ W(i,·)`.
struct Normalized<'a> {
    graph: &'a ExplanationGraph,
    out_w: Vec<f64>,
    in_norm: Vec<f64>,
}

impl<'a> Normalized<'a> {
    fn new(graph: &'a ExplanationGraph) -> Self {
        let out_w: Vec<f64> = (0..graph.len()).map(|i| graph.out_weight(i)).collect();
        let mut in_norm = vec![0.0; graph.len()];
        for (i, j, w) in graph.edges() {
            in_norm[j] += w / out_w[i];
        }
        Normalized { graph, out_w, in_norm }
    }

    fn out_norm(&self, i: usize) -> f64 {
        if self.out_w[i] > 0.0 {
            1.0
        } else {
            0.0
        }
    }

    fn sim(&self, a: &[usize], b: &[usize]) -> f64 {
        let bs: BTreeSet<usize> = b.iter().copied().collect();
        let cross: f64 = a
            .iter()
            .flat_map(|&i| self.graph.out_edges(i).map(move |(j, w)| (i, j, w)))
            .filter(|(_, j, _)| bs.contains(j))
            .map(|(i, _, w)| w / self.out_w[i])
            .sum();
        let denom: f64 = a.iter().map(|&i| self.out_norm(i)).sum::<f64>() + b.iter().map(|&j| self.in_norm[j]).sum::<f64>();
        if cross == 0.0 || denom == 0.0 {
            0.0
        } else {
            cross / denom
        }
    }
}

/// `f(A,B) / (f(A) + f(B))` over source-normalized weights, where `f(A)` is
/// the normalized out-weight of `A` and `f(B)` the normalized in-weight of `B`.
pub fn similarity_score(a: &[usize], b: &[usize], graph: &ExplanationGraph) -> f64 {
    Normalized::new(graph).sim(a, b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shingle {
    pub owner: String,
    /// Sorted by category order.
    pub categories: Vec<AspectCategory>,
    pub score: f64,
}

fn names(c: &[AspectCategory]) -> Vec<&'static str> {
    c.iter().map(|c| c.name()).collect()
}

fn shingle_order(a: &Shingle, b: &Shingle) -> std::cmp::Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| names(&a.categories).cmp(&names(&b.categories)))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ShingleSets {
    pub places: BTreeMap<String, Vec<Shingle>>,
    pub users: BTreeMap<String, Vec<Shingle>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShingleConfig {
    /// Categories per shingle.
    pub size: usize,
    pub permutations: usize,
    /// Shingles kept per node.
    pub keep: usize,
    pub seed: u64,
}

impl Default for ShingleConfig {
    fn default() -> Self {
        ShingleConfig {
            size: DEFAULT_SHINGLE_SIZE,
            permutations: DEFAULT_PERMUTATIONS,
            keep: DEFAULT_SHINGLES_KEPT,
            seed: 7,
        }
    }
}

/// Min-hash style shingles: under each seeded permutation of the category
/// nodes, a node's shingle is its first `size` category neighbors.
pub fn shingle_finder(graph: &ExplanationGraph, cfg: &ShingleConfig) -> ShingleSets {
    let norm = Normalized::new(graph);
    let universe: Vec<usize> = graph.categories().map(|(i, _)| i).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let perms: Vec<Vec<usize>> = (0..cfg.permutations)
        .map(|_| {
            let mut p = universe.clone();
            p.shuffle(&mut rng);
            p
        })
        .collect();
    let mut out = ShingleSets::default();
    for (i, node) in graph.nodes().iter().enumerate() {
        let target = match node {
            NodeKind::Place(id) => out.places.entry(id.clone()),
            NodeKind::User(id) => out.users.entry(id.clone()),
            NodeKind::Category(_) => continue,
        };
        let neighbors: BTreeSet<usize> = graph
            .out_edges(i)
            .filter(|(j, _)| matches!(graph.node(*j), NodeKind::Category(_)))
            .map(|(j, _)| j)
            .collect();
        if cfg.size == 0 || neighbors.len() < cfg.size {
            continue;
        }
        let mut best: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for perm in &perms {
            let mut set: Vec<usize> = perm.iter().copied().filter(|j| neighbors.contains(j)).take(cfg.size).collect();
            set.sort_unstable();
            let score = norm.sim(&[i], &set);
            let e = best.entry(set).or_insert(score);
            *e = e.max(score);
        }
        let mut shingles: Vec<Shingle> = best
            .into_iter()
            .map(|(set, score)| {
                let mut categories: Vec<AspectCategory> = set
                    .iter()
                    .filter_map(|&j| match graph.node(j) {
                        NodeKind::Category(c) => Some(*c),
                        _ => None,
                    })
                    .collect();
                categories.sort();
                Shingle {
                    owner: node.id().to_string(),
                    categories,
                    score,
                }
            })
            .collect();
        shingles.sort_by(shingle_order);
        shingles.truncate(cfg.keep);
        target.or_insert(shingles);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShingleCluster {
    pub categories: Vec<AspectCategory>,
    pub users: Vec<(String, f64)>,
    pub places: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShingleBlock {
    pub categories: Vec<AspectCategory>,
    pub score: f64,
    pub places: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DenseExplanation {
    pub clusters: Vec<ShingleCluster>,
    /// Per user, their shingles by score with the places sharing each one.
    pub users: BTreeMap<String, Vec<ShingleBlock>>,
}

fn by_score(v: &mut Vec<(String, f64)>, n: usize) {
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v.truncate(n);
}

/// Groups users and places that share an identical shingle.
pub fn match_shingles(users: &BTreeMap<String, Vec<Shingle>>, places: &BTreeMap<String, Vec<Shingle>>, top_nu: usize, top_nl: usize) -> DenseExplanation {
    type Side = BTreeMap<Vec<AspectCategory>, Vec<(String, f64)>>;
    let group = |m: &BTreeMap<String, Vec<Shingle>>| -> Side {
        let mut out: Side = BTreeMap::new();
        for (id, shingles) in m {
            for s in shingles {
                out.entry(s.categories.clone()).or_default().push((id.clone(), s.score));
            }
        }
        out
    };
    let (mut us, mut ps) = (group(users), group(places));
    let mut clusters: Vec<ShingleCluster> = Vec::new();
    for (cats, u) in us.iter_mut() {
        if let Some(p) = ps.get_mut(cats) {
            by_score(u, top_nu);
            by_score(p, top_nl);
            clusters.push(ShingleCluster {
                categories: cats.clone(),
                users: u.clone(),
                places: p.clone(),
            });
        }
    }
    clusters.sort_by(|a, b| {
        b.users[0]
            .1
            .total_cmp(&a.users[0].1)
            .then_with(|| names(&a.categories).cmp(&names(&b.categories)))
    });
    let explanations = users
        .iter()
        .map(|(id, shingles)| {
            let mut sorted = shingles.clone();
            sorted.sort_by(shingle_order);
            let blocks = sorted
                .into_iter()
                .map(|s| ShingleBlock {
                    places: ps.get(&s.categories).cloned().unwrap_or_default(),
                    categories: s.categories,
                    score: s.score,
                })
                .collect();
            (id.clone(), blocks)
        })
        .collect();
    DenseExplanation {
        clusters,
        users: explanations,
    }
}

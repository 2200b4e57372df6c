//! Seeded fixtures for the kernel benchmarks.

use poirec_core::aspects::AspectCategory;
use poirec_core::corpus::{preprocess, TokenSeq, WordList};
use poirec_core::explain::{ExplanationGraph, NodeKind};
use poirec_core::fm::{FmModel, SparseVec};
use poirec_core::textcnn::{CnnConfig, CnnModel, Vocab};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random model over `n` features with `k` factors.
pub fn fm_model(rng: &mut ChaCha8Rng, n: usize, k: usize) -> FmModel {
    let mut m = FmModel::zeros(n, k);
    m.w0 = rng.random_range(-1.0..1.0);
    m.w.iter_mut().for_each(|w| *w = rng.random_range(-1.0..1.0));
    m.v.iter_mut().for_each(|v| *v = rng.random_range(-0.1..0.1));
    m
}

/// A sparse row with roughly `density * n` non-zeros.
pub fn fm_row(rng: &mut ChaCha8Rng, n: usize, density: f64) -> SparseVec {
    let x: Vec<f64> = (0..n)
        .map(|_| if rng.random_bool(density) { rng.random_range(-1.0..1.0) } else { 0.0 })
        .collect();
    SparseVec::from_dense(&x)
}

const WORDS: [&str; 16] = [
    "pizza", "staff", "price", "dog", "parking", "ramp", "room", "view", "pool", "coffee", "waiter", "bill", "puppy",
    "wifi", "subway", "soup",
];

pub fn sentence(rng: &mut ChaCha8Rng, len: usize, max_len: usize) -> TokenSeq {
    let words: Vec<&str> = (0..len).map(|_| *WORDS.choose(rng).expect("non-empty")).collect();
    preprocess(&words, &WordList::default(), "<pad>", max_len)
}

/// A classifier with the given embedding size and filter count.
pub fn cnn_model(dim: usize, filters: usize, max_len: usize) -> CnnModel {
    let all = preprocess(&WORDS, &WordList::default(), "<pad>", WORDS.len());
    let vocab = Vocab::build([&all], "<pad>");
    let cfg = CnnConfig {
        dim,
        filters,
        max_len,
        dropout: 0.0,
        ..CnnConfig::default()
    };
    CnnModel::new(AspectCategory::Food, vocab, &cfg, 1).expect("valid architecture")
}

/// A category-to-place graph with `places` places and about half of all
/// possible edges.
pub fn bipartite(rng: &mut ChaCha8Rng, places: usize) -> ExplanationGraph {
    let mut g = ExplanationGraph::new();
    for c in AspectCategory::ALL {
        let ci = g.add_node(NodeKind::Category(c));
        for p in 0..places {
            if rng.random_bool(0.5) {
                let pi = g.add_node(NodeKind::Place(format!("P{p:04}")));
                g.add_edge(ci, pi, f64::from(rng.random_range(1u8..=20)));
            }
        }
    }
    g
}

/// A directed graph over categories and places with edges both ways.
pub fn digraph(rng: &mut ChaCha8Rng, places: usize) -> ExplanationGraph {
    let mut g = bipartite(rng, places);
    let edges: Vec<(usize, usize, f64)> = g.edges().collect();
    for (s, d, w) in edges {
        if rng.random_bool(0.5) {
            g.add_edge(d, s, w);
        }
    }
    g
}

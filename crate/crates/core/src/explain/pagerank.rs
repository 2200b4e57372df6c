use serde::{Deserialize, Serialize};

use super::graph::{ExplanationGraph, NodeKind};
use super::hits::order_nodes;
use crate::aspects::AspectCategory;

pub const DEFAULT_DAMPING: f64 = 0.85;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageRank {
    pub ranks: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Weighted PageRank with transition `P(j→i) = W(j,i) / Σ W(j,·)`. Mass of
/// nodes without out-edges is spread uniformly.
pub fn pagerank(graph: &ExplanationGraph, d: f64, tol: f64, max_iter: usize) -> PageRank {
    let n = graph.len();
    if n == 0 {
        return PageRank {
            ranks: Vec::new(),
            iterations: 0,
            converged: true,
        };
    }
    let nf = n as f64;
    let out_w: Vec<f64> = (0..n).map(|i| graph.out_weight(i)).collect();
    let mut pi = vec![1.0 / nf; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let dangling: f64 = (0..n).filter(|&j| out_w[j] <= 0.0).map(|j| pi[j]).sum();
        let base = (1.0 - d) / nf + d * dangling / nf;
        let mut next = vec![base; n];
        for (j, i, w) in graph.edges() {
            next[i] += d * pi[j] * w / out_w[j];
        }
        let delta = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        pi = next;
        if delta < tol {
            converged = true;
            break;
        }
    }
    PageRank {
        ranks: pi,
        iterations,
        converged,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCategory {
    pub category: AspectCategory,
    pub rank: f64,
    pub places: Vec<(String, f64)>,
}

/// Categories by rank, each with its place neighbors by rank.
pub fn rank_explanations(graph: &ExplanationGraph, pr: &PageRank) -> Vec<RankedCategory> {
    let mut cats: Vec<(usize, f64)> = graph.categories().map(|(i, _)| (i, pr.ranks[i])).collect();
    order_nodes(graph, &mut cats);
    cats.into_iter()
        .filter_map(|(i, rank)| {
            let NodeKind::Category(category) = *graph.node(i) else {
                return None;
            };
            let mut places: Vec<(usize, f64)> = graph
                .out_edges(i)
                .filter(|(j, _)| matches!(graph.node(*j), NodeKind::Place(_)))
                .map(|(j, _)| (j, pr.ranks[j]))
                .collect();
            if places.is_empty() {
                return None;
            }
            order_nodes(graph, &mut places);
            Some(RankedCategory {
                category,
                rank,
                places: places.into_iter().map(|(j, r)| (graph.node(j).id().to_string(), r)).collect(),
            })
        })
        .collect()
}

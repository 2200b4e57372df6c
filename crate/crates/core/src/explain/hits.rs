use serde::{Deserialize, Serialize};

use super::graph::{ExplanationGraph, NodeKind};
use crate::aspects::AspectCategory;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 100;
const TIE_EPS: f64 = 1e-12;

/// Hub and authority scores indexed like the graph's nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorePair {
    pub hub: Vec<f64>,
    pub authority: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

fn max_delta(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Weighted HITS: `a = Aᵀh`, `h = A a`, both L2-normalized each round.
pub fn hits(graph: &ExplanationGraph, tol: f64, max_iter: usize) -> ScorePair {
    let n = graph.len();
    let mut hub = vec![1.0; n];
    normalize(&mut hub);
    let mut authority = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut a = vec![0.0; n];
        for (i, j, w) in graph.edges() {
            a[j] += w * hub[i];
        }
        normalize(&mut a);
        let mut h = vec![0.0; n];
        for (i, j, w) in graph.edges() {
            h[i] += w * a[j];
        }
        normalize(&mut h);
        let delta = max_delta(&a, &authority).max(max_delta(&h, &hub));
        authority = a;
        hub = h;
        if delta < tol {
            converged = true;
            break;
        }
    }
    ScorePair {
        hub,
        authority,
        iterations,
        converged,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BipartiteCore {
    /// 1 for the primary core, 2 for the secondary, and so on.
    pub order: usize,
    pub category: AspectCategory,
    /// Places with their authority score, best first.
    pub places: Vec<(String, f64)>,
}

/// Index of the best score, ties within `TIE_EPS` going to the smaller node id.
fn best_by(graph: &ExplanationGraph, candidates: impl Iterator<Item = usize>, score: &[f64]) -> Option<usize> {
    candidates.fold(None, |best, i| match best {
        None => Some(i),
        Some(b) => {
            let (si, sb) = (score[i], score[b]);
            let better = si > sb + TIE_EPS || ((si - sb).abs() <= TIE_EPS && graph.node(i).id() < graph.node(b).id());
            Some(if better { i } else { b })
        }
    })
}

/// Sorts `(node, score)` pairs by score descending, ties by node id.
pub(crate) fn order_nodes(graph: &ExplanationGraph, nodes: &mut [(usize, f64)]) {
    nodes.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| graph.node(a.0).id().cmp(graph.node(b.0).id()))
    });
}

/// Repeatedly takes the category with the top hub score together with all
/// its place neighbors, then deletes that category's out-edges.
pub fn extract_bipartite_cores(graph: &ExplanationGraph) -> Vec<BipartiteCore> {
    let mut g = graph.clone();
    let mut cores = Vec::new();
    loop {
        let live: Vec<usize> = g.categories().map(|(i, _)| i).filter(|&i| g.out_edges(i).next().is_some()).collect();
        if live.is_empty() {
            break;
        }
        let scores = hits(&g, DEFAULT_TOL, DEFAULT_MAX_ITER);
        let top = best_by(&g, live.into_iter(), &scores.hub).expect("non-empty");
        let NodeKind::Category(category) = *g.node(top) else {
            unreachable!("only category nodes are candidates")
        };
        let mut places: Vec<(usize, f64)> = g.out_edges(top).map(|(j, _)| (j, scores.authority[j])).collect();
        order_nodes(&g, &mut places);
        g.remove_out_edges(top);
        cores.push(BipartiteCore {
            order: cores.len() + 1,
            category,
            places: places.into_iter().map(|(j, a)| (g.node(j).id().to_string(), a)).collect(),
        });
    }
    cores
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use AspectCategory::*;

    pub(crate) fn bipartite(edges: &[(AspectCategory, &str, f64)]) -> ExplanationGraph {
        let mut g = ExplanationGraph::new();
        for &(c, p, w) in edges {
            let ci = g.add_node(NodeKind::Category(c));
            let pi = g.add_node(NodeKind::Place(p.to_string()));
            g.add_edge(ci, pi, w);
        }
        g
    }

    fn score_of(g: &ExplanationGraph, v: &[f64], node: NodeKind) -> f64 {
        v[g.find(&node).unwrap()]
    }

    #[test]
    fn symmetric_star() {
        let g = bipartite(&[(Food, "P1", 1.0), (Food, "P2", 1.0)]);
        let s = hits(&g, DEFAULT_TOL, DEFAULT_MAX_ITER);
        assert!(s.converged);
        let r = 0.5f64.sqrt();
        assert!((score_of(&g, &s.authority, NodeKind::Place("P1".into())) - r).abs() < 1e-12);
        assert!((score_of(&g, &s.authority, NodeKind::Place("P2".into())) - r).abs() < 1e-12);
        assert!((score_of(&g, &s.hub, NodeKind::Category(Food)) - 1.0).abs() < 1e-12);
    }

    /// Power iteration on the dense `AᵀA` matrix.
    fn dense_authority(g: &ExplanationGraph, iters: usize) -> Vec<f64> {
        let n = g.len();
        let mut a = vec![vec![0.0; n]; n];
        for (i, j, w) in g.edges() {
            a[i][j] = w;
        }
        let ata: Vec<Vec<f64>> = (0..n)
            .map(|r| (0..n).map(|c| (0..n).map(|k| a[k][r] * a[k][c]).sum()).collect())
            .collect();
        let mut v = vec![1.0; n];
        for _ in 0..iters {
            let mut next: Vec<f64> = (0..n).map(|r| (0..n).map(|c| ata[r][c] * v[c]).sum()).collect();
            normalize(&mut next);
            v = next;
        }
        v
    }

    #[test]
    fn shared_place_gets_top_authority() {
        let g = bipartite(&[(Food, "P1", 1.0), (Food, "P2", 1.0), (Food, "P3", 1.0), (Price, "P3", 1.0)]);
        let s = hits(&g, DEFAULT_TOL, DEFAULT_MAX_ITER);
        let oracle = dense_authority(&g, 500);
        for (x, y) in s.authority.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-6);
        }
        let p3 = score_of(&g, &s.authority, NodeKind::Place("P3".into()));
        for p in ["P1", "P2"] {
            assert!(p3 > score_of(&g, &s.authority, NodeKind::Place(p.into())) + 1e-6);
        }
    }

    #[test]
    fn iteration_cap() {
        let g = bipartite(&[(Food, "P1", 1.0), (Food, "P2", 3.0), (Price, "P2", 1.0)]);
        let s = hits(&g, 0.0, 3);
        assert_eq!(s.iterations, 3);
        assert!(!s.converged);
    }

    fn fig4() -> ExplanationGraph {
        bipartite(&[
            (Food, "P1", 3.0),
            (Food, "P2", 2.0),
            (Food, "P3", 2.0),
            (Price, "P3", 1.0),
            (Price, "P4", 1.0),
            (Service, "P4", 1.0),
        ])
    }

    #[test]
    fn primary_core_of_dense_block() {
        let cores = extract_bipartite_cores(&fig4());
        assert_eq!(cores[0].order, 1);
        assert_eq!(cores[0].category, Food);
        let ids: Vec<&str> = cores[0].places.iter().map(|(p, _)| p.as_str()).collect();
        // P3 also collects hub mass from Price
        assert_eq!(ids, vec!["P1", "P3", "P2"]);
        let cats: Vec<AspectCategory> = cores.iter().map(|c| c.category).collect();
        assert_eq!(cats.len(), 3);
        assert!(cores.windows(2).all(|w| w[0].order < w[1].order));
    }

    #[test]
    fn single_category_single_core() {
        let cores = extract_bipartite_cores(&bipartite(&[(Pet, "A", 1.0), (Pet, "B", 2.0), (Pet, "C", 1.0)]));
        assert_eq!(cores.len(), 1);
        assert_eq!(cores[0].places.len(), 3);
        assert_eq!(cores[0].places[0].0, "B");
    }

    #[test]
    fn equal_hubs_break_by_name() {
        let cores = extract_bipartite_cores(&bipartite(&[(Service, "A", 1.0), (Food, "B", 1.0)]));
        let cats: Vec<AspectCategory> = cores.iter().map(|c| c.category).collect();
        assert_eq!(cats, vec![Food, Service]);
    }

    fn arb_graph() -> impl Strategy<Value = Vec<(usize, usize, u8)>> {
        prop::collection::vec((0usize..4, 0usize..6, 1u8..5), 1..14)
    }

    fn build(edges: &[(usize, usize, u8)]) -> ExplanationGraph {
        let named: Vec<(AspectCategory, String, f64)> = edges
            .iter()
            .map(|&(c, p, w)| (AspectCategory::ALL[c], format!("P{p}"), w as f64))
            .collect();
        let refs: Vec<(AspectCategory, &str, f64)> = named.iter().map(|(c, p, w)| (*c, p.as_str(), *w)).collect();
        bipartite(&refs)
    }

    proptest! {
        #[test]
        fn peeling_partitions_edges(edges in arb_graph()) {
            let g = build(&edges);
            let cores = extract_bipartite_cores(&g);
            let with_edges: Vec<AspectCategory> = g
                .categories()
                .filter(|(i, _)| g.out_edges(*i).next().is_some())
                .map(|(_, c)| c)
                .collect();
            prop_assert!(cores.len() <= g.categories().count());
            let mut got: Vec<AspectCategory> = cores.iter().map(|c| c.category).collect();
            got.sort();
            let mut want = with_edges.clone();
            want.sort();
            prop_assert_eq!(got, want);
            let removed: usize = cores.iter().map(|c| c.places.len()).sum();
            prop_assert_eq!(removed, g.edge_count());
            for c in &cores {
                prop_assert!(!c.places.is_empty());
            }
        }

        #[test]
        fn scores_are_unit_vectors(edges in arb_graph()) {
            let g = build(&edges);
            let s = hits(&g, DEFAULT_TOL, DEFAULT_MAX_ITER);
            for v in [&s.hub, &s.authority] {
                let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                prop_assert!((norm - 1.0).abs() < 1e-9);
                prop_assert!(v.iter().all(|&x| x >= 0.0));
            }
        }
    }
}

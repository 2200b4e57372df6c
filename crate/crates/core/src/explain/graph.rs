use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::aspects::AspectCategory;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::textcnn::ClassifiedSentence;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum NodeKind {
    Category(AspectCategory),
    Place(String),
    User(String),
}

impl NodeKind {
    pub fn id(&self) -> &str {
        match self {
            NodeKind::Category(c) => c.name(),
            NodeKind::Place(p) | NodeKind::User(p) => p,
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            NodeKind::Category(_) => "category",
            NodeKind::Place(_) => "place",
            NodeKind::User(_) => "user",
        }
    }
}

/// Which edges a graph carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphMode {
    /// Category to place edges only.
    Core,
    /// Adds the reverse edges and unit place-place edges for a shared venue category.
    Rank,
    /// Place to category edges (and user to category when users are added).
    Dense,
}

/// A directed weighted graph over category, place and user nodes.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExplanationGraph {
    nodes: Vec<NodeKind>,
    out: Vec<BTreeMap<usize, f64>>,
    #[serde(skip)]
    index: BTreeMap<NodeKind, usize>,
}

impl ExplanationGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, node: NodeKind) -> usize {
        if let Some(&i) = self.index.get(&node) {
            return i;
        }
        let i = self.nodes.len();
        self.index.insert(node.clone(), i);
        self.nodes.push(node);
        self.out.push(BTreeMap::new());
        i
    }

    /// Adds `w` to the edge weight. Self-loops and non-positive weights are ignored.
    pub fn add_edge(&mut self, src: usize, dst: usize, w: f64) {
        if src != dst && w > 0.0 {
            *self.out[src].entry(dst).or_default() += w;
        }
    }

    pub fn set_edge(&mut self, src: usize, dst: usize, w: f64) {
        if src != dst && w > 0.0 {
            self.out[src].insert(dst, w);
        }
    }

    pub fn remove_out_edges(&mut self, src: usize) -> usize {
        let n = self.out[src].len();
        self.out[src].clear();
        n
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> &NodeKind {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[NodeKind] {
        &self.nodes
    }

    pub fn find(&self, node: &NodeKind) -> Option<usize> {
        self.index.get(node).copied()
    }

    pub fn out_edges(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.out[i].iter().map(|(&j, &w)| (j, w))
    }

    pub fn out_weight(&self, i: usize) -> f64 {
        self.out[i].values().sum()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(BTreeMap::len).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(i, m)| m.iter().map(move |(&j, &w)| (i, j, w)))
    }

    pub fn categories(&self) -> impl Iterator<Item = (usize, AspectCategory)> + '_ {
        self.nodes.iter().enumerate().filter_map(|(i, n)| match n {
            NodeKind::Category(c) => Some((i, *c)),
            _ => None,
        })
    }

    /// Edge list as `src<TAB>dst<TAB>weight<TAB>kind` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("src\tdst\tweight\tkind\n");
        for (i, j, w) in self.edges() {
            let (a, b) = (&self.nodes[i], &self.nodes[j]);
            let _ = writeln!(out, "{}\t{}\t{}\t{}_{}", a.id(), b.id(), w, a.tag(), b.tag());
        }
        out
    }
}

/// Positive-sentence counts per (place, category) over the given places.
pub fn positive_counts<'a>(
    classified: &'a [ClassifiedSentence],
    places: &BTreeSet<&str>,
) -> BTreeMap<(&'a str, AspectCategory), usize> {
    let mut counts = BTreeMap::new();
    for s in classified.iter().filter(|s| s.polarity.is_positive() && places.contains(s.place_id.as_str())) {
        for &c in s.categories.iter().filter(|c| **c != AspectCategory::None) {
            *counts.entry((s.place_id.as_str(), c)).or_default() += 1;
        }
    }
    counts
}

/// Links each recommended place to the categories it was positively reviewed
/// for, weighted by the number of such sentences. Places without positive
/// mentions are left out.
pub fn build_explanation_graph(
    places: &[String],
    classified: &[ClassifiedSentence],
    corpus: &Corpus,
    mode: GraphMode,
) -> Result<ExplanationGraph> {
    let wanted: BTreeSet<&str> = places.iter().map(String::as_str).collect();
    let counts = positive_counts(classified, &wanted);
    if counts.is_empty() {
        return Err(Error::EmptyGraph { places: places.len() });
    }
    let mut g = ExplanationGraph::new();
    let cats: BTreeSet<AspectCategory> = counts.keys().map(|(_, c)| *c).collect();
    for c in &cats {
        g.add_node(NodeKind::Category(*c));
    }
    let active: BTreeSet<&str> = counts.keys().map(|(p, _)| *p).collect();
    for p in &active {
        g.add_node(NodeKind::Place(p.to_string()));
    }
    for (&(p, c), &n) in &counts {
        let ci = g.find(&NodeKind::Category(c)).expect("category node");
        let pi = g.find(&NodeKind::Place(p.to_string())).expect("place node");
        match mode {
            GraphMode::Core => g.add_edge(ci, pi, n as f64),
            GraphMode::Rank => {
                g.add_edge(ci, pi, n as f64);
                g.add_edge(pi, ci, n as f64);
            }
            GraphMode::Dense => g.add_edge(pi, ci, n as f64),
        }
    }
    if mode == GraphMode::Rank {
        let by_venue: Vec<(&str, &str)> = active
            .iter()
            .map(|p| (*p, corpus.places.get(*p).map_or("unknown", |pl| pl.category())))
            .collect();
        for (a, va) in &by_venue {
            for (b, vb) in &by_venue {
                if a != b && va == vb {
                    let ai = g.find(&NodeKind::Place(a.to_string())).expect("place");
                    let bi = g.find(&NodeKind::Place(b.to_string())).expect("place");
                    g.set_edge(ai, bi, 1.0);
                }
            }
        }
    }
    Ok(g)
}

/// Adds user nodes with out-edges to the categories of their positive sentences.
pub fn add_user_edges(g: &mut ExplanationGraph, users: &[String], classified: &[ClassifiedSentence]) {
    let wanted: BTreeSet<&str> = users.iter().map(String::as_str).collect();
    let mut counts: BTreeMap<(&str, AspectCategory), usize> = BTreeMap::new();
    for s in classified.iter().filter(|s| s.polarity.is_positive() && wanted.contains(s.user_id.as_str())) {
        for &c in s.categories.iter().filter(|c| **c != AspectCategory::None) {
            *counts.entry((s.user_id.as_str(), c)).or_default() += 1;
        }
    }
    for (&(u, c), &n) in &counts {
        let ci = g.add_node(NodeKind::Category(c));
        let ui = g.add_node(NodeKind::User(u.to_string()));
        g.add_edge(ui, ci, n as f64);
    }
}

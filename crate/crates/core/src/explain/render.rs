use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::hits::BipartiteCore;
use super::pagerank::RankedCategory;
use super::shingles::ShingleBlock;
use super::ExplainMethod;
use crate::aspects::AspectCategory;

/// Explanation sentences per category. Categories without an override use
/// `Popular for <Category>.`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Templates {
    pub overrides: BTreeMap<AspectCategory, String>,
}

impl Default for Templates {
    fn default() -> Self {
        Templates {
            overrides: BTreeMap::from([(AspectCategory::Pet, "Popular due to pet friendliness.".to_string())]),
        }
    }
}

impl Templates {
    pub fn empty() -> Self {
        Templates {
            overrides: BTreeMap::new(),
        }
    }

    pub fn sentence(&self, categories: &[AspectCategory]) -> String {
        let plain: Vec<&str> = categories
            .iter()
            .filter(|c| !self.overrides.contains_key(c))
            .map(|c| c.name())
            .collect();
        let mut parts = Vec::new();
        match plain.as_slice() {
            [] => {}
            [one] => parts.push(format!("Popular for {one}.")),
            [init @ .., last] => parts.push(format!("Popular for {} and {last}.", init.join(", "))),
        }
        parts.extend(categories.iter().filter_map(|c| self.overrides.get(c).cloned()));
        parts.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationBlock {
    pub categories: Vec<AspectCategory>,
    pub places: Vec<String>,
    pub text: String,
}

/// Ordered explanation blocks for one user; the JSON form mirrors the text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationReport {
    pub user_id: String,
    pub method: ExplainMethod,
    pub blocks: Vec<ExplanationBlock>,
}

impl ExplanationReport {
    /// Distinct categories in block order.
    pub fn category_order(&self) -> Vec<AspectCategory> {
        let mut out = Vec::new();
        for c in self.blocks.iter().flat_map(|b| &b.categories) {
            if !out.contains(c) {
                out.push(*c);
            }
        }
        out
    }

    /// Places per category, concatenated over blocks in order without repeats.
    pub fn category_lists(&self) -> BTreeMap<AspectCategory, Vec<String>> {
        let mut out: BTreeMap<AspectCategory, Vec<String>> = BTreeMap::new();
        for b in &self.blocks {
            for c in &b.categories {
                let list = out.entry(*c).or_default();
                for p in &b.places {
                    if !list.contains(p) {
                        list.push(p.clone());
                    }
                }
            }
        }
        out
    }

    /// Categories whose blocks mention `place`, in block order.
    pub fn categories_for_place(&self, place: &str) -> Vec<AspectCategory> {
        let mut out = Vec::new();
        for b in self.blocks.iter().filter(|b| b.places.iter().any(|p| p == place)) {
            for c in &b.categories {
                if !out.contains(c) {
                    out.push(*c);
                }
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let places = if b.places.is_empty() { "none".to_string() } else { b.places.join(", ") };
            let _ = writeln!(out, "Recommended Place: {places}");
            let _ = writeln!(out, "Explanation: {}", b.text);
        }
        out
    }
}

fn block(categories: Vec<AspectCategory>, places: Vec<String>, templates: &Templates) -> ExplanationBlock {
    ExplanationBlock {
        text: templates.sentence(&categories),
        categories,
        places,
    }
}

fn ids(v: &[(String, f64)]) -> Vec<String> {
    v.iter().map(|(p, _)| p.clone()).collect()
}

pub fn blocks_from_cores(cores: &[BipartiteCore], templates: &Templates) -> Vec<ExplanationBlock> {
    cores
        .iter()
        .filter(|c| !c.places.is_empty())
        .map(|c| block(vec![c.category], ids(&c.places), templates))
        .collect()
}

pub fn blocks_from_ranked(ranked: &[RankedCategory], templates: &Templates) -> Vec<ExplanationBlock> {
    ranked
        .iter()
        .filter(|r| !r.places.is_empty())
        .map(|r| block(vec![r.category], ids(&r.places), templates))
        .collect()
}

/// Shingle blocks keep their place list even when empty, so a user without
/// matching places still sees their own shingles.
pub fn blocks_from_shingles(blocks: &[ShingleBlock], templates: &Templates) -> Vec<ExplanationBlock> {
    blocks
        .iter()
        .map(|b| block(b.categories.clone(), ids(&b.places), templates))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use AspectCategory::*;

    fn core(order: usize, category: AspectCategory, places: &[&str]) -> BipartiteCore {
        BipartiteCore {
            order,
            category,
            places: places.iter().map(|p| (p.to_string(), 0.5)).collect(),
        }
    }

    fn report(blocks: Vec<ExplanationBlock>) -> ExplanationReport {
        ExplanationReport {
            user_id: "u".into(),
            method: ExplainMethod::Core,
            blocks,
        }
    }

    #[test]
    fn food_core_text() {
        let t = Templates::default();
        let r = report(blocks_from_cores(&[core(1, Food, &["P1", "P2"]), core(2, Service, &[])], &t));
        assert_eq!(r.blocks.len(), 1);
        assert_eq!(r.to_text(), "Recommended Place: P1, P2\nExplanation: Popular for Food.\n");
    }

    #[test]
    fn pet_override_and_multi_category() {
        let t = Templates::default();
        assert_eq!(t.sentence(&[Pet]), "Popular due to pet friendliness.");
        assert_eq!(t.sentence(&[Price, Food, Service]), "Popular for Price, Food and Service.");
        assert_eq!(t.sentence(&[Food, Pet]), "Popular for Food. Popular due to pet friendliness.");
        assert_eq!(Templates::empty().sentence(&[Pet]), "Popular for Pet.");
    }

    #[test]
    fn orderings_and_lists() {
        let t = Templates::default();
        let r = report(blocks_from_cores(
            &[core(1, Food, &["P1", "P2"]), core(2, Price, &["P2", "P3"]), core(3, Pet, &["P3"])],
            &t,
        ));
        assert_eq!(r.category_order(), vec![Food, Price, Pet]);
        assert_eq!(r.categories_for_place("P3"), vec![Price, Pet]);
        assert_eq!(r.category_lists()[&Price], vec!["P2", "P3"]);
        let text = r.to_text();
        assert_eq!(text, r.clone().to_text());
        assert_eq!(text.matches("Recommended Place:").count(), 3);
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<ExplanationReport>(&json).unwrap(), r);
    }
}

//! Convolutional sentence classifier, one binary model per aspect category.
//!
//! Embedded tokens pass through a wide convolution (zero padding of
//! `width - 1` rows on each side, stride 1) and ReLU, then k-max pooling
//! that keeps the selected activations in their original order. A dense
//! layer maps the pooled vector to two logits and a softmax.

mod model;
mod train;

use std::collections::BTreeSet;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aspects::{AspectCategory, LabeledSet};
use crate::corpus::TokenSeq;
use crate::error::{Error, Result};
use crate::sentiment::Polarity;

pub use model::{
    bce_from_margin, k_max_indices, max_pool, sigmoid, CnnConfig, CnnModel, ConvFilter, Grads, Vocab, PAD_ID,
    UNK_ID,
};
pub use train::{gradient_check, train, train_examples, training_accuracy, GradCheck, TrainConfig};

/// The per-category model set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryModels {
    pub models: Vec<CnnModel>,
    /// Categories without both positive and negative training sentences.
    pub skipped: Vec<AspectCategory>,
}

impl CategoryModels {
    pub fn get(&self, cat: AspectCategory) -> Option<&CnnModel> {
        self.models.iter().find(|m| m.category == cat)
    }

    pub fn probabilities(&self, seq: &TokenSeq) -> Vec<(AspectCategory, f64)> {
        self.models.iter().map(|m| (m.category, m.predict(seq))).collect()
    }
}

/// Seed offset so each category's model draws an independent stream.
fn category_seed(seed: u64, cat: AspectCategory) -> u64 {
    seed.wrapping_add((cat.index() as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Trains one model per real category, in parallel. Categories whose
/// training data has a single class are skipped and listed.
pub fn train_category_models(
    labeled: &LabeledSet,
    cfg: &CnnConfig,
    hyper: &TrainConfig,
    pretrained: Option<&str>,
) -> Result<CategoryModels> {
    cfg.validate()?;
    if labeled.is_empty() {
        return Err(Error::SingleClass("every category (no labeled sentences)".into()));
    }
    let vocab = Vocab::build(labeled.sentences.iter().map(|s| &s.seq), &labeled.pad_token);
    let results: Vec<Result<Option<CnnModel>>> = AspectCategory::ALL
        .par_iter()
        .map(|&cat| {
            let seed = category_seed(hyper.seed, cat);
            let mut model = CnnModel::new(cat, vocab.clone(), cfg, seed)?;
            if let Some(text) = pretrained {
                model.apply_pretrained(text, "embeddings")?;
            }
            let data: Vec<(Vec<usize>, bool)> = labeled
                .sentences
                .iter()
                .map(|s| (model.encode(&s.seq), s.has(cat)))
                .collect();
            let hyper = TrainConfig { seed, ..hyper.clone() };
            match train_examples(model, &data, &hyper) {
                Ok(m) => Ok(Some(m)),
                Err(Error::SingleClass(_)) => {
                    warn!("skipping {cat}: training data has a single class");
                    Ok(None)
                }
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut models = Vec::new();
    let mut skipped = Vec::new();
    for (cat, r) in AspectCategory::ALL.iter().zip(results) {
        match r? {
            Some(m) => models.push(m),
            None => skipped.push(*cat),
        }
    }
    Ok(CategoryModels { models, skipped })
}

/// Categories whose probability reaches 0.5; `{None}` when there are none.
pub fn classify_sentence(models: &CategoryModels, seq: &TokenSeq) -> BTreeSet<AspectCategory> {
    threshold_labels(models.probabilities(seq))
}

fn threshold_labels(probs: Vec<(AspectCategory, f64)>) -> BTreeSet<AspectCategory> {
    let set: BTreeSet<AspectCategory> = probs.into_iter().filter(|(_, p)| *p >= 0.5).map(|(c, _)| c).collect();
    if set.is_empty() {
        BTreeSet::from([AspectCategory::None])
    } else {
        set
    }
}

/// A sentence with classifier-assigned categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedSentence {
    pub review_id: String,
    pub user_id: String,
    pub place_id: String,
    pub index: usize,
    pub categories: BTreeSet<AspectCategory>,
    pub polarity: Polarity,
}

/// Classifies every sentence of a labeled set, preserving order.
pub fn classify_labeled(models: &CategoryModels, labeled: &LabeledSet) -> Vec<ClassifiedSentence> {
    labeled
        .sentences
        .par_iter()
        .map(|s| ClassifiedSentence {
            review_id: s.review_id.clone(),
            user_id: s.user_id.clone(),
            place_id: s.place_id.clone(),
            index: s.index,
            categories: classify_sentence(models, &s.seq),
            polarity: s.polarity,
        })
        .collect()
}

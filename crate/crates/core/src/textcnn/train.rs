use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{bce_from_margin, CnnModel, Grads};
use crate::corpus::TokenSeq;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch: 64,
            lr: 0.05,
            seed: 7,
        }
    }
}

/// Mini-batch gradient descent on binary cross-entropy. Records the mean
/// training loss of every epoch in `loss_history`.
pub fn train_examples(mut model: CnnModel, data: &[(Vec<usize>, bool)], cfg: &TrainConfig) -> Result<CnnModel> {
    let positives = data.iter().filter(|(_, y)| *y).count();
    if positives == 0 || positives == data.len() {
        return Err(Error::SingleClass(model.category.to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let batch = cfg.batch.max(1);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            let mut g = Grads::zeros(&model);
            for &i in chunk {
                let (ids, y) = &data[i];
                let label = f64::from(u8::from(*y));
                let mask = model.dropout_mask(&mut rng);
                let t = model.trace(ids, mask);
                let loss = bce_from_margin(t.margin, label);
                if !loss.is_finite() {
                    return Err(Error::Diverged { epoch, row: i, loss });
                }
                total += loss;
                model.backward(&t, label, &mut g);
            }
            model.apply(&g, cfg.lr, 1.0 / chunk.len() as f64);
        }
        model.loss_history.push(total / data.len() as f64);
    }
    Ok(model)
}

/// Trains `model` on its own category: a sentence is positive when its label
/// set contains the model's category.
pub fn train(model: CnnModel, sentences: &[(TokenSeq, bool)], cfg: &TrainConfig) -> Result<CnnModel> {
    let data: Vec<(Vec<usize>, bool)> = sentences.iter().map(|(s, y)| (model.encode(s), *y)).collect();
    train_examples(model, &data, cfg)
}

pub fn training_accuracy(model: &CnnModel, data: &[(Vec<usize>, bool)]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let hits = data
        .iter()
        .filter(|(ids, y)| (model.trace(ids, None).prob() >= 0.5) == *y)
        .count();
    hits as f64 / data.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Coordinates skipped because a perturbation crossed a ReLU or pooling
    /// boundary, where the loss is not differentiable.
    pub kinks: usize,
}

fn rel_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

/// Compares the analytic gradient of every trainable parameter against
/// central differences with step `eps`. Dropout is ignored.
pub fn gradient_check(model: &CnnModel, seq: &TokenSeq, label: bool, eps: f64) -> GradCheck {
    let ids = model.encode(seq);
    let y = f64::from(u8::from(label));
    let analytic = model.gradients(seq, label).flatten(model);
    let base = model.trace(&ids, None);
    let base_sig = base.signature();
    let mut work = model.clone();
    let mut max_rel_error = 0.0f64;
    let (mut checked, mut kinks) = (0, 0);
    for (idx, &a) in analytic.iter().enumerate() {
        let orig = *work.param_slots()[idx];
        *work.param_slots()[idx] = orig + eps;
        let plus = work.trace(&ids, None);
        *work.param_slots()[idx] = orig - eps;
        let minus = work.trace(&ids, None);
        *work.param_slots()[idx] = orig;
        if plus.signature() != base_sig || minus.signature() != base_sig {
            kinks += 1;
            continue;
        }
        let n = (bce_from_margin(plus.margin, y) - bce_from_margin(minus.margin, y)) / (2.0 * eps);
        max_rel_error = max_rel_error.max(rel_error(a, n));
        checked += 1;
    }
    GradCheck {
        max_rel_error,
        checked,
        kinks,
    }
}

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textcnn::sigmoid;

/// A sparse feature vector of fixed dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVec {
    pub dim: usize,
    /// `(index, value)` pairs with strictly increasing indices and no zeros.
    pub entries: Vec<(usize, f64)>,
}

impl SparseVec {
    pub fn from_dense(x: &[f64]) -> Self {
        SparseVec {
            dim: x.len(),
            entries: x
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, *v))
                .collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }
}

/// Second-order factorization machine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmModel {
    pub n: usize,
    pub k: usize,
    pub w0: f64,
    pub w: Vec<f64>,
    /// `n x k`, row-major.
    pub v: Vec<f64>,
    #[serde(default)]
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FmConfig {
    pub k: usize,
    pub lr: f64,
    pub l2: f64,
    pub epochs: usize,
    pub init_std: f64,
    pub seed: u64,
}

impl Default for FmConfig {
    fn default() -> Self {
        FmConfig {
            k: 8,
            lr: 0.05,
            l2: 1e-4,
            epochs: 50,
            init_std: 0.01,
            seed: 7,
        }
    }
}

impl FmModel {
    pub fn zeros(n: usize, k: usize) -> Self {
        FmModel {
            n,
            k,
            w0: 0.0,
            w: vec![0.0; n],
            v: vec![0.0; n * k],
            loss_history: Vec::new(),
        }
    }

    /// Zero biases and factors drawn from `N(0, init_std^2)`.
    pub fn init(n: usize, cfg: &FmConfig) -> Result<Self> {
        if cfg.k == 0 {
            return Err(Error::InvalidConfig("fm k must be at least 1".into()));
        }
        let normal = Normal::new(0.0, cfg.init_std)
            .map_err(|e| Error::InvalidConfig(format!("fm init_std: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut m = Self::zeros(n, cfg.k);
        for x in &mut m.v {
            *x = normal.sample(&mut rng);
        }
        Ok(m)
    }

    fn vrow(&self, i: usize) -> &[f64] {
        &self.v[i * self.k..(i + 1) * self.k]
    }

    fn check(&self, x: &SparseVec) -> Result<()> {
        if x.dim != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: x.dim,
            });
        }
        Ok(())
    }

    /// `w0 + sum w_i x_i + 1/2 sum_f [(sum_i v_if x_i)^2 - sum_i v_if^2 x_i^2]`,
    /// plus the per-factor sums `s_f` used by the gradient.
    fn raw(&self, x: &SparseVec) -> (f64, Vec<f64>) {
        let mut y = self.w0;
        let mut s = vec![0.0; self.k];
        let mut sq = vec![0.0; self.k];
        for &(i, xi) in &x.entries {
            y += self.w[i] * xi;
            for (f, &vif) in self.vrow(i).iter().enumerate() {
                s[f] += vif * xi;
                sq[f] += vif * vif * xi * xi;
            }
        }
        y += 0.5 * s.iter().zip(&sq).map(|(a, b)| a * a - b).sum::<f64>();
        (y, s)
    }

    /// Raw score in O(kn).
    pub fn predict(&self, x: &SparseVec) -> Result<f64> {
        self.check(x)?;
        Ok(self.raw(x).0)
    }

    /// Logistic link of the raw score.
    pub fn predict_proba(&self, x: &SparseVec) -> Result<f64> {
        self.predict(x).map(sigmoid)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: FmModel = serde_json::from_str(text)?;
        if m.w.len() != m.n {
            return Err(Error::DimensionMismatch { expected: m.n, actual: m.w.len() });
        }
        if m.v.len() != m.n * m.k {
            return Err(Error::DimensionMismatch { expected: m.n * m.k, actual: m.v.len() });
        }
        Ok(m)
    }
}

/// Logistic loss of raw score `y_hat` against a 0/1 target.
pub fn logistic_loss(y_hat: f64, y: f64) -> f64 {
    y_hat.max(0.0) + (-y_hat.abs()).exp().ln_1p() - y * y_hat
}

/// Per-row objective: logistic loss plus `l2/2 (|w|^2 + |V|^2)`.
pub fn row_objective(m: &FmModel, x: &SparseVec, y: f64, l2: f64) -> f64 {
    let reg: f64 = m.w.iter().chain(&m.v).map(|p| p * p).sum();
    logistic_loss(m.raw(x).0, y) + 0.5 * l2 * reg
}

/// Gradient of [`row_objective`], flattened as `[w0, w, V]`.
pub fn row_gradient(m: &FmModel, x: &SparseVec, y: f64, l2: f64) -> Vec<f64> {
    let (y_hat, s) = m.raw(x);
    let g = sigmoid(y_hat) - y;
    let mut out = Vec::with_capacity(1 + m.n + m.n * m.k);
    out.push(g);
    out.extend(m.w.iter().map(|w| l2 * w));
    out.extend(m.v.iter().map(|v| l2 * v));
    for &(i, xi) in &x.entries {
        out[1 + i] += g * xi;
        for f in 0..m.k {
            let vif = m.v[i * m.k + f];
            out[1 + m.n + i * m.k + f] += g * xi * (s[f] - vif * xi);
        }
    }
    out
}

fn sgd_step(m: &mut FmModel, x: &SparseVec, y: f64, lr: f64, l2: f64) -> f64 {
    let (y_hat, s) = m.raw(x);
    let loss = logistic_loss(y_hat, y);
    let g = sigmoid(y_hat) - y;
    m.w0 -= lr * g;
    // shrink every coefficient, then add the data term on active features
    let decay = 1.0 - lr * l2;
    m.w.iter_mut().for_each(|w| *w *= decay);
    let old: Vec<(usize, Vec<f64>)> = x.entries.iter().map(|&(i, _)| (i, m.vrow(i).to_vec())).collect();
    m.v.iter_mut().for_each(|v| *v *= decay);
    for (&(i, xi), (_, vi)) in x.entries.iter().zip(&old) {
        m.w[i] -= lr * g * xi;
        for f in 0..m.k {
            m.v[i * m.k + f] -= lr * g * xi * (s[f] - vi[f] * xi);
        }
    }
    loss
}

/// Seeded SGD on the L2-regularized logistic loss. Each epoch visits the rows
/// in a fresh shuffled order; the mean loss per epoch is recorded.
pub fn fm_train(rows: &[(SparseVec, u8)], n: usize, cfg: &FmConfig) -> Result<FmModel> {
    let pos = rows.iter().filter(|(_, y)| *y == 1).count();
    if pos == 0 || pos == rows.len() {
        return Err(Error::SingleClass("check-in flag".into()));
    }
    let mut m = FmModel::init(n, cfg)?;
    for (x, _) in rows {
        m.check(x)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..rows.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &r in &order {
            let (x, y) = &rows[r];
            let loss = sgd_step(&mut m, x, f64::from(*y), cfg.lr, cfg.l2);
            if !loss.is_finite() || !m.w0.is_finite() {
                return Err(Error::Diverged { epoch, row: r, loss });
            }
            total += loss;
        }
        m.loss_history.push(total / rows.len() as f64);
    }
    Ok(m)
}

/// Parameter `idx` in `[w0, w, V]` order.
fn param_mut(m: &mut FmModel, idx: usize) -> &mut f64 {
    if idx == 0 {
        &mut m.w0
    } else if idx <= m.n {
        &mut m.w[idx - 1]
    } else {
        &mut m.v[idx - 1 - m.n]
    }
}

/// Largest relative difference between [`row_gradient`] and central
/// differences of [`row_objective`].
pub fn fm_gradient_check(m: &FmModel, x: &SparseVec, y: f64, l2: f64, eps: f64) -> f64 {
    let analytic = row_gradient(m, x, y, l2);
    let mut work = m.clone();
    let mut worst = 0.0f64;
    for (idx, &a) in analytic.iter().enumerate() {
        let orig = *param_mut(&mut work, idx);
        *param_mut(&mut work, idx) = orig + eps;
        let plus = row_objective(&work, x, y, l2);
        *param_mut(&mut work, idx) = orig - eps;
        let minus = row_objective(&work, x, y, l2);
        *param_mut(&mut work, idx) = orig;
        let n = (plus - minus) / (2.0 * eps);
        worst = worst.max((a - n).abs() / a.abs().max(n.abs()).max(1e-6));
    }
    worst
}

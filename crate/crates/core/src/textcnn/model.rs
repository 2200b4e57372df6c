use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::aspects::AspectCategory;
use crate::corpus::TokenSeq;
use crate::error::{Error, Result};

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
const UNK_TOKEN: &str = "<unk>";
const EMBEDDING_INIT: f64 = 0.25;

/// Token-to-row mapping. Row 0 is padding, row 1 is the unknown token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabRepr", into = "VocabRepr")]
pub struct Vocab {
    pad: String,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    pad: String,
    tokens: Vec<String>,
}

impl From<VocabRepr> for Vocab {
    fn from(r: VocabRepr) -> Self {
        let index = r.tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocab {
            pad: r.pad,
            tokens: r.tokens,
            index,
        }
    }
}

impl From<Vocab> for VocabRepr {
    fn from(v: Vocab) -> Self {
        VocabRepr {
            pad: v.pad,
            tokens: v.tokens,
        }
    }
}

impl Vocab {
    /// Sorted distinct content tokens after the two reserved rows.
    pub fn build<'a, I: IntoIterator<Item = &'a TokenSeq>>(seqs: I, pad: &str) -> Self {
        let mut set = std::collections::BTreeSet::new();
        for s in seqs {
            set.extend(s.content().iter().filter(|t| *t != pad && *t != UNK_TOKEN).cloned());
        }
        let tokens = [pad.to_string(), UNK_TOKEN.to_string()]
            .into_iter()
            .chain(set)
            .collect();
        VocabRepr {
            pad: pad.to_string(),
            tokens,
        }
        .into()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 2
    }

    pub fn id(&self, token: &str) -> usize {
        if token == self.pad {
            return PAD_ID;
        }
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn encode(&self, seq: &TokenSeq) -> Vec<usize> {
        seq.tokens.iter().map(|t| self.id(t)).collect()
    }
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CnnConfig {
    pub dim: usize,
    pub filters: usize,
    pub widths: Vec<usize>,
    pub k_max: usize,
    pub dropout: f64,
    pub max_len: usize,
}

impl Default for CnnConfig {
    fn default() -> Self {
        CnnConfig {
            dim: 384,
            filters: 128,
            widths: vec![3, 4, 5],
            k_max: 1,
            dropout: 0.5,
            max_len: 32,
        }
    }
}

impl CnnConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.dim == 0 || self.filters == 0 || self.widths.is_empty() || self.k_max == 0 {
            return bad("dim, filters, widths and k_max must be non-zero".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must be in [0,1), got {}", self.dropout));
        }
        if self.widths.iter().any(|&w| w == 0 || w > self.max_len) {
            return bad(format!("filter widths must be in 1..={}", self.max_len));
        }
        if self.k_max > self.max_len {
            return bad(format!("k_max {} exceeds max_len {}", self.k_max, self.max_len));
        }
        Ok(())
    }

    /// Widths assigned round-robin so the filter count splits evenly.
    pub fn filter_widths(&self) -> Vec<usize> {
        let per = self.filters / self.widths.len();
        let extra = self.filters % self.widths.len();
        self.widths
            .iter()
            .enumerate()
            .flat_map(|(i, &w)| std::iter::repeat_n(w, per + usize::from(i < extra)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvFilter {
    pub width: usize,
    /// `width x dim`, row-major.
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// One-vs-rest sentence classifier for a single aspect category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnModel {
    pub category: AspectCategory,
    pub vocab: Vocab,
    pub dim: usize,
    pub max_len: usize,
    /// `vocab.len() x dim`, row-major. Row `PAD_ID` stays zero.
    pub embeddings: Vec<f64>,
    pub filters: Vec<ConvFilter>,
    pub k_max: usize,
    /// `2 x pooled_dim`, row-major; row 1 is the positive class.
    pub dense_w: Vec<f64>,
    pub dense_b: [f64; 2],
    pub dropout: f64,
    #[serde(default)]
    pub loss_history: Vec<f64>,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub(crate) struct Trace {
    pub ids: Vec<usize>,
    pub pre: Vec<Vec<f64>>,
    pub pool_idx: Vec<Vec<usize>>,
    pub pooled: Vec<f64>,
    pub mask: Option<Vec<f64>>,
    pub hidden: Vec<f64>,
    /// Positive-minus-negative logit.
    pub margin: f64,
}

impl Trace {
    pub fn prob(&self) -> f64 {
        sigmoid(self.margin)
    }

    /// ReLU pattern and pooled positions; a change means a kink was crossed.
    pub fn signature(&self) -> (Vec<bool>, &[Vec<usize>]) {
        (self.pre.iter().flatten().map(|&v| v > 0.0).collect(), &self.pool_idx)
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of `sigmoid(margin)` against `label`, computed stably.
pub fn bce_from_margin(margin: f64, label: f64) -> f64 {
    let softplus = margin.max(0.0) + (-margin.abs()).exp().ln_1p();
    softplus - label * margin
}

/// Indices of the `k` largest values in original order; ties go to the
/// earlier position.
pub fn k_max_indices(map: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..map.len()).collect();
    order.sort_by(|&a, &b| map[b].total_cmp(&map[a]).then(a.cmp(&b)));
    order.truncate(k);
    order.sort_unstable();
    order
}

pub fn max_pool(maps: &[Vec<f64>], k_max: usize) -> Vec<f64> {
    maps.iter()
        .flat_map(|m| k_max_indices(m, k_max).into_iter().map(move |i| m[i]))
        .collect()
}

/// Parameter gradients. Embedding rows are stored sparsely.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Grads {
    pub embeddings: BTreeMap<usize, Vec<f64>>,
    pub filter_w: Vec<Vec<f64>>,
    pub filter_b: Vec<f64>,
    pub dense_w: Vec<f64>,
    pub dense_b: [f64; 2],
}

impl Grads {
    pub fn zeros(model: &CnnModel) -> Self {
        Grads {
            embeddings: BTreeMap::new(),
            filter_w: model.filters.iter().map(|f| vec![0.0; f.weights.len()]).collect(),
            filter_b: vec![0.0; model.filters.len()],
            dense_w: vec![0.0; model.dense_w.len()],
            dense_b: [0.0; 2],
        }
    }

    /// Gradient values in [`CnnModel::param_slots`] order.
    pub fn flatten(&self, model: &CnnModel) -> Vec<f64> {
        let mut out = Vec::with_capacity(model.param_count());
        for row in 1..model.vocab.len() {
            match self.embeddings.get(&row) {
                Some(g) => out.extend_from_slice(g),
                None => out.extend(std::iter::repeat_n(0.0, model.dim)),
            }
        }
        for (w, b) in self.filter_w.iter().zip(&self.filter_b) {
            out.extend_from_slice(w);
            out.push(*b);
        }
        out.extend_from_slice(&self.dense_w);
        out.extend_from_slice(&self.dense_b);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.embeddings
            .values()
            .flatten()
            .chain(self.filter_w.iter().flatten())
            .chain(&self.filter_b)
            .chain(&self.dense_w)
            .chain(&self.dense_b)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

impl CnnModel {
    /// Randomly initialized model: embeddings uniform in `[-0.25, 0.25]`,
    /// filter and dense weights uniform in `±1/sqrt(fan_in)`, zero biases.
    pub fn new(category: AspectCategory, vocab: Vocab, cfg: &CnnConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = cfg.dim;
        let mut embeddings = vec![0.0; vocab.len() * dim];
        for v in &mut embeddings[dim..] {
            *v = rng.random_range(-EMBEDDING_INIT..=EMBEDDING_INIT);
        }
        let filters: Vec<ConvFilter> = cfg
            .filter_widths()
            .into_iter()
            .map(|width| {
                let lim = 1.0 / ((width * dim) as f64).sqrt();
                ConvFilter {
                    width,
                    weights: (0..width * dim).map(|_| rng.random_range(-lim..=lim)).collect(),
                    bias: 0.0,
                }
            })
            .collect();
        let pooled = cfg.k_max * filters.len();
        let lim = 1.0 / (pooled as f64).sqrt();
        let dense_w = (0..2 * pooled).map(|_| rng.random_range(-lim..=lim)).collect();
        Ok(CnnModel {
            category,
            vocab,
            dim,
            max_len: cfg.max_len,
            embeddings,
            filters,
            k_max: cfg.k_max,
            dense_w,
            dense_b: [0.0; 2],
            dropout: cfg.dropout,
            loss_history: Vec::new(),
        })
    }

    pub fn pooled_dim(&self) -> usize {
        self.k_max * self.filters.len()
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.loss_history.last().copied()
    }

    pub fn embedding(&self, id: usize) -> &[f64] {
        &self.embeddings[id * self.dim..(id + 1) * self.dim]
    }

    pub fn encode(&self, seq: &TokenSeq) -> Vec<usize> {
        self.vocab.encode(seq)
    }

    /// Overwrites embedding rows from a text file of `token v1 ... vD` lines.
    /// Returns the number of rows replaced.
    pub fn apply_pretrained(&mut self, text: &str, path: &str) -> Result<usize> {
        let mut hits = 0;
        for (i, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            let Some(tok) = parts.next() else { continue };
            let vals: Vec<f64> = parts
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    path: path.to_string(),
                    line: i + 1,
                    message: format!("bad float: {e}"),
                })?;
            if vals.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    actual: vals.len(),
                });
            }
            let id = self.vocab.id(tok);
            if id == PAD_ID || (id == UNK_ID && tok != UNK_TOKEN) {
                continue;
            }
            self.embeddings[id * self.dim..(id + 1) * self.dim].copy_from_slice(&vals);
            hits += 1;
        }
        Ok(hits)
    }

    /// Pre-activation wide convolution; each map has length `L + width - 1`.
    fn conv_pre(&self, ids: &[usize]) -> Vec<Vec<f64>> {
        let len = ids.len();
        let d = self.dim;
        self.filters
            .iter()
            .map(|f| {
                let r = f.width;
                (0..len + r - 1)
                    .map(|i| {
                        let mut acc = f.bias;
                        for s in 0..r {
                            // padded row i+s corresponds to token i+s-(r-1)
                            let Some(j) = (i + s).checked_sub(r - 1).filter(|&j| j < len) else {
                                continue;
                            };
                            let e = self.embedding(ids[j]);
                            let w = &f.weights[s * d..(s + 1) * d];
                            acc += w.iter().zip(e).map(|(a, b)| a * b).sum::<f64>();
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    /// Rectified feature maps, one per filter.
    pub fn conv_forward(&self, seq: &TokenSeq) -> Vec<Vec<f64>> {
        relu_maps(self.conv_pre(&self.encode(seq)))
    }

    pub(crate) fn trace(&self, ids: &[usize], mask: Option<Vec<f64>>) -> Trace {
        let pre = self.conv_pre(ids);
        let maps = relu_maps(pre.clone());
        let pool_idx: Vec<Vec<usize>> = maps.iter().map(|m| k_max_indices(m, self.k_max)).collect();
        let pooled: Vec<f64> = maps
            .iter()
            .zip(&pool_idx)
            .flat_map(|(m, idx)| idx.iter().map(move |&i| m[i]))
            .collect();
        let hidden: Vec<f64> = match &mask {
            Some(m) => pooled.iter().zip(m).map(|(h, m)| h * m).collect(),
            None => pooled.clone(),
        };
        let p = hidden.len();
        let logit = |c: usize| {
            self.dense_b[c] + self.dense_w[c * p..(c + 1) * p].iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>()
        };
        let margin = logit(1) - logit(0);
        Trace {
            ids: ids.to_vec(),
            pre,
            pool_idx,
            pooled,
            mask,
            hidden,
            margin,
        }
    }

    /// Inverted-dropout mask drawn from `rng`.
    pub(crate) fn dropout_mask<R: Rng>(&self, rng: &mut R) -> Option<Vec<f64>> {
        if self.dropout <= 0.0 {
            return None;
        }
        let keep = 1.0 - self.dropout;
        Some(
            (0..self.pooled_dim())
                .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                .collect(),
        )
    }

    /// Pooled feature vector (inference mode).
    pub fn features(&self, seq: &TokenSeq) -> Vec<f64> {
        self.trace(&self.encode(seq), None).pooled
    }

    /// Deterministic inference probability of the positive class.
    pub fn predict(&self, seq: &TokenSeq) -> f64 {
        self.trace(&self.encode(seq), None).prob()
    }

    /// Probability with dropout applied when `train_mode`; the mask is drawn
    /// from a generator seeded with `seed`.
    pub fn forward(&self, seq: &TokenSeq, train_mode: bool, seed: u64) -> f64 {
        let mask = if train_mode {
            self.dropout_mask(&mut ChaCha8Rng::seed_from_u64(seed))
        } else {
            None
        };
        self.trace(&self.encode(seq), mask).prob()
    }

    pub fn loss(&self, ids: &[usize], label: f64) -> f64 {
        bce_from_margin(self.trace(ids, None).margin, label)
    }

    /// Adds the loss gradient of one traced example to `g`.
    pub(crate) fn backward(&self, t: &Trace, label: f64, g: &mut Grads) {
        let p = self.pooled_dim();
        let d = self.dim;
        let dm = t.prob() - label;
        // margin = z1 - z0
        let dz = [-dm, dm];
        for c in 0..2 {
            g.dense_b[c] += dz[c];
            for (gw, h) in g.dense_w[c * p..(c + 1) * p].iter_mut().zip(&t.hidden) {
                *gw += dz[c] * h;
            }
        }
        for (k, f) in self.filters.iter().enumerate() {
            let r = f.width;
            for (q, &i) in t.pool_idx[k].iter().enumerate() {
                let j = k * self.k_max + q;
                if t.pre[k][i] <= 0.0 {
                    continue;
                }
                let mut dh = self.dense_w[j] * dz[0] + self.dense_w[p + j] * dz[1];
                if let Some(m) = &t.mask {
                    dh *= m[j];
                }
                if dh == 0.0 {
                    continue;
                }
                g.filter_b[k] += dh;
                for s in 0..r {
                    let Some(pos) = (i + s).checked_sub(r - 1).filter(|&x| x < t.ids.len()) else {
                        continue;
                    };
                    let id = t.ids[pos];
                    let w = &f.weights[s * d..(s + 1) * d];
                    let e = self.embedding(id);
                    for (gw, ev) in g.filter_w[k][s * d..(s + 1) * d].iter_mut().zip(e) {
                        *gw += dh * ev;
                    }
                    if id != PAD_ID {
                        let ge = g.embeddings.entry(id).or_insert_with(|| vec![0.0; d]);
                        for (gv, wv) in ge.iter_mut().zip(w) {
                            *gv += dh * wv;
                        }
                    }
                }
            }
        }
    }

    /// Loss gradient of a single example without dropout.
    pub fn gradients(&self, seq: &TokenSeq, label: bool) -> Grads {
        let t = self.trace(&self.encode(seq), None);
        let mut g = Grads::zeros(self);
        self.backward(&t, f64::from(u8::from(label)), &mut g);
        g
    }

    /// `theta -= lr * scale * g`. The padding row is never touched.
    pub(crate) fn apply(&mut self, g: &Grads, lr: f64, scale: f64) {
        let step = lr * scale;
        let d = self.dim;
        for (&row, gr) in &g.embeddings {
            debug_assert_ne!(row, PAD_ID);
            for (v, gv) in self.embeddings[row * d..(row + 1) * d].iter_mut().zip(gr) {
                *v -= step * gv;
            }
        }
        for (f, (gw, gb)) in self.filters.iter_mut().zip(g.filter_w.iter().zip(&g.filter_b)) {
            for (w, gv) in f.weights.iter_mut().zip(gw) {
                *w -= step * gv;
            }
            f.bias -= step * gb;
        }
        for (w, gv) in self.dense_w.iter_mut().zip(&g.dense_w) {
            *w -= step * gv;
        }
        for c in 0..2 {
            self.dense_b[c] -= step * g.dense_b[c];
        }
    }

    pub fn param_count(&self) -> usize {
        (self.vocab.len() - 1) * self.dim
            + self.filters.iter().map(|f| f.weights.len() + 1).sum::<usize>()
            + self.dense_w.len()
            + 2
    }

    /// Mutable references to every trainable parameter: embeddings (without
    /// the padding row), then each filter's weights and bias, then the dense
    /// layer.
    pub fn param_slots(&mut self) -> Vec<&mut f64> {
        let d = self.dim;
        let mut out: Vec<&mut f64> = self.embeddings[d..].iter_mut().collect();
        for f in &mut self.filters {
            out.extend(f.weights.iter_mut());
            out.push(&mut f.bias);
        }
        out.extend(self.dense_w.iter_mut());
        out.extend(self.dense_b.iter_mut());
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: CnnModel = serde_json::from_str(text)?;
        m.check_shapes()?;
        Ok(m)
    }

    fn check_shapes(&self) -> Result<()> {
        let mismatch = |expected, actual| Err(Error::DimensionMismatch { expected, actual });
        if self.embeddings.len() != self.vocab.len() * self.dim {
            return mismatch(self.vocab.len() * self.dim, self.embeddings.len());
        }
        for f in &self.filters {
            if f.weights.len() != f.width * self.dim {
                return mismatch(f.width * self.dim, f.weights.len());
            }
        }
        if self.dense_w.len() != 2 * self.pooled_dim() {
            return mismatch(2 * self.pooled_dim(), self.dense_w.len());
        }
        Ok(())
    }
}

fn relu_maps(mut pre: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    for v in pre.iter_mut().flatten() {
        *v = v.max(0.0);
    }
    pre
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{preprocess, WordList};
    use proptest::prelude::*;

    fn seq(tokens: &[&str], max_len: usize) -> TokenSeq {
        preprocess(tokens, &WordList::default(), "<pad>", max_len)
    }

    fn tiny(seed: u64) -> CnnModel {
        let words = ["good", "food", "bad", "dog", "view"];
        let s = seq(&words, 8);
        let vocab = Vocab::build([&s], "<pad>");
        let cfg = CnnConfig {
            dim: 4,
            filters: 2,
            widths: vec![2, 3],
            k_max: 2,
            dropout: 0.0,
            max_len: 8,
        };
        CnnModel::new(AspectCategory::Food, vocab, &cfg, seed).unwrap()
    }

    #[test]
    fn vocab_reserves_pad_and_unk() {
        let s = seq(&["b", "a"], 4);
        let v = Vocab::build([&s], "<pad>");
        assert_eq!(v.id("<pad>"), PAD_ID);
        assert_eq!(v.id("zzz"), UNK_ID);
        assert_eq!(v.id("a"), 2);
        assert_eq!(v.encode(&s), vec![3, 2, 0, 0]);
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(serde_json::from_str::<Vocab>(&json).unwrap(), v);
    }

    #[test]
    fn filter_widths_split_evenly() {
        let c = CnnConfig::default();
        let w = c.filter_widths();
        assert_eq!(w.len(), 128);
        assert_eq!(w.iter().filter(|&&x| x == 3).count(), 43);
        assert_eq!(w.iter().filter(|&&x| x == 5).count(), 42);
    }

    #[test]
    fn zero_inputs_give_zero_maps() {
        let mut m = tiny(1);
        m.embeddings.iter_mut().for_each(|v| *v = 0.0);
        let s = seq(&["good", "food"], 8);
        assert!(m.conv_forward(&s).iter().flatten().all(|&v| v == 0.0));
        for f in &mut m.filters {
            f.bias = -1.0;
        }
        assert!(m.conv_forward(&s).iter().flatten().all(|&v| v == 0.0));
    }

    /// Direct evaluation of the wide convolution, written independently.
    fn naive_conv(m: &CnnModel, ids: &[usize]) -> Vec<Vec<f64>> {
        let d = m.dim;
        let mut out = Vec::new();
        for f in &m.filters {
            let r = f.width;
            let padded: Vec<Vec<f64>> = (0..r - 1)
                .map(|_| vec![0.0; d])
                .chain(ids.iter().map(|&id| m.embedding(id).to_vec()))
                .chain((0..r - 1).map(|_| vec![0.0; d]))
                .collect();
            let mut map = Vec::new();
            for i in 0..padded.len() - r + 1 {
                let mut z = f.bias;
                for s in 0..r {
                    for t in 0..d {
                        z += f.weights[s * d + t] * padded[i + s][t];
                    }
                }
                map.push(z.max(0.0));
            }
            out.push(map);
        }
        out
    }

    #[test]
    fn conv_matches_naive_oracle() {
        for seed in 0..20 {
            let mut m = tiny(seed);
            for f in &mut m.filters {
                f.bias = 0.05;
            }
            let s = seq(&["good", "food", "dog", "bad", "view"], 8);
            let ids = m.encode(&s);
            let got = m.conv_forward(&s);
            let want = naive_conv(&m, &ids);
            for (a, b) in got.iter().flatten().zip(want.iter().flatten()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn pooling_examples() {
        assert_eq!(max_pool(&[vec![1.0, 9.0, 3.0]], 1), vec![9.0]);
        assert_eq!(max_pool(&[vec![1.0, 9.0, 3.0]], 2), vec![9.0, 3.0]);
        assert_eq!(max_pool(&[vec![3.0, 1.0, 9.0]], 2), vec![3.0, 9.0]);
        assert_eq!(k_max_indices(&[2.0; 5], 3), vec![0, 1, 2]);
    }

    #[test]
    fn zero_dense_gives_half() {
        let mut m = tiny(3);
        m.dense_w.iter_mut().for_each(|w| *w = 0.0);
        let s = seq(&["good", "food"], 8);
        assert_eq!(m.predict(&s), 0.5);
    }

    #[test]
    fn dropout_zero_matches_inference_and_seed_is_stable() {
        let mut m = tiny(4);
        let s = seq(&["good", "dog"], 8);
        assert_eq!(m.forward(&s, true, 9), m.predict(&s));
        m.dropout = 0.5;
        assert_eq!(m.forward(&s, true, 9), m.forward(&s, true, 9));
        assert_eq!(m.forward(&s, false, 1), m.forward(&s, false, 2));
    }

    #[test]
    fn unknown_tokens_use_unk_row() {
        let m = tiny(5);
        let a = m.predict(&seq(&["qqq"], 8));
        let b = m.predict(&seq(&["zzz"], 8));
        assert_eq!(a, b);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = tiny(6);
        let back = CnnModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let mut broken: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        broken["dense_w"].as_array_mut().unwrap().pop();
        assert!(matches!(
            CnnModel::from_json(&broken.to_string()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn pretrained_rows_replace_embeddings() {
        let mut m = tiny(7);
        let n = m.apply_pretrained("food 1 2 3 4\nunseen 0 0 0 0\n", "emb").unwrap();
        assert_eq!(n, 1);
        assert_eq!(m.embedding(m.vocab.id("food")), &[1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(
            m.apply_pretrained("food 1 2\n", "emb"),
            Err(Error::DimensionMismatch { expected: 4, actual: 2 })
        ));
    }

    #[test]
    fn filter_order_does_not_change_prediction() {
        let m = tiny(8);
        let mut r = m.clone();
        r.filters.reverse();
        let (p, f, k) = (m.pooled_dim(), m.filters.len(), m.k_max);
        for c in 0..2 {
            for i in 0..f {
                for q in 0..k {
                    r.dense_w[c * p + (f - 1 - i) * k + q] = m.dense_w[c * p + i * k + q];
                }
            }
        }
        let s = seq(&["good", "food", "bad"], 8);
        assert!((m.predict(&s) - r.predict(&s)).abs() < 1e-12);
    }

    proptest! {
        /// Every pooled value is at least the (k+1)-th largest activation.
        #[test]
        fn pooled_dominates_rest(map in proptest::collection::vec(-5.0f64..5.0, 1..16), k in 1usize..5) {
            let k = k.min(map.len());
            let pooled = max_pool(std::slice::from_ref(&map), k);
            let mut sorted = map.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            if let Some(&next) = sorted.get(k) {
                prop_assert!(pooled.iter().all(|&v| v >= next));
            }
            // brute-force: the pooled multiset equals the top-k values
            let mut p2 = pooled.clone();
            p2.sort_by(|a, b| b.total_cmp(a));
            prop_assert_eq!(p2, sorted[..k].to_vec());
        }
    }
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aspects::{DEFAULT_FREQ_THRESHOLD, DEFAULT_TOP_K};
use crate::error::{Error, Result};
use crate::explain::ExplainConfig;
use crate::fm::{FmConfig, SamplingConfig, VectorMode};
use crate::textcnn::{CnnConfig, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    pub corpus: Option<PathBuf>,
    /// Directory with lexicon overrides; bundled lexicons fill the gaps.
    pub lexicons: Option<PathBuf>,
    pub model_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            corpus: None,
            lexicons: None,
            model_dir: PathBuf::from("artifacts"),
        }
    }
}

/// How recall is computed for the per-category explanation lists.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ListMode {
    /// A held-out place counts only in the list of its review's dominant category.
    #[default]
    PerCategory,
    /// All category lists are merged.
    Union,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub folds: usize,
    pub min_reviews: usize,
    pub ns: Vec<usize>,
    /// Length of the recommendation list the explanations are built from;
    /// `None` re-orders the top-N list separately for every N.
    pub list_len: Option<usize>,
    pub list_mode: ListMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            folds: 5,
            min_reviews: 5,
            ns: vec![5, 10, 15, 20],
            list_len: None,
            list_mode: ListMode::PerCategory,
        }
    }
}

/// Every knob of a run. Serialized verbatim into each artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: PathsConfig,
    pub error_rate_cap: f64,
    pub freq_threshold: usize,
    pub top_k_categories: usize,
    pub cnn: CnnConfig,
    pub cnn_train: TrainConfig,
    pub vector_mode: VectorMode,
    pub eps_km: f64,
    pub sampling: SamplingConfig,
    pub fm: FmConfig,
    /// Recommendations per user.
    pub top_n: usize,
    pub explain: ExplainConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 7,
            paths: PathsConfig::default(),
            error_rate_cap: 0.01,
            freq_threshold: DEFAULT_FREQ_THRESHOLD,
            top_k_categories: DEFAULT_TOP_K,
            cnn: CnnConfig::default(),
            cnn_train: TrainConfig::default(),
            vector_mode: VectorMode::default(),
            eps_km: 10.0,
            sampling: SamplingConfig::default(),
            fm: FmConfig::default(),
            top_n: 10,
            explain: ExplainConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets the master seed and every stage seed derived from it.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.sync_seeds();
        self
    }

    pub fn sync_seeds(&mut self) {
        let s = self.seed;
        self.cnn_train.seed = s;
        self.fm.seed = s.wrapping_add(1);
        self.sampling.seed = s.wrapping_add(2);
        self.explain.shingles.seed = s.wrapping_add(3);
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(0.0..=1.0).contains(&self.error_rate_cap) {
            return bad(format!("error_rate_cap must be in [0,1], got {}", self.error_rate_cap));
        }
        if self.freq_threshold == 0 {
            return bad("freq_threshold must be at least 1".into());
        }
        if !(1..=crate::aspects::AspectCategory::COUNT).contains(&self.top_k_categories) {
            return bad(format!("top_k_categories must be in 1..=7, got {}", self.top_k_categories));
        }
        self.cnn.validate()?;
        let t = &self.cnn_train;
        if t.epochs == 0 || t.batch == 0 || !(t.lr > 0.0 && t.lr.is_finite()) {
            return bad("cnn_train needs positive epochs, batch and lr".into());
        }
        if !(self.eps_km > 0.0 && self.eps_km.is_finite()) {
            return bad(format!("eps_km must be positive, got {}", self.eps_km));
        }
        if !(self.sampling.neg_ratio >= 0.0 && self.sampling.neg_ratio.is_finite()) {
            return bad("sampling.neg_ratio must be non-negative".into());
        }
        let f = &self.fm;
        if f.k == 0 || f.epochs == 0 || !(f.lr > 0.0) || !(f.l2 >= 0.0) || !(f.init_std >= 0.0) {
            return bad("fm needs positive k, epochs and lr, and non-negative l2 and init_std".into());
        }
        if self.top_n == 0 {
            return bad("top_n must be positive".into());
        }
        self.explain.validate()?;
        let e = &self.eval;
        if e.folds < 2 {
            return bad(format!("eval.folds must be at least 2, got {}", e.folds));
        }
        if e.min_reviews == 0 || e.list_len == Some(0) {
            return bad("eval.min_reviews and eval.list_len must be positive".into());
        }
        if e.ns.is_empty() || e.ns.contains(&0) {
            return bad("eval.ns must be non-empty and positive".into());
        }
        Ok(())
    }
}

//! Versioned JSON artifacts in the model directory.
//!
//! Every file wraps its payload in an envelope carrying the run config and
//! the SHA-256 of each input file. Loading an artifact re-hashes its inputs
//! transitively, so a stage never runs on top of a stale upstream file.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use poirec_core::RunConfig;
use serde::de::{DeserializeOwned, IgnoredAny};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const VERSION: u32 = 1;

/// A kind of artifact: its envelope name, file name and the producing command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Kind {
    pub artifact: &'static str,
    pub file: &'static str,
    pub stage: &'static str,
}

const fn kind(artifact: &'static str, file: &'static str, stage: &'static str) -> Kind {
    Kind { artifact, file, stage }
}

pub const CORPUS: Kind = kind("corpus", "corpus.json", "ingest");
pub const ASPECTS: Kind = kind("aspects", "aspects.json", "extract-aspects");
pub const CLASSIFIER: Kind = kind("classifier", "classifier.json", "train-classifier");
pub const CLASSIFIED: Kind = kind("classified", "classified.json", "classify");
pub const RECOMMENDER: Kind = kind("recommender", "recommender.json", "train-fm");
pub const RECOMMENDATIONS: Kind = kind("recommendations", "recommendations.json", "recommend");
pub const EXPLANATIONS_CORE: Kind = kind("explanations", "explanations_core.json", "explain");
pub const EXPLANATIONS_RANK: Kind = kind("explanations", "explanations_rank.json", "explain");
pub const EXPLANATIONS_DENSE: Kind = kind("explanations", "explanations_dense.json", "explain");
pub const BENCHMARK: Kind = kind("benchmark", "benchmark.json", "evaluate");
pub const CASE_STUDY: Kind = kind("case_study", "case_study.json", "case-study");

const ALL: [Kind; 11] = [
    CORPUS,
    ASPECTS,
    CLASSIFIER,
    CLASSIFIED,
    RECOMMENDER,
    RECOMMENDATIONS,
    EXPLANATIONS_CORE,
    EXPLANATIONS_RANK,
    EXPLANATIONS_DENSE,
    BENCHMARK,
    CASE_STUDY,
];

#[derive(Debug, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub artifact: String,
    pub version: u32,
    pub config: RunConfig,
    /// Digest of `inputs`, one line `name=sha256` per input in name order.
    pub input_hash: String,
    pub inputs: BTreeMap<String, String>,
    pub payload: T,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn combined_hash(inputs: &BTreeMap<String, String>) -> String {
    let mut h = Sha256::new();
    for (name, hash) in inputs {
        h.update(format!("{name}={hash}\n").as_bytes());
    }
    hex::encode(h.finalize())
}

/// Configs equal up to file locations.
fn same_settings(a: &RunConfig, b: &RunConfig) -> bool {
    let strip = |c: &RunConfig| RunConfig {
        paths: Default::default(),
        ..c.clone()
    };
    strip(a) == strip(b)
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| poirec_core::Error::io(path, e).into())
}

/// A payload together with the digest of the file it came from.
pub struct Loaded<T> {
    pub payload: T,
    pub hash: String,
}

pub struct Store {
    dir: PathBuf,
    config: RunConfig,
}

impl Store {
    pub fn new(dir: PathBuf, config: RunConfig) -> Self {
        Store { dir, config }
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    fn read_artifact(&self, kind: Kind) -> Result<Vec<u8>> {
        let path = self.path(kind.file);
        if !path.is_file() {
            return Err(CliError::MissingArtifact { path, stage: kind.stage });
        }
        read_file(&path)
    }

    pub fn load<T: DeserializeOwned>(&self, kind: Kind) -> Result<Loaded<T>> {
        let bytes = self.read_artifact(kind)?;
        let env: Envelope<T> = serde_json::from_slice(&bytes).map_err(poirec_core::Error::from)?;
        self.check(kind, &env)?;
        self.verify_inputs(kind, &env.inputs, &mut BTreeSet::new())?;
        if !same_settings(&env.config, &self.config) {
            log::warn!("{} was built with a different config", kind.file);
        }
        Ok(Loaded {
            payload: env.payload,
            hash: sha256_hex(&bytes),
        })
    }

    fn check<T>(&self, kind: Kind, env: &Envelope<T>) -> Result<()> {
        let expected = format!("{} v{VERSION}", kind.artifact);
        let found = format!("{} v{}", env.artifact, env.version);
        if expected != found {
            return Err(CliError::WrongArtifact {
                artifact: kind.file.to_string(),
                expected,
                found,
            });
        }
        if combined_hash(&env.inputs) != env.input_hash {
            return Err(CliError::StaleArtifact {
                artifact: kind.file.to_string(),
                input: "input list".to_string(),
            });
        }
        Ok(())
    }

    /// Re-hashes every upstream artifact named in `inputs`, recursively.
    fn verify_inputs(&self, of: Kind, inputs: &BTreeMap<String, String>, seen: &mut BTreeSet<&'static str>) -> Result<()> {
        for (name, recorded) in inputs {
            let Some(upstream) = ALL.iter().copied().find(|k| k.file == name) else {
                continue;
            };
            let bytes = self.read_artifact(upstream)?;
            if &sha256_hex(&bytes) != recorded {
                return Err(CliError::StaleArtifact {
                    artifact: of.file.to_string(),
                    input: name.clone(),
                });
            }
            if seen.insert(upstream.file) {
                let env: Envelope<IgnoredAny> = serde_json::from_slice(&bytes).map_err(poirec_core::Error::from)?;
                self.check(upstream, &env)?;
                self.verify_inputs(upstream, &env.inputs, seen)?;
            }
        }
        Ok(())
    }

    /// Writes `payload` under `kind` and returns the file digest.
    pub fn write<T: Serialize>(&self, kind: Kind, inputs: BTreeMap<String, String>, payload: &T) -> Result<String> {
        let env = Envelope {
            artifact: kind.artifact.to_string(),
            version: VERSION,
            config: self.config.clone(),
            input_hash: combined_hash(&inputs),
            inputs,
            payload,
        };
        let mut bytes = serde_json::to_vec_pretty(&env).map_err(poirec_core::Error::from)?;
        bytes.push(b'\n');
        self.write_raw(kind.file, &bytes)
    }

    pub fn write_raw(&self, file: &str, bytes: &[u8]) -> Result<String> {
        fs::create_dir_all(&self.dir).map_err(|e| poirec_core::Error::io(&self.dir, e))?;
        let path = self.path(file);
        fs::write(&path, bytes).map_err(|e| poirec_core::Error::io(&path, e))?;
        Ok(sha256_hex(bytes))
    }
}

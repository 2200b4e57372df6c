use std::path::PathBuf;

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("missing artifact {}; run `poirec {stage}` first", path.display())]
    MissingArtifact { path: PathBuf, stage: &'static str },
    #[error("artifact {artifact} was built from a different {input} (hash mismatch)")]
    StaleArtifact { artifact: String, input: String },
    #[error("artifact {artifact} is {found}, expected {expected}")]
    WrongArtifact {
        artifact: String,
        expected: String,
        found: String,
    },
    #[error(transparent)]
    Core(#[from] poirec_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::MissingArtifact { .. } => 2,
            CliError::Core(e) if matches!(e.root(), poirec_core::Error::InvalidConfig(_)) => 3,
            _ => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "missing_artifact",
            3 => "invalid_config",
            _ => "data_error",
        }
    }

    /// The machine-readable form written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        if let CliError::MissingArtifact { path, .. } = self {
            v["artifact"] = json!(path.display().to_string());
        }
        v
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

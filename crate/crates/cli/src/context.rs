//! Shared command plumbing: error classification, output directories,
//! run manifests, and config-file/flag overlays.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crouter_core::training::{FactorizationConfig, TrainConfig};
use crouter_core::Error as CoreError;

pub enum CliError {
    User(anyhow::Error),
    Internal(anyhow::Error),
}

pub type CliResult<T = ()> = Result<T, CliError>;

pub fn user_error(message: impl Into<String>) -> CliError {
    CliError::User(anyhow!(message.into()))
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::Config(_)
            | CoreError::Parse { .. }
            | CoreError::Schema(_)
            | CoreError::Integrity(_)
            | CoreError::Value(_)
            | CoreError::Size(_)
            | CoreError::Contract(_)
            | CoreError::Checkpoint(_)
            | CoreError::Shape(_)
            | CoreError::Statistical(_) => CliError::User(err.into()),
            CoreError::Training(_)
            | CoreError::NonFiniteGradient { .. }
            | CoreError::State(_)
            | CoreError::Io(_)
            | CoreError::Json(_) => CliError::Internal(err.into()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Internal(err.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Internal(err.into())
    }
}

impl From<crouter_service::ServiceError> for CliError {
    fn from(err: crouter_service::ServiceError) -> Self {
        match err {
            crouter_service::ServiceError::Startup(_) => CliError::User(err.into()),
            _ => CliError::Internal(err.into()),
        }
    }
}

/// Creates `dir` if absent; refuses to reuse a non-empty directory unless
/// `force` is set.
pub fn prepare_out_dir(dir: &Path, force: bool) -> CliResult {
    if dir.exists() {
        let occupied = fs::read_dir(dir)
            .map_err(CliError::from)?
            .next()
            .is_some();
        if occupied && !force {
            return Err(user_error(format!(
                "output directory '{}' is not empty; pass --force to overwrite",
                dir.display()
            )));
        }
    }
    fs::create_dir_all(dir).map_err(CliError::from)?;
    Ok(())
}

/// Reads a file for hashing/parsing with a user-facing error.
pub fn read_input(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| user_error(format!("cannot read '{}': {e}", path.display())))
}

/// A reproducibility record written alongside every artifact-producing run.
/// Deliberately timestamp-free: identical invocations produce identical
/// manifests.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub args: BTreeMap<String, String>,
    pub seed: u64,
    /// SHA-256 of the fully resolved configuration.
    pub config_hash: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            args: BTreeMap::new(),
            seed,
            config_hash: String::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn arg(mut self, key: &str, value: impl ToString) -> Self {
        self.args.insert(key.to_string(), value.to_string());
        self
    }

    pub fn input(mut self, path: impl ToString) -> Self {
        self.inputs.push(path.to_string());
        self
    }

    pub fn output(mut self, name: impl ToString) -> Self {
        self.outputs.push(name.to_string());
        self
    }

    /// Hashes the resolved config (any serializable value) into the manifest.
    pub fn hash_config<T: Serialize>(mut self, config: &T) -> CliResult<Self> {
        let json = serde_json::to_string(config)?;
        let digest = Sha256::digest(json.as_bytes());
        self.config_hash = format!("sha256:{}", hex_string(&digest));
        Ok(self)
    }

    pub fn write(&self, dir: &Path) -> CliResult {
        let path = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

// ---------------------------------------------------------------------------
// Config overlays: defaults <- config file <- flags (flags win)
// ---------------------------------------------------------------------------

/// Partial hyperparameter overrides from a config-file section or flags.
#[derive(Debug, Default, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOverrides {
    pub hidden_dim: Option<usize>,
    pub dropout: Option<f64>,
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub max_epochs: Option<usize>,
    pub patience: Option<usize>,
}

impl TrainOverrides {
    pub fn apply(&self, config: &mut TrainConfig) {
        if let Some(v) = self.hidden_dim {
            config.hidden_dim = v;
        }
        if let Some(v) = self.dropout {
            config.dropout = v;
        }
        if let Some(v) = self.learning_rate {
            config.learning_rate = v;
        }
        if let Some(v) = self.batch_size {
            config.batch_size = v;
        }
        if let Some(v) = self.max_epochs {
            config.max_epochs = v;
        }
        if let Some(v) = self.patience {
            config.patience = v;
        }
    }
}

/// On-disk training config file; every section is optional.
#[derive(Debug, Default, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TrainFileConfig {
    #[serde(default)]
    pub concept: Option<TrainOverrides>,
    #[serde(default)]
    pub head: Option<TrainOverrides>,
    #[serde(default)]
    pub factorization: Option<FactorizationOverrides>,
    #[serde(default)]
    pub knn_k: Option<usize>,
}

impl TrainFileConfig {
    pub fn load(path: Option<&PathBuf>) -> CliResult<Self> {
        match path {
            None => Ok(Self::default()),
            Some(path) => {
                let text = read_input(path)?;
                serde_json::from_str(&text).map_err(|e| {
                    user_error(format!("config '{}': {e}", path.display()))
                })
            }
        }
    }
}

#[derive(Debug, Default, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorizationOverrides {
    pub hidden_dim: Option<usize>,
    pub embed_dim: Option<usize>,
    pub dropout: Option<f64>,
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub max_epochs: Option<usize>,
    pub patience: Option<usize>,
}

impl FactorizationOverrides {
    pub fn apply(&self, config: &mut FactorizationConfig) {
        if let Some(v) = self.hidden_dim {
            config.hidden_dim = v;
        }
        if let Some(v) = self.embed_dim {
            config.embed_dim = v;
        }
        if let Some(v) = self.dropout {
            config.dropout = v;
        }
        if let Some(v) = self.learning_rate {
            config.learning_rate = v;
        }
        if let Some(v) = self.batch_size {
            config.batch_size = v;
        }
        if let Some(v) = self.max_epochs {
            config.max_epochs = v;
        }
        if let Some(v) = self.patience {
            config.patience = v;
        }
    }
}

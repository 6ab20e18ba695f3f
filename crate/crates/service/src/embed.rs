//! Embedding clients: a deterministic mock and a remote HTTP client.
//!
//! The remote protocol is `POST <endpoint>` with `{"text": "..."}`,
//! answered by `{"embedding": [..]}`. Endpoints of the form `mock://<seed>`
//! select the bundled mock, which hashes the text into a seeded RNG and is
//! fully deterministic.

use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingClientConfig {
    /// `http(s)://...` for a remote service, `mock://<seed>` for the mock.
    pub endpoint: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    /// Must match the loaded checkpoint's embedding dimension.
    pub expected_dim: usize,
    #[serde(default = "default_retries")]
    pub retries: u32,
}

fn default_timeout_ms() -> u64 {
    2_000
}

fn default_retries() -> u32 {
    2
}

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding service unreachable after {attempts} attempts: {last}")]
    Upstream { attempts: u32, last: String },
    #[error("embedding has {got} dimensions, checkpoint expects {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("invalid embedding client configuration: {0}")]
    Config(String),
}

#[derive(Serialize)]
struct EmbedRequestBody<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponseBody {
    embedding: Vec<f64>,
}

/// Deterministic stand-in for an out-of-process embedding model: the text
/// is hashed (with the seed) into a ChaCha stream that fills the vector
/// with values in [-1, 1].
#[derive(Debug, Clone)]
pub struct MockEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl MockEmbedder {
    pub fn embed(&self, text: &str) -> Vec<f64> {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(text.as_bytes());
        let digest = hasher.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        let mut rng = ChaCha8Rng::from_seed(key);
        (0..self.dim).map(|_| rng.random_range(-1.0..1.0)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    client: reqwest::Client,
    endpoint: String,
    expected_dim: usize,
    retries: u32,
}

impl HttpEmbedder {
    async fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let attempts = self.retries + 1;
        let mut last = String::new();
        for _ in 0..attempts {
            match self
                .client
                .post(&self.endpoint)
                .json(&EmbedRequestBody { text })
                .send()
                .await
            {
                Ok(response) => match response.error_for_status() {
                    Ok(ok) => match ok.json::<EmbedResponseBody>().await {
                        Ok(body) => {
                            if body.embedding.len() != self.expected_dim {
                                return Err(EmbedError::Dimension {
                                    got: body.embedding.len(),
                                    expected: self.expected_dim,
                                });
                            }
                            return Ok(body.embedding);
                        }
                        Err(e) => last = e.to_string(),
                    },
                    Err(e) => last = e.to_string(),
                },
                Err(e) => last = e.to_string(),
            }
        }
        Err(EmbedError::Upstream { attempts, last })
    }
}

#[derive(Debug, Clone)]
pub enum EmbeddingClient {
    Mock(MockEmbedder),
    Http(HttpEmbedder),
}

impl EmbeddingClient {
    pub fn from_config(config: &EmbeddingClientConfig) -> Result<Self, EmbedError> {
        if config.expected_dim == 0 {
            return Err(EmbedError::Config("expected_dim must be positive".into()));
        }
        if let Some(rest) = config.endpoint.strip_prefix("mock://") {
            let seed = if rest.is_empty() {
                0
            } else {
                rest.parse::<u64>().map_err(|_| {
                    EmbedError::Config(format!("mock endpoint seed '{rest}' is not an integer"))
                })?
            };
            return Ok(EmbeddingClient::Mock(MockEmbedder {
                dim: config.expected_dim,
                seed,
            }));
        }
        let client = reqwest::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| EmbedError::Config(e.to_string()))?;
        Ok(EmbeddingClient::Http(HttpEmbedder {
            client,
            endpoint: config.endpoint.clone(),
            expected_dim: config.expected_dim,
            retries: config.retries,
        }))
    }

    pub fn expected_dim(&self) -> usize {
        match self {
            EmbeddingClient::Mock(m) => m.dim,
            EmbeddingClient::Http(h) => h.expected_dim,
        }
    }

    pub async fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        match self {
            EmbeddingClient::Mock(m) => Ok(m.embed(text)),
            EmbeddingClient::Http(h) => h.embed(text).await,
        }
    }

    /// Convenience for synchronous callers; spins up a single-use runtime
    /// for the HTTP client.
    pub fn embed_blocking(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        match self {
            EmbeddingClient::Mock(m) => Ok(m.embed(text)),
            EmbeddingClient::Http(_) => tokio::runtime::Builder::new_current_thread()
                .enable_all()
                .build()
                .map_err(|e| EmbedError::Config(e.to_string()))?
                .block_on(self.embed(text)),
        }
    }
}

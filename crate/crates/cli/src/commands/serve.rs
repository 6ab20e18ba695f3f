//! `crouter serve` — run the routing gateway.
//!
//! Precedence: flags win over environment variables, which win over the
//! config file. Runs until interrupted; startup failures exit nonzero.

use std::path::PathBuf;

use clap::Args;

use crouter_service::embed::EmbeddingClientConfig;
use crouter_service::{serve_blocking, ServiceConfig};

use crate::context::{user_error, CliResult};

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Service config file (JSON); BIND_ADDR / CHECKPOINT_PATH /
    /// EMBED_ENDPOINT / EMBED_TIMEOUT_MS override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub bind: Option<String>,
    #[arg(long)]
    pub embed_endpoint: Option<String>,
    #[arg(long)]
    pub embed_timeout_ms: Option<u64>,
    /// Embedding dimension; defaults to the checkpoint's
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub embed_retries: Option<u32>,
}

pub fn run(args: ServeArgs) -> CliResult {
    let mut config = match &args.config {
        Some(path) => ServiceConfig::from_file(path)?,
        None => {
            let checkpoint = args.checkpoint.clone().ok_or_else(|| {
                user_error("pass --config or --checkpoint to select what to serve")
            })?;
            let mut config = ServiceConfig::new(checkpoint);
            config.apply_env_overrides();
            config
        }
    };

    if let Some(checkpoint) = &args.checkpoint {
        config.checkpoint_path = checkpoint.clone();
    }
    if let Some(bind) = &args.bind {
        config.bind_addr = bind.clone();
    }
    if let Some(endpoint) = &args.embed_endpoint {
        let existing = config.embedding.take();
        config.embedding = Some(EmbeddingClientConfig {
            endpoint: endpoint.clone(),
            timeout_ms: args
                .embed_timeout_ms
                .or(existing.as_ref().map(|e| e.timeout_ms))
                .unwrap_or(2_000),
            expected_dim: args
                .embed_dim
                .or(existing.as_ref().map(|e| e.expected_dim))
                .unwrap_or(0),
            retries: args
                .embed_retries
                .or(existing.as_ref().map(|e| e.retries))
                .unwrap_or(2),
        });
    } else if let Some(embedding) = config.embedding.as_mut() {
        if let Some(ms) = args.embed_timeout_ms {
            embedding.timeout_ms = ms;
        }
        if let Some(dim) = args.embed_dim {
            embedding.expected_dim = dim;
        }
        if let Some(retries) = args.embed_retries {
            embedding.retries = retries;
        }
    }

    serve_blocking(config)?;
    Ok(())
}

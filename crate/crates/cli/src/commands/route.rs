//! `crouter route` — one-shot routing decision, printed as JSON.

use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;
use serde_json::json;

use crouter_core::dataset::GroupName;
use crouter_service::embed::{EmbeddingClient, EmbeddingClientConfig};

use super::load_policy;
use crate::context::{read_input, user_error, CliResult};

#[derive(Debug, Args)]
pub struct RouteArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Inline JSON array, e.g. --embedding "[0.1, -0.2, ...]"
    #[arg(long, conflicts_with_all = ["embedding_file", "text"])]
    pub embedding: Option<String>,
    /// File holding a JSON array
    #[arg(long, conflicts_with = "text")]
    pub embedding_file: Option<PathBuf>,
    /// Route raw text through an embedding client
    #[arg(long)]
    pub text: Option<String>,
    /// Embedding endpoint for --text; `mock://<seed>` selects the bundled
    /// deterministic mock
    #[arg(long, default_value = "mock://0")]
    pub embed_endpoint: String,
    #[arg(long, default_value_t = 2000)]
    pub embed_timeout_ms: u64,
    /// Intervene on one group: `group=v1,v2,...`
    #[arg(long)]
    pub intervene: Option<String>,
    /// Include the full concept vector in the output
    #[arg(long)]
    pub verbose: bool,
}

fn parse_intervention(text: &str) -> CliResult<(GroupName, Vec<f64>)> {
    let (group, values) = text
        .split_once('=')
        .ok_or_else(|| user_error("intervention must look like group=v1,v2,..."))?;
    let group = GroupName::from_str(group.trim())?;
    let values: Vec<f64> = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| user_error(format!("invalid override value '{v}'")))
        })
        .collect::<CliResult<_>>()?;
    Ok((group, values))
}

pub fn run(args: RouteArgs) -> CliResult {
    let (policy, checkpoint) = load_policy(&args.checkpoint)?;

    let embedding: Vec<f64> = match (&args.embedding, &args.embedding_file, &args.text) {
        (Some(inline), None, None) => serde_json::from_str(inline)
            .map_err(|e| user_error(format!("--embedding is not a JSON number array: {e}")))?,
        (None, Some(path), None) => {
            let text = read_input(path)?;
            serde_json::from_str(&text).map_err(|e| {
                user_error(format!("'{}' is not a JSON number array: {e}", path.display()))
            })?
        }
        (None, None, Some(text)) => {
            let dim = match &policy {
                crouter_core::routers::RouterPolicy::Bottleneck(r) => r.concept_head.in_dim(),
                crouter_core::routers::RouterPolicy::BlackBox(r) => r.head.in_dim(),
                crouter_core::routers::RouterPolicy::Factorization(r) => r.projection.in_dim(),
                crouter_core::routers::RouterPolicy::Knn(r) => {
                    r.embeddings.first().map(Vec::len).unwrap_or(0)
                }
                _ => {
                    return Err(user_error(
                        "this policy does not fix an embedding dimension; pass --embedding",
                    ))
                }
            };
            let client = EmbeddingClient::from_config(&EmbeddingClientConfig {
                endpoint: args.embed_endpoint.clone(),
                timeout_ms: args.embed_timeout_ms,
                expected_dim: dim,
                retries: 2,
            })
            .map_err(|e| user_error(e.to_string()))?;
            client
                .embed_blocking(text)
                .map_err(|e| user_error(e.to_string()))?
        }
        _ => {
            return Err(user_error(
                "provide exactly one of --embedding, --embedding-file, or --text",
            ))
        }
    };

    let decision = match &args.intervene {
        None => policy.route(&embedding)?,
        Some(spec) => {
            let (group, values) = parse_intervention(spec)?;
            policy.route_with_intervention(&embedding, group, &values)?
        }
    };

    let catalog = policy.catalog().expect("loaded policies carry a catalog");
    let scores: Vec<serde_json::Value> = catalog
        .models
        .iter()
        .zip(&decision.scores)
        .map(|(m, &s)| json!({"model": m.name, "score": s}))
        .collect();
    let output = json!({
        "model": decision.model_name,
        "model_index": decision.model_index,
        "scores": scores,
        "rationale": decision.rationale,
        "concepts": if args.verbose { serde_json::to_value(&decision.concepts)? } else { serde_json::Value::Null },
        "checkpoint_version": checkpoint.version,
    });
    println!("{}", serde_json::to_string_pretty(&output)?);
    Ok(())
}

//! `crouter train` — train one policy, write a checkpoint and curves.

use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;
use serde::Serialize;

use crouter_core::evaluation::{
    assignment_share, decide_all, mean_routed_cost, routing_accuracy, write_curve_csv,
};
use crouter_core::routers::{Checkpoint, PolicyKind, RandomRouter, RouterPolicy, TrainMetadata};
use crouter_core::training::{
    fit_knn, train_blackbox, train_bottleneck, train_factorization, FactorizationConfig,
    TrainConfig, DEFAULT_KNN_K,
};

use super::{records_for, DataArgs, HyperFlags};
use crate::context::{prepare_out_dir, user_error, CliResult, Manifest, TrainFileConfig};

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Policy to train: bottleneck | blackbox | knn | factorization | random
    #[arg(long, value_parser = PolicyKind::from_str)]
    pub policy: PolicyKind,
    /// Cost-regularization weight
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Optional JSON config file; flags win over its sections
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub hyper: HyperFlags,
    /// Neighbor count for the KNN policy
    #[arg(long)]
    pub knn_k: Option<usize>,
    /// Model-embedding width for the factorization policy
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Serialize)]
struct TrainSummary {
    policy: PolicyKind,
    lambda: f64,
    seed: u64,
    split_seed: u64,
    test_accuracy: f64,
    test_mean_cost: f64,
    assignment_share: Vec<f64>,
    param_count: usize,
}

/// Resolved (concept, head) configs: defaults <- file <- flags.
pub fn resolve_train_configs(
    policy: PolicyKind,
    file: &TrainFileConfig,
    flags: &HyperFlags,
    lambda: f64,
    seed: u64,
) -> (TrainConfig, TrainConfig) {
    let mut concept = TrainConfig::concept_default().with_seed(seed);
    if let Some(section) = &file.concept {
        section.apply(&mut concept);
    }
    flags.loop_overrides().apply(&mut concept);

    let mut head = match policy {
        PolicyKind::BlackBox => TrainConfig::blackbox_default(),
        _ => TrainConfig::suitability_default(),
    }
    .with_lambda(lambda)
    .with_seed(seed);
    if let Some(section) = &file.head {
        section.apply(&mut head);
    }
    flags.overrides().apply(&mut head);

    (concept, head)
}

pub fn resolve_factorization_config(
    file: &TrainFileConfig,
    flags: &HyperFlags,
    embed_dim: Option<usize>,
    seed: u64,
) -> FactorizationConfig {
    let mut config = FactorizationConfig {
        seed,
        ..FactorizationConfig::default()
    };
    if let Some(section) = &file.factorization {
        section.apply(&mut config);
    }
    if let Some(v) = flags.hidden_dim {
        config.hidden_dim = v;
    }
    if let Some(v) = flags.dropout {
        config.dropout = v;
    }
    if let Some(v) = flags.learning_rate {
        config.learning_rate = v;
    }
    if let Some(v) = flags.batch_size {
        config.batch_size = v;
    }
    if let Some(v) = flags.max_epochs {
        config.max_epochs = v;
    }
    if let Some(v) = flags.patience {
        config.patience = v;
    }
    if let Some(v) = embed_dim {
        config.embed_dim = v;
    }
    config
}

pub fn run(args: TrainArgs) -> CliResult {
    let (dataset, split) = args.data.load()?;
    let file_config = TrainFileConfig::load(args.config.as_ref())?;
    prepare_out_dir(&args.out, args.force)?;

    let (concept_cfg, head_cfg) =
        resolve_train_configs(args.policy, &file_config, &args.hyper, args.lambda, args.seed);
    let mut metadata = TrainMetadata::new(args.lambda, args.seed);
    let mut outputs: Vec<String> = vec!["checkpoint.json".into(), "metrics.json".into()];

    let policy = match args.policy {
        PolicyKind::Bottleneck => {
            let (router, concept_curve, head_curve) =
                train_bottleneck(&dataset, &split, &concept_cfg, &head_cfg)?;
            write_curve_csv(&args.out.join("curve_concept.csv"), &concept_curve)?;
            write_curve_csv(&args.out.join("curve_head.csv"), &head_curve)?;
            outputs.push("curve_concept.csv".into());
            outputs.push("curve_head.csv".into());
            metadata.concept_config = Some(concept_cfg);
            metadata.head_config = Some(head_cfg);
            RouterPolicy::Bottleneck(router)
        }
        PolicyKind::BlackBox => {
            let (router, curve) = train_blackbox(&dataset, &split, &head_cfg)?;
            write_curve_csv(&args.out.join("curve_head.csv"), &curve)?;
            outputs.push("curve_head.csv".into());
            metadata.head_config = Some(head_cfg);
            RouterPolicy::BlackBox(router)
        }
        PolicyKind::Knn => {
            let k = args.knn_k.or(file_config.knn_k).unwrap_or(DEFAULT_KNN_K);
            RouterPolicy::Knn(fit_knn(&dataset, &split, k)?)
        }
        PolicyKind::Factorization => {
            let config = resolve_factorization_config(
                &file_config,
                &args.hyper,
                args.embed_dim,
                args.seed,
            );
            let (router, curve) = train_factorization(&dataset, &split, &config)?;
            write_curve_csv(&args.out.join("curve_head.csv"), &curve)?;
            outputs.push("curve_head.csv".into());
            RouterPolicy::Factorization(router)
        }
        PolicyKind::Random => {
            RouterPolicy::Random(RandomRouter::new(args.seed, dataset.catalog.clone()))
        }
        PolicyKind::Oracle => {
            return Err(user_error(
                "the oracle policy has no parameters to train; it is evaluated directly",
            ))
        }
    };

    let checkpoint = Checkpoint::from_policy(&policy, &dataset.schema, metadata)?;
    checkpoint.save(&args.out.join("checkpoint.json"))?;

    let test = records_for(&dataset, &split.test);
    let decisions = decide_all(&policy, &test)?;
    let summary = TrainSummary {
        policy: args.policy,
        lambda: args.lambda,
        seed: args.seed,
        split_seed: split.seed,
        test_accuracy: routing_accuracy(&decisions, &test)?,
        test_mean_cost: mean_routed_cost(&decisions, &test, &dataset.catalog)?,
        assignment_share: assignment_share(&decisions, &dataset.catalog)?,
        param_count: policy.param_count(),
    };
    let mut metrics_json = serde_json::to_string_pretty(&summary)?;
    metrics_json.push('\n');
    fs::write(args.out.join("metrics.json"), metrics_json)?;

    let mut manifest = Manifest::new("train", args.seed)
        .arg("--policy", args.policy)
        .arg("--lambda", args.lambda)
        .arg("--split-seed", args.data.split_seed)
        .arg("--data", args.data.data.display())
        .input(args.data.data.display())
        .hash_config(&(&concept_cfg, &head_cfg))?;
    for name in &outputs {
        manifest = manifest.output(name);
    }
    manifest.write(&args.out)?;

    println!(
        "{}: test accuracy {:.4}, mean cost {:.6}, {} parameters",
        args.policy, summary.test_accuracy, summary.test_mean_cost, summary.param_count
    );
    Ok(())
}

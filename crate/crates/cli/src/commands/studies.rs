//! `crouter ablate`, `crouter intervene`, `crouter counterfactual`.

use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;

use crouter_core::dataset::GroupName;
use crouter_core::evaluation::{
    ablation_study, counterfactual_flip_study, intervention_study, study_rows, write_report_csv,
    CounterfactualOutcome,
};
use crouter_core::routers::RouterPolicy;

use super::{load_policy, records_for, train::resolve_train_configs, DataArgs, HyperFlags, SplitChoice};
use crate::context::{prepare_out_dir, user_error, CliResult, Manifest, TrainFileConfig};

fn write_study(
    out: &std::path::Path,
    csv_name: &str,
    policy: &str,
    report: &crouter_core::evaluation::StudyReport,
) -> CliResult {
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    fs::write(out.join("study.json"), json)?;
    write_report_csv(&out.join(csv_name), &study_rows(report, policy))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Ablation
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Concept group(s) to remove; defaults to every group in the schema
    #[arg(long = "group", value_parser = GroupName::from_str)]
    pub groups: Vec<GroupName>,
    /// Comma-separated lambda values
    #[arg(long, default_value = "0,0.1,4")]
    pub lambdas: String,
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub hyper: HyperFlags,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

pub fn run_ablate(args: AblateArgs) -> CliResult {
    let (dataset, split) = args.data.load()?;
    let file_config = TrainFileConfig::load(args.config.as_ref())?;
    prepare_out_dir(&args.out, args.force)?;

    let groups: Vec<GroupName> = if args.groups.is_empty() {
        dataset.schema.groups.iter().map(|g| g.name).collect()
    } else {
        args.groups.clone()
    };
    let lambdas: Vec<f64> = args
        .lambdas
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| user_error(format!("invalid lambda '{part}'")))
        })
        .collect::<CliResult<_>>()?;
    let seeds: Vec<u64> = (args.seed..args.seed + args.seeds).collect();

    let (concept, head) = resolve_train_configs(
        crouter_core::routers::PolicyKind::Bottleneck,
        &file_config,
        &args.hyper,
        0.0,
        args.seed,
    );
    let report = ablation_study(&dataset, &split, &groups, &lambdas, &seeds, &concept, &head)?;
    write_study(&args.out, "ablation.csv", "bottleneck", &report)?;

    Manifest::new("ablate", args.seed)
        .arg("--lambdas", &args.lambdas)
        .arg("--seeds", args.seeds)
        .arg(
            "--groups",
            groups
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(","),
        )
        .input(args.data.data.display())
        .hash_config(&(&concept, &head))?
        .output("study.json")
        .output("ablation.csv")
        .write(&args.out)?;

    for condition in &report.conditions {
        println!(
            "lambda {:>4}: {:<32} accuracy {:.4} (std {:.4})",
            condition.lambda, condition.condition, condition.mean, condition.std
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Intervention
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct InterveneArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Bottleneck checkpoint(s); one per seed
    #[arg(long = "checkpoint", required = true)]
    pub checkpoints: Vec<PathBuf>,
    /// Concept group to replace with gold labels
    #[arg(long, value_parser = GroupName::from_str)]
    pub group: GroupName,
    #[arg(long, value_enum, default_value_t = SplitChoice::Test)]
    pub split: SplitChoice,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

pub fn run_intervene(args: InterveneArgs) -> CliResult {
    let (dataset, split) = args.data.load()?;
    prepare_out_dir(&args.out, args.force)?;

    let mut routers = Vec::new();
    let mut lambda = 0.0;
    for path in &args.checkpoints {
        let (policy, checkpoint) = load_policy(path)?;
        lambda = checkpoint.metadata.lambda;
        match policy {
            RouterPolicy::Bottleneck(router) => routers.push(router),
            other => {
                return Err(user_error(format!(
                    "'{}' holds a {} policy; intervention needs bottleneck checkpoints",
                    path.display(),
                    other.kind()
                )))
            }
        }
    }

    let indices = args.split.indices(&split, dataset.len());
    let records = records_for(&dataset, &indices);
    let report = intervention_study(&routers, &records, args.group, lambda)?;
    write_study(&args.out, "intervention.csv", "bottleneck", &report)?;

    Manifest::new("intervene", split.seed)
        .arg("--group", args.group)
        .arg("--split-seed", args.data.split_seed)
        .input(args.data.data.display())
        .hash_config(&args.group)?
        .output("study.json")
        .output("intervention.csv")
        .write(&args.out)?;

    for condition in &report.conditions {
        println!(
            "{:<24} accuracy {:.4} (std {:.4}, {} routers)",
            condition.condition,
            condition.mean,
            condition.std,
            condition.samples.len()
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Counterfactual
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct CounterfactualArgs {
    /// Bottleneck checkpoint
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Source programming language label
    #[arg(long)]
    pub source: String,
    /// Target programming language label
    #[arg(long)]
    pub target: String,
    /// Comma-separated names of the designated target-language models
    #[arg(long)]
    pub designated: String,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

pub fn run_counterfactual(args: CounterfactualArgs) -> CliResult {
    let (policy, _) = load_policy(&args.checkpoint)?;
    let router = match policy {
        RouterPolicy::Bottleneck(router) => router,
        other => {
            return Err(user_error(format!(
                "counterfactual study needs a bottleneck checkpoint, got {}",
                other.kind()
            )))
        }
    };
    prepare_out_dir(&args.out, args.force)?;

    let designated: Vec<usize> = args
        .designated
        .split(',')
        .map(|name| {
            let name = name.trim();
            router
                .catalog
                .models
                .iter()
                .position(|m| m.name == name)
                .ok_or_else(|| user_error(format!("model '{name}' is not in the catalog")))
        })
        .collect::<CliResult<_>>()?;

    let outcome = counterfactual_flip_study(
        &router,
        &args.source,
        &args.target,
        &designated,
        args.samples,
        args.seed,
    )?;
    println!(
        "{} -> {}: selection probability {:+.2} pp, rank {:+.2} positions ({} samples)",
        outcome.source,
        outcome.target,
        outcome.probability_delta_pp,
        outcome.rank_delta,
        outcome.n_samples
    );
    let report = CounterfactualOutcome::into_report(vec![outcome]);
    write_study(&args.out, "counterfactual.csv", "bottleneck", &report)?;

    Manifest::new("counterfactual", args.seed)
        .arg("--source", &args.source)
        .arg("--target", &args.target)
        .arg("--designated", &args.designated)
        .arg("--samples", args.samples)
        .input(args.checkpoint.display())
        .hash_config(&(&args.source, &args.target, &args.designated))?
        .output("study.json")
        .output("counterfactual.csv")
        .write(&args.out)?;
    Ok(())
}

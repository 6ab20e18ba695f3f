//! `crouter sweep` — retrain across the lambda grid and seeds.

use std::fs;
use std::path::PathBuf;

use clap::Args;

use crouter_core::evaluation::{
    pareto_frontier, write_curve_csv, write_frontier_csv, write_report_csv, write_share_csv,
    ReportRow,
};
use crouter_core::routers::{Checkpoint, TrainMetadata};
use crouter_core::training::{run_sweep, SweepConfig, SweepPolicy};

use super::{parse_grid, train::resolve_train_configs, DataArgs, HyperFlags};
use crate::context::{prepare_out_dir, user_error, CliResult, Manifest, TrainFileConfig};

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Sweepable policy: bottleneck | blackbox
    #[arg(long, default_value = "bottleneck")]
    pub policy: String,
    /// "default" (0.1 steps to 1, integer steps to 10) or a comma list
    #[arg(long, default_value = "default")]
    pub lambda_grid: String,
    /// Number of seeds; actual seeds are seed, seed+1, ...
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    /// Base seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Parallel training jobs (1 = serial)
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub hyper: HyperFlags,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

pub fn run(args: SweepArgs) -> CliResult {
    let policy = match args.policy.as_str() {
        "bottleneck" => SweepPolicy::Bottleneck,
        "blackbox" => SweepPolicy::BlackBox,
        other => {
            return Err(user_error(format!(
                "policy '{other}' is not sweepable; use bottleneck or blackbox"
            )))
        }
    };
    if args.seeds == 0 {
        return Err(user_error("--seeds must be at least 1"));
    }
    let grid = parse_grid(&args.lambda_grid)?;
    let (dataset, split) = args.data.load()?;
    let file_config = TrainFileConfig::load(args.config.as_ref())?;
    prepare_out_dir(&args.out, args.force)?;

    if args.jobs > 1 {
        // Global pool; building twice in one process is fine to ignore.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs)
            .build_global();
    }

    let (concept, head) =
        resolve_train_configs(policy.kind(), &file_config, &args.hyper, 0.0, args.seed);
    let sweep_config = SweepConfig {
        grid: grid.clone(),
        seeds: (args.seed..args.seed + args.seeds).collect(),
        concept,
        head,
        parallel: args.jobs > 1,
    };

    let run_set = run_sweep(&dataset, &split, policy, &sweep_config)?;
    for failure in &run_set.failures {
        eprintln!(
            "run lambda={} seed={} failed: {}",
            failure.lambda, failure.seed, failure.error
        );
    }

    let summary = run_set.summary(&grid);
    let mut runs_json = serde_json::to_string_pretty(&summary)?;
    runs_json.push('\n');
    fs::write(args.out.join("runs.json"), runs_json)?;

    let policy_name = summary.policy.to_string();
    let run_rows: Vec<ReportRow> = summary
        .metrics
        .iter()
        .map(|m| ReportRow {
            lambda: m.lambda,
            seed_count: 1,
            acc_mean: m.accuracy,
            acc_std: 0.0,
            cost_mean: Some(m.mean_cost),
            cost_std: Some(0.0),
            policy: policy_name.clone(),
            condition: format!("seed_{}", m.seed),
        })
        .collect();
    write_report_csv(&args.out.join("runs.csv"), &run_rows)?;

    let points = summary.frontier_points();
    write_frontier_csv(&args.out.join("aggregate.csv"), &policy_name, &points)?;
    write_frontier_csv(
        &args.out.join("frontier.csv"),
        &policy_name,
        &pareto_frontier(&points),
    )?;
    let share_rows: Vec<(f64, usize, String, f64, f64)> = summary
        .share_rows()
        .into_iter()
        .map(|(lambda, seeds, model, mean, std)| {
            (
                lambda,
                seeds,
                dataset.catalog.models[model].name.clone(),
                mean,
                std,
            )
        })
        .collect();
    write_share_csv(&args.out.join("shares.csv"), &policy_name, &share_rows)?;

    let mut outputs = vec![
        "runs.json".to_string(),
        "runs.csv".to_string(),
        "aggregate.csv".to_string(),
        "frontier.csv".to_string(),
        "shares.csv".to_string(),
    ];
    // Every run leaves a checkpoint and its training curve behind.
    let ckpt_dir = args.out.join("checkpoints");
    let curve_dir = args.out.join("curves");
    fs::create_dir_all(&ckpt_dir)?;
    fs::create_dir_all(&curve_dir)?;
    for run in &run_set.runs {
        let mut metadata = TrainMetadata::new(run.metrics.lambda, run.metrics.seed);
        metadata.concept_config = Some(sweep_config.concept);
        metadata.head_config = Some(
            sweep_config
                .head
                .with_lambda(run.metrics.lambda)
                .with_seed(run.metrics.seed),
        );
        let stem = format!("l{}_s{}", run.metrics.lambda, run.metrics.seed);
        Checkpoint::from_policy(&run.router, &dataset.schema, metadata)?
            .save(&ckpt_dir.join(format!("ckpt_{stem}.json")))?;
        write_curve_csv(&curve_dir.join(format!("curve_{stem}.csv")), &run.head_curve)?;
    }
    for (seed, curve) in &run_set.concept_curves {
        write_curve_csv(&curve_dir.join(format!("curve_concept_s{seed}.csv")), curve)?;
    }
    outputs.push("checkpoints/".to_string());
    outputs.push("curves/".to_string());

    let mut manifest = Manifest::new("sweep", args.seed)
        .arg("--policy", &args.policy)
        .arg("--lambda-grid", &args.lambda_grid)
        .arg("--seeds", args.seeds)
        .arg("--split-seed", args.data.split_seed)
        .input(args.data.data.display())
        .hash_config(&(&sweep_config.concept, &sweep_config.head, &grid))?;
    for name in &outputs {
        manifest = manifest.output(name);
    }
    manifest.write(&args.out)?;

    println!(
        "{} sweep: {} runs completed, {} failed; frontier has {} points",
        policy_name,
        summary.metrics.len(),
        summary.failures.len(),
        pareto_frontier(&points).len()
    );
    Ok(())
}

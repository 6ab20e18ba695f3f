//! `crouter eval` — score a checkpoint on a dataset split.

use std::fs;
use std::path::PathBuf;

use clap::Args;

use crouter_core::evaluation::{
    assignment_share, concept_metrics, decide_all, mean_routed_cost, routing_accuracy,
    write_report_csv, EvalReport, FrontierPoint, ReportRow,
};
use crouter_core::routers::RouterPolicy;

use super::{load_policy, records_for, DataArgs, SplitChoice};
use crate::context::{prepare_out_dir, CliResult, Manifest};

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitChoice::Test)]
    pub split: SplitChoice,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

pub fn run(args: EvalArgs) -> CliResult {
    let (dataset, split) = args.data.load()?;
    let (policy, checkpoint) = load_policy(&args.checkpoint)?;
    prepare_out_dir(&args.out, args.force)?;

    let indices = args.split.indices(&split, dataset.len());
    let records = records_for(&dataset, &indices);
    let decisions = decide_all(&policy, &records)?;
    let accuracy = routing_accuracy(&decisions, &records)?;
    let mean_cost = mean_routed_cost(&decisions, &records, &dataset.catalog)?;
    let shares = assignment_share(&decisions, &dataset.catalog)?;

    let concepts = match &policy {
        RouterPolicy::Bottleneck(router) => {
            let predictions: Vec<Vec<f64>> = records
                .iter()
                .map(|r| router.predict_concepts(&r.embedding))
                .collect::<Result<_, _>>()?;
            let gold: Vec<Vec<f64>> = records.iter().map(|r| r.concepts.clone()).collect();
            Some(concept_metrics(&predictions, &gold, &dataset.schema)?)
        }
        _ => None,
    };

    let report = EvalReport {
        points: vec![FrontierPoint {
            lambda: checkpoint.metadata.lambda,
            acc_mean: accuracy,
            acc_std: 0.0,
            cost_mean: mean_cost,
            cost_std: 0.0,
            seed_count: 1,
        }],
        concept_metrics: concepts,
        studies: Vec::new(),
        significance: Vec::new(),
    };
    let mut eval_json = serde_json::to_string_pretty(&report)?;
    eval_json.push('\n');
    fs::write(args.out.join("eval.json"), eval_json)?;

    let policy_name = checkpoint.kind().to_string();
    write_report_csv(
        &args.out.join("report.csv"),
        &[ReportRow {
            lambda: checkpoint.metadata.lambda,
            seed_count: 1,
            acc_mean: accuracy,
            acc_std: 0.0,
            cost_mean: Some(mean_cost),
            cost_std: Some(0.0),
            policy: policy_name.clone(),
            condition: format!("{:?}", args.split).to_lowercase(),
        }],
    )?;

    Manifest::new("eval", split.seed)
        .arg("--checkpoint", args.checkpoint.display())
        .arg("--split", format!("{:?}", args.split).to_lowercase())
        .arg("--split-seed", args.data.split_seed)
        .input(args.data.data.display())
        .input(args.checkpoint.display())
        .hash_config(&checkpoint.metadata)?
        .output("eval.json")
        .output("report.csv")
        .write(&args.out)?;

    println!(
        "{policy_name}: accuracy {accuracy:.4}, mean cost {mean_cost:.6}, shares {shares:?}"
    );
    Ok(())
}

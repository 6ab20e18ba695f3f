//! `crouter bench` — throughput benchmark of a loaded checkpoint.

use std::fs;
use std::path::PathBuf;

use clap::Args;

use crouter_core::evaluation::throughput_benchmark;

use super::{load_policy, records_for, DataArgs, SplitChoice};
use crate::context::{prepare_out_dir, CliResult, Manifest};

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub repetitions: usize,
    #[arg(long, value_enum, default_value_t = SplitChoice::Test)]
    pub split: SplitChoice,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

pub fn run(args: BenchArgs) -> CliResult {
    let (dataset, split) = args.data.load()?;
    let (policy, checkpoint) = load_policy(&args.checkpoint)?;
    prepare_out_dir(&args.out, args.force)?;

    let indices = args.split.indices(&split, dataset.len());
    let records = records_for(&dataset, &indices);
    let report = throughput_benchmark(&policy, &records, args.repetitions)?;

    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    fs::write(args.out.join("bench.json"), json)?;

    Manifest::new("bench", split.seed)
        .arg("--checkpoint", args.checkpoint.display())
        .arg("--repetitions", args.repetitions)
        .arg("--split-seed", args.data.split_seed)
        .input(args.data.data.display())
        .input(args.checkpoint.display())
        .hash_config(&checkpoint.metadata)?
        .output("bench.json")
        .write(&args.out)?;

    println!(
        "{} queries x {} repetitions: mean {:.2} ms ({:.0} q/s), best {:.2} ms ({:.0} q/s)",
        report.queries,
        report.repetitions,
        report.mean_seconds * 1e3,
        report.mean_qps,
        report.best_seconds * 1e3,
        report.best_qps
    );
    Ok(())
}

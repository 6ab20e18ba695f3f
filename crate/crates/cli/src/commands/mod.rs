//! Subcommand definitions and dispatch.

mod bench;
mod eval;
mod gen_data;
mod report;
mod route;
mod serve;
mod studies;
mod sweep;
mod train;

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Subcommand};

use crouter_core::dataset::{split_dataset, Dataset, DatasetSplit};
use crouter_core::routers::{Checkpoint, RouterPolicy};

use crate::context::{user_error, CliResult, TrainOverrides};

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with planted structure
    GenData(gen_data::GenDataArgs),
    /// Train one routing policy and write a checkpoint
    Train(train::TrainArgs),
    /// Retrain across a lambda grid and multiple seeds
    Sweep(sweep::SweepArgs),
    /// Evaluate a checkpoint on a dataset split
    Eval(eval::EvalArgs),
    /// Concept-group ablation study (retrains without each group)
    Ablate(studies::AblateArgs),
    /// Gold-label intervention study (no retraining)
    Intervene(studies::InterveneArgs),
    /// Counterfactual language-flip study on synthetic concept vectors
    Counterfactual(studies::CounterfactualArgs),
    /// Throughput benchmark of a checkpoint
    Bench(bench::BenchArgs),
    /// Route one query and print the decision as JSON
    Route(route::RouteArgs),
    /// Serve a checkpoint over JSON/HTTP
    Serve(serve::ServeArgs),
    /// Emit frontier, share, and significance files from sweep results
    Report(report::ReportArgs),
}

pub fn dispatch(command: Command) -> CliResult {
    match command {
        Command::GenData(args) => gen_data::run(args),
        Command::Train(args) => train::run(args),
        Command::Sweep(args) => sweep::run(args),
        Command::Eval(args) => eval::run(args),
        Command::Ablate(args) => studies::run_ablate(args),
        Command::Intervene(args) => studies::run_intervene(args),
        Command::Counterfactual(args) => studies::run_counterfactual(args),
        Command::Bench(args) => bench::run(args),
        Command::Route(args) => route::run(args),
        Command::Serve(args) => serve::run(args),
        Command::Report(args) => report::run(args),
    }
}

// ---------------------------------------------------------------------------
// Shared argument bundles
// ---------------------------------------------------------------------------

/// Dataset directory plus the split seed shared by all runs over it.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset directory (header.json + records.jsonl)
    #[arg(long)]
    pub data: PathBuf,
    /// Seed of the deterministic 80/10/10 split
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
}

impl DataArgs {
    pub fn load(&self) -> CliResult<(Dataset, DatasetSplit)> {
        let dataset = Dataset::load(&self.data)?;
        let split = split_dataset(dataset.len(), self.split_seed)?;
        Ok((dataset, split))
    }
}

/// Hyperparameter flags; these win over any config-file section.
#[derive(Debug, Clone, Copy, Default, Args)]
pub struct HyperFlags {
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
}

impl HyperFlags {
    pub fn overrides(&self) -> TrainOverrides {
        TrainOverrides {
            hidden_dim: self.hidden_dim,
            dropout: self.dropout,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
        }
    }

    /// Loop-control-only subset (epochs/patience), applied to the concept
    /// head so a single flag shortens both trainings.
    pub fn loop_overrides(&self) -> TrainOverrides {
        TrainOverrides {
            max_epochs: self.max_epochs,
            patience: self.patience,
            ..TrainOverrides::default()
        }
    }
}

/// Which part of the split an evaluation-style command reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SplitChoice {
    Train,
    Validation,
    Test,
    All,
}

impl SplitChoice {
    pub fn indices(&self, split: &DatasetSplit, n: usize) -> Vec<usize> {
        match self {
            SplitChoice::Train => split.train.clone(),
            SplitChoice::Validation => split.validation.clone(),
            SplitChoice::Test => split.test.clone(),
            SplitChoice::All => (0..n).collect(),
        }
    }
}

pub fn load_policy(path: &std::path::Path) -> CliResult<(RouterPolicy, Checkpoint)> {
    let checkpoint = Checkpoint::load(path)?;
    let policy = checkpoint.clone().into_policy()?;
    Ok((policy, checkpoint))
}

/// Parses "default" or a comma-separated list into a sweep grid.
pub fn parse_grid(text: &str) -> CliResult<crouter_core::training::SweepGrid> {
    if text == "default" {
        return Ok(crouter_core::training::SweepGrid::default_grid());
    }
    let lambdas: Vec<f64> = text
        .split(',')
        .map(|part| {
            f64::from_str(part.trim())
                .map_err(|_| user_error(format!("invalid lambda value '{part}' in grid")))
        })
        .collect::<CliResult<_>>()?;
    Ok(crouter_core::training::SweepGrid::new(lambdas)?)
}

/// Collects the records of one split part by value.
pub fn records_for(
    dataset: &Dataset,
    indices: &[usize],
) -> Vec<crouter_core::dataset::QueryRecord> {
    indices.iter().map(|&i| dataset.records[i].clone()).collect()
}

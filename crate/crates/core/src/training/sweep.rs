//! Lambda-sweep and multi-seed orchestration.
//!
//! Every (lambda, seed) pair is an independent run over the shared split.
//! For the bottleneck policy the concept head is trained once per seed and
//! reused across lambdas — its objective has no cost term, so the head is
//! identical for every lambda. Runs are deterministic given their seed
//! regardless of execution order, so the sweep may run them in parallel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    train_blackbox_head, train_concept_head, train_suitability_head, TrainConfig, TrainingCurve,
};
use crate::dataset::{Dataset, DatasetSplit, QueryRecord};
use crate::error::{Error, Result};
use crate::evaluation::{
    assignment_share, decide_all, mean_routed_cost, routing_accuracy, FrontierPoint,
};
use crate::routers::{BlackBoxRouter, BottleneckRouter, PolicyKind, RouterPolicy};

/// Ordered lambda values to sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub lambdas: Vec<f64>,
}

impl SweepGrid {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        for window in lambdas.windows(2) {
            if window[1] <= window[0] {
                return Err(Error::Config(
                    "sweep grid must be strictly increasing".into(),
                ));
            }
        }
        if lambdas[0] < 0.0 {
            return Err(Error::Config("lambda values must be non-negative".into()));
        }
        Ok(Self { lambdas })
    }

    /// The default grid: 0.1 steps on [0, 1), then integer steps to 10.
    pub fn default_grid() -> Self {
        let mut lambdas: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        lambdas.extend((1..=10).map(|i| i as f64));
        Self { lambdas }
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepPolicy {
    Bottleneck,
    BlackBox,
}

impl SweepPolicy {
    pub fn kind(&self) -> PolicyKind {
        match self {
            SweepPolicy::Bottleneck => PolicyKind::Bottleneck,
            SweepPolicy::BlackBox => PolicyKind::BlackBox,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub grid: SweepGrid,
    pub seeds: Vec<u64>,
    /// Concept-head config (bottleneck sweeps only).
    pub concept: TrainConfig,
    /// Suitability or black-box head config; its lambda/seed are overridden
    /// per run.
    pub head: TrainConfig,
    pub parallel: bool,
}

/// Test metrics of one completed run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub lambda: f64,
    pub seed: u64,
    pub accuracy: f64,
    pub mean_cost: f64,
    pub shares: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepRun {
    pub metrics: RunMetrics,
    pub router: RouterPolicy,
    /// Training curve of the cost-regularized head for this run.
    pub head_curve: TrainingCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedRun {
    pub lambda: f64,
    pub seed: u64,
    pub error: String,
}

/// All runs of one sweep; failures are recorded, not fatal.
#[derive(Debug)]
pub struct RunSet {
    pub policy: PolicyKind,
    pub split_seed: u64,
    pub runs: Vec<SweepRun>,
    pub failures: Vec<FailedRun>,
    /// Per-seed concept-head curves (bottleneck sweeps share one concept
    /// head across lambdas).
    pub concept_curves: Vec<(u64, TrainingCurve)>,
}

fn mean_std(samples: &[f64]) -> (f64, f64) {
    let mean = samples.iter().sum::<f64>() / samples.len().max(1) as f64;
    let std = if samples.len() > 1 {
        (samples.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>()
            / (samples.len() - 1) as f64)
            .sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Serializable sweep results: metrics only, no parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub policy: PolicyKind,
    pub split_seed: u64,
    pub grid: SweepGrid,
    pub metrics: Vec<RunMetrics>,
    pub failures: Vec<FailedRun>,
}

impl SweepSummary {
    /// Per-lambda aggregation over seeds, in grid order.
    pub fn frontier_points(&self) -> Vec<FrontierPoint> {
        self.grid
            .lambdas
            .iter()
            .filter_map(|&lambda| {
                let accs: Vec<f64> = self
                    .metrics
                    .iter()
                    .filter(|m| m.lambda == lambda)
                    .map(|m| m.accuracy)
                    .collect();
                if accs.is_empty() {
                    return None;
                }
                let costs: Vec<f64> = self
                    .metrics
                    .iter()
                    .filter(|m| m.lambda == lambda)
                    .map(|m| m.mean_cost)
                    .collect();
                let (acc_mean, acc_std) = mean_std(&accs);
                let (cost_mean, cost_std) = mean_std(&costs);
                Some(FrontierPoint {
                    lambda,
                    acc_mean,
                    acc_std,
                    cost_mean,
                    cost_std,
                    seed_count: accs.len(),
                })
            })
            .collect()
    }

    /// Mean assignment share of one model at each lambda, in grid order.
    pub fn mean_share_by_lambda(&self, model: usize) -> Vec<(f64, f64)> {
        self.grid
            .lambdas
            .iter()
            .filter_map(|&lambda| {
                let shares: Vec<f64> = self
                    .metrics
                    .iter()
                    .filter(|m| m.lambda == lambda)
                    .map(|m| m.shares[model])
                    .collect();
                if shares.is_empty() {
                    None
                } else {
                    Some((lambda, mean_std(&shares).0))
                }
            })
            .collect()
    }

    /// Per-model (lambda, share mean, share std) rows for report files.
    pub fn share_rows(&self) -> Vec<(f64, usize, usize, f64, f64)> {
        let n_models = self.metrics.first().map_or(0, |m| m.shares.len());
        let mut rows = Vec::new();
        for &lambda in &self.grid.lambdas {
            for model in 0..n_models {
                let shares: Vec<f64> = self
                    .metrics
                    .iter()
                    .filter(|m| m.lambda == lambda)
                    .map(|m| m.shares[model])
                    .collect();
                if shares.is_empty() {
                    continue;
                }
                let (mean, std) = mean_std(&shares);
                rows.push((lambda, shares.len(), model, mean, std));
            }
        }
        rows
    }

    /// Accuracy samples across seeds at one lambda (for significance tests).
    pub fn accuracy_samples(&self, lambda: f64) -> Vec<f64> {
        self.metrics
            .iter()
            .filter(|m| m.lambda == lambda)
            .map(|m| m.accuracy)
            .collect()
    }
}

impl RunSet {
    pub fn summary(&self, grid: &SweepGrid) -> SweepSummary {
        SweepSummary {
            policy: self.policy,
            split_seed: self.split_seed,
            grid: grid.clone(),
            metrics: self.runs.iter().map(|r| r.metrics.clone()).collect(),
            failures: self.failures.clone(),
        }
    }

    /// Per-lambda aggregation over seeds, in grid order.
    pub fn frontier_points(&self, grid: &SweepGrid) -> Vec<FrontierPoint> {
        self.summary(grid).frontier_points()
    }

    /// Mean assignment share of one model at each lambda, in grid order.
    pub fn mean_share_by_lambda(&self, grid: &SweepGrid, model: usize) -> Vec<(f64, f64)> {
        self.summary(grid).mean_share_by_lambda(model)
    }

    /// Accuracy samples across seeds at one lambda (for significance tests).
    pub fn accuracy_samples(&self, lambda: f64) -> Vec<f64> {
        self.runs
            .iter()
            .filter(|r| r.metrics.lambda == lambda)
            .map(|r| r.metrics.accuracy)
            .collect()
    }
}

fn evaluate_run(
    policy: RouterPolicy,
    lambda: f64,
    seed: u64,
    test: &[QueryRecord],
    data: &Dataset,
    head_curve: TrainingCurve,
) -> Result<SweepRun> {
    let decisions = decide_all(&policy, test)?;
    let metrics = RunMetrics {
        lambda,
        seed,
        accuracy: routing_accuracy(&decisions, test)?,
        mean_cost: mean_routed_cost(&decisions, test, &data.catalog)?,
        shares: assignment_share(&decisions, &data.catalog)?,
    };
    Ok(SweepRun {
        metrics,
        router: policy,
        head_curve,
    })
}

/// Trains every (lambda, seed) pair and evaluates each run on the test
/// split. Individual run failures are recorded in the result.
pub fn run_sweep(
    data: &Dataset,
    split: &DatasetSplit,
    policy: SweepPolicy,
    config: &SweepConfig,
) -> Result<RunSet> {
    if config.seeds.is_empty() {
        return Err(Error::Config("sweep needs at least one seed".into()));
    }
    SweepGrid::new(config.grid.lambdas.clone())?;
    let test: Vec<QueryRecord> = split.test.iter().map(|&i| data.records[i].clone()).collect();

    type RunResult = std::result::Result<SweepRun, FailedRun>;
    type SeedOutcome = (Vec<RunResult>, Option<(u64, TrainingCurve)>);

    let run_seed = |seed: u64| -> SeedOutcome {
        let mut results = Vec::with_capacity(config.grid.len());
        let mut concept_curve = None;
        match policy {
            SweepPolicy::Bottleneck => {
                // One concept head per seed; its loss has no lambda term.
                let concept = match train_concept_head(
                    data,
                    split,
                    &config.concept.with_seed(seed),
                ) {
                    Ok(head) => {
                        concept_curve = Some((seed, head.curve));
                        head.params
                    }
                    Err(e) => {
                        let failures = config
                            .grid
                            .lambdas
                            .iter()
                            .map(|&lambda| {
                                Err(FailedRun {
                                    lambda,
                                    seed,
                                    error: e.to_string(),
                                })
                            })
                            .collect();
                        return (failures, None);
                    }
                };
                for &lambda in &config.grid.lambdas {
                    let outcome = train_suitability_head(
                        data,
                        split,
                        &config.head.with_lambda(lambda).with_seed(seed),
                    )
                    .and_then(|head| {
                        let router = BottleneckRouter::new(
                            concept.clone(),
                            head.params,
                            data.schema.clone(),
                            data.catalog.clone(),
                        )?;
                        evaluate_run(
                            RouterPolicy::Bottleneck(router),
                            lambda,
                            seed,
                            &test,
                            data,
                            head.curve,
                        )
                    });
                    results.push(outcome.map_err(|e| FailedRun {
                        lambda,
                        seed,
                        error: e.to_string(),
                    }));
                }
            }
            SweepPolicy::BlackBox => {
                for &lambda in &config.grid.lambdas {
                    let outcome = train_blackbox_head(
                        data,
                        split,
                        &config.head.with_lambda(lambda).with_seed(seed),
                    )
                    .and_then(|head| {
                        let router = BlackBoxRouter::new(head.params, data.catalog.clone())?;
                        evaluate_run(
                            RouterPolicy::BlackBox(router),
                            lambda,
                            seed,
                            &test,
                            data,
                            head.curve,
                        )
                    });
                    results.push(outcome.map_err(|e| FailedRun {
                        lambda,
                        seed,
                        error: e.to_string(),
                    }));
                }
            }
        }
        (results, concept_curve)
    };

    let nested: Vec<SeedOutcome> = if config.parallel {
        config.seeds.par_iter().map(|&s| run_seed(s)).collect()
    } else {
        config.seeds.iter().map(|&s| run_seed(s)).collect()
    };

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    let mut concept_curves = Vec::new();
    for (per_seed, curve) in nested {
        for outcome in per_seed {
            match outcome {
                Ok(run) => runs.push(run),
                Err(failure) => failures.push(failure),
            }
        }
        concept_curves.extend(curve);
    }
    // Stable presentation order regardless of scheduling.
    runs.sort_by(|a, b| {
        a.metrics
            .lambda
            .partial_cmp(&b.metrics.lambda)
            .expect("finite lambdas")
            .then(a.metrics.seed.cmp(&b.metrics.seed))
    });
    concept_curves.sort_by_key(|&(seed, _)| seed);

    Ok(RunSet {
        policy: policy.kind(),
        split_seed: split.seed,
        runs,
        failures,
        concept_curves,
    })
}

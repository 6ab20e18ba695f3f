//! Loss assembly and training loops for every learned policy.
//!
//! Three losses are assembled here:
//!
//! - concept head: mean BCE of sigmoid outputs against the full gold
//!   concept vector (binary and soft complexity targets alike);
//! - suitability head: BCE against per-model correctness, plus
//!   `lambda * softmax(logits) . normalized_costs` — the expected routing
//!   cost under the predicted distribution — with gold concepts as inputs;
//! - black-box head: the same composite loss with embeddings as inputs.
//!
//! Every run is single-threaded and deterministic given its seed: batch
//! order reshuffles each epoch from the run RNG, dropout masks come from
//! the same stream, and the best epoch by validation loss (composite, at
//! the training lambda) is the one returned.

mod sweep;

pub use sweep::{
    run_sweep, FailedRun, RunMetrics, RunSet, SweepConfig, SweepGrid, SweepPolicy, SweepRun,
    SweepSummary,
};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{cost_vector, normalize_costs, Dataset, DatasetSplit};
use crate::error::{Error, Result};
use crate::numerics::{
    bce_loss, sigmoid, softmax, AdamConfig, AdamTensor, DenseGrads, DenseParams, OptimizerState,
};
use crate::routers::{BlackBoxRouter, BottleneckRouter, FactorizationRouter, KnnRouter};

pub const DEFAULT_MAX_EPOCHS: usize = 100;
pub const DEFAULT_PATIENCE: usize = 10;

// ---------------------------------------------------------------------------
// Configs
// ---------------------------------------------------------------------------

/// Hyperparameters for one dense head.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden_dim: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    /// Cost-regularization weight; ignored by the concept head.
    pub lambda: f64,
    pub seed: u64,
}

impl TrainConfig {
    /// Concept-head defaults: hidden 256, dropout 0.1, lr 1e-3, batch 24.
    pub fn concept_default() -> Self {
        Self {
            hidden_dim: 256,
            dropout: 0.1,
            learning_rate: 1e-3,
            batch_size: 24,
            max_epochs: DEFAULT_MAX_EPOCHS,
            patience: DEFAULT_PATIENCE,
            lambda: 0.0,
            seed: 0,
        }
    }

    /// Suitability-head defaults: hidden 176, dropout 0.0, lr 1e-3, batch 8.
    pub fn suitability_default() -> Self {
        Self {
            hidden_dim: 176,
            dropout: 0.0,
            learning_rate: 1e-3,
            batch_size: 8,
            max_epochs: DEFAULT_MAX_EPOCHS,
            patience: DEFAULT_PATIENCE,
            lambda: 0.0,
            seed: 0,
        }
    }

    /// Black-box-head defaults: hidden 384, dropout 0.2, lr 1e-3, batch 8.
    pub fn blackbox_default() -> Self {
        Self {
            hidden_dim: 384,
            dropout: 0.2,
            learning_rate: 1e-3,
            batch_size: 8,
            max_epochs: DEFAULT_MAX_EPOCHS,
            patience: DEFAULT_PATIENCE,
            lambda: 0.0,
            seed: 0,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 {
            return Err(Error::Config("hidden_dim must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout {} outside [0,1)",
                self.dropout
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.lambda < 0.0 || !self.lambda.is_finite() {
            return Err(Error::Config(format!(
                "lambda must be a finite non-negative real, got {}",
                self.lambda
            )));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Hyperparameters for the matrix-factorization router: query projection
/// hidden width, model-embedding width, and the usual loop controls.
/// Defaults: hidden 512, embedding 128, lr 1e-3, batch 32.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorizationConfig {
    pub hidden_dim: usize,
    pub embed_dim: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for FactorizationConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 512,
            embed_dim: 128,
            dropout: 0.0,
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: DEFAULT_MAX_EPOCHS,
            patience: DEFAULT_PATIENCE,
            seed: 0,
        }
    }
}

/// Default neighbor count for the KNN router.
pub const DEFAULT_KNN_K: usize = 20;

// ---------------------------------------------------------------------------
// Cost term
// ---------------------------------------------------------------------------

/// Expected routing cost under the predicted distribution:
/// `softmax(logits) . normalized_costs`.
///
/// The per-model BCE head produces independent sigmoids, which do not form
/// a distribution; the softmax here supplies one.
pub fn cost_term(suitability_logits: &[f64], normalized_costs: &[f64]) -> f64 {
    debug_assert_eq!(suitability_logits.len(), normalized_costs.len());
    softmax(suitability_logits)
        .iter()
        .zip(normalized_costs)
        .map(|(&s, &c)| s * c)
        .sum()
}

/// Gradient of [`cost_term`] with respect to the logits:
/// `s_i * (c_i - softmax . c)`.
pub fn cost_term_grad(suitability_logits: &[f64], normalized_costs: &[f64]) -> Vec<f64> {
    let probs = softmax(suitability_logits);
    let expected: f64 = probs
        .iter()
        .zip(normalized_costs)
        .map(|(&s, &c)| s * c)
        .sum();
    probs
        .iter()
        .zip(normalized_costs)
        .map(|(&s, &c)| s * (c - expected))
        .collect()
}

// ---------------------------------------------------------------------------
// Curves
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

pub type TrainingCurve = Vec<EpochStats>;

#[derive(Debug, Clone)]
pub struct TrainedHead {
    pub params: DenseParams,
    pub curve: TrainingCurve,
}

// ---------------------------------------------------------------------------
// Generic head training
// ---------------------------------------------------------------------------

struct Problem<'a> {
    inputs: Vec<&'a [f64]>,
    targets: Vec<&'a [f64]>,
    /// Normalized per-record cost vectors; present iff lambda applies.
    costs: Option<Vec<Vec<f64>>>,
    lambda: f64,
}

impl Problem<'_> {
    /// Composite loss for one example given output logits.
    fn example_loss(&self, logits: &[f64], target: &[f64], idx: usize) -> Result<f64> {
        let probs: Vec<f64> = logits.iter().map(|&z| sigmoid(z)).collect();
        let mut loss = bce_loss(&probs, target)?;
        if let Some(costs) = &self.costs {
            if self.lambda > 0.0 {
                loss += self.lambda * cost_term(logits, &costs[idx]);
            }
        }
        Ok(loss)
    }

    /// Gradient of the composite loss at the output logits.
    fn output_grad(&self, logits: &[f64], target: &[f64], idx: usize) -> Vec<f64> {
        let m = logits.len() as f64;
        let mut grad: Vec<f64> = logits
            .iter()
            .zip(target)
            .map(|(&z, &t)| (sigmoid(z) - t) / m)
            .collect();
        if let Some(costs) = &self.costs {
            if self.lambda > 0.0 {
                let cost_grad = cost_term_grad(logits, &costs[idx]);
                for (g, cg) in grad.iter_mut().zip(cost_grad) {
                    *g += self.lambda * cg;
                }
            }
        }
        grad
    }

    fn mean_loss(&self, params: &DenseParams, indices: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for &i in indices {
            let logits = params.forward(self.inputs[i])?;
            total += self.example_loss(&logits, self.targets[i], i)?;
        }
        Ok(total / indices.len().max(1) as f64)
    }
}

fn train_dense_head(
    problem: &Problem<'_>,
    train_idx: &[usize],
    val_idx: &[usize],
    in_dim: usize,
    out_dim: usize,
    config: &TrainConfig,
) -> Result<TrainedHead> {
    config.validate()?;
    if train_idx.is_empty() || val_idx.is_empty() {
        return Err(Error::Size(
            "training needs non-empty train and validation splits".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = DenseParams::head_init(in_dim, config.hidden_dim, out_dim, &mut rng);
    let mut optimizer = OptimizerState::new(
        &params,
        AdamConfig::with_learning_rate(config.learning_rate),
    );

    let mut best = params.clone();
    let mut best_val = f64::INFINITY;
    let mut stale_epochs = 0usize;
    let mut curve = Vec::new();
    let mut order: Vec<usize> = train_idx.to_vec();

    for epoch in 0..config.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut batch_grads = DenseGrads::zeros_like(&params);
            let mut batch_loss = 0.0;
            for &i in batch {
                let trace =
                    params.forward_traced(problem.inputs[i], config.dropout, true, &mut rng)?;
                batch_loss += problem.example_loss(&trace.output, problem.targets[i], i)?;
                let grad_out = problem.output_grad(&trace.output, problem.targets[i], i);
                let grads = params.backward(&trace, &grad_out)?;
                batch_grads.add(&grads);
            }
            batch_grads.scale(1.0 / batch.len() as f64);
            optimizer.step(&mut params, &batch_grads)?;
            epoch_loss += batch_loss;
        }
        let train_loss = epoch_loss / train_idx.len() as f64;
        let val_loss = problem.mean_loss(&params, val_idx)?;
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(Error::Training(format!(
                "loss diverged at epoch {epoch} (train {train_loss}, val {val_loss})"
            )));
        }
        curve.push(EpochStats {
            epoch,
            train_loss,
            val_loss,
        });

        if val_loss < best_val {
            best_val = val_loss;
            best = params.clone();
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= config.patience {
                break;
            }
        }
    }

    Ok(TrainedHead {
        params: best,
        curve,
    })
}

fn normalized_cost_table(data: &Dataset) -> Result<Vec<Vec<f64>>> {
    data.records
        .iter()
        .map(|r| normalize_costs(&cost_vector(r, &data.catalog)))
        .collect()
}

fn correctness_targets(data: &Dataset) -> Vec<Vec<f64>> {
    data.records
        .iter()
        .map(|r| r.correctness.iter().map(|&c| c as f64).collect())
        .collect()
}

// ---------------------------------------------------------------------------
// Public training entry points
// ---------------------------------------------------------------------------

/// Trains the concept head: embeddings -> gold concept vector, plain BCE.
/// `lambda` in the config is ignored; the concept objective has no cost term.
pub fn train_concept_head(
    data: &Dataset,
    split: &DatasetSplit,
    config: &TrainConfig,
) -> Result<TrainedHead> {
    let problem = Problem {
        inputs: data.records.iter().map(|r| r.embedding.as_slice()).collect(),
        targets: data.records.iter().map(|r| r.concepts.as_slice()).collect(),
        costs: None,
        lambda: 0.0,
    };
    train_dense_head(
        &problem,
        &split.train,
        &split.validation,
        data.embedding_dim(),
        data.schema.width(),
        config,
    )
}

/// Trains the suitability head on gold concepts (predicted concepts are an
/// inference-time substitution), with the composite cost-regularized loss.
pub fn train_suitability_head(
    data: &Dataset,
    split: &DatasetSplit,
    config: &TrainConfig,
) -> Result<TrainedHead> {
    let targets = correctness_targets(data);
    let problem = Problem {
        inputs: data.records.iter().map(|r| r.concepts.as_slice()).collect(),
        targets: targets.iter().map(Vec::as_slice).collect(),
        costs: Some(normalized_cost_table(data)?),
        lambda: config.lambda,
    };
    train_dense_head(
        &problem,
        &split.train,
        &split.validation,
        data.schema.width(),
        data.catalog.len(),
        config,
    )
}

/// Trains the black-box head straight from embeddings with the same
/// composite loss as the suitability head.
pub fn train_blackbox_head(
    data: &Dataset,
    split: &DatasetSplit,
    config: &TrainConfig,
) -> Result<TrainedHead> {
    let targets = correctness_targets(data);
    let problem = Problem {
        inputs: data.records.iter().map(|r| r.embedding.as_slice()).collect(),
        targets: targets.iter().map(Vec::as_slice).collect(),
        costs: Some(normalized_cost_table(data)?),
        lambda: config.lambda,
    };
    train_dense_head(
        &problem,
        &split.train,
        &split.validation,
        data.embedding_dim(),
        data.catalog.len(),
        config,
    )
}

/// Trains both bottleneck heads independently and assembles the router.
pub fn train_bottleneck(
    data: &Dataset,
    split: &DatasetSplit,
    concept_config: &TrainConfig,
    suitability_config: &TrainConfig,
) -> Result<(BottleneckRouter, TrainingCurve, TrainingCurve)> {
    let concept = train_concept_head(data, split, concept_config)?;
    let suitability = train_suitability_head(data, split, suitability_config)?;
    let router = BottleneckRouter::new(
        concept.params,
        suitability.params,
        data.schema.clone(),
        data.catalog.clone(),
    )?;
    Ok((router, concept.curve, suitability.curve))
}

/// Trains the black-box router.
pub fn train_blackbox(
    data: &Dataset,
    split: &DatasetSplit,
    config: &TrainConfig,
) -> Result<(BlackBoxRouter, TrainingCurve)> {
    let head = train_blackbox_head(data, split, config)?;
    let router = BlackBoxRouter::new(head.params, data.catalog.clone())?;
    Ok((router, head.curve))
}

/// Fits the KNN router on the train split.
pub fn fit_knn(data: &Dataset, split: &DatasetSplit, k: usize) -> Result<KnnRouter> {
    let embeddings = split
        .train
        .iter()
        .map(|&i| data.records[i].embedding.clone())
        .collect();
    let correctness = split
        .train
        .iter()
        .map(|&i| data.records[i].correctness.clone())
        .collect();
    KnnRouter::fit(embeddings, correctness, k, data.catalog.clone())
}

/// Trains the matrix-factorization router: a query projection MLP and a
/// per-model embedding matrix, jointly, with per-model BCE.
pub fn train_factorization(
    data: &Dataset,
    split: &DatasetSplit,
    config: &FactorizationConfig,
) -> Result<(FactorizationRouter, TrainingCurve)> {
    if config.embed_dim == 0 || config.hidden_dim == 0 {
        return Err(Error::Config("factorization dims must be positive".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::Config("batch_size must be at least 1".into()));
    }
    if split.train.is_empty() || split.validation.is_empty() {
        return Err(Error::Size(
            "training needs non-empty train and validation splits".into(),
        ));
    }

    let d = data.embedding_dim();
    let n = data.catalog.len();
    let e = config.embed_dim;
    let targets = correctness_targets(data);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut projection = DenseParams::head_init(d, config.hidden_dim, e, &mut rng);
    // Small random model embeddings; zeros would pin every score at 0.5
    // with zero gradient through the projection.
    let mut model_embeddings: Vec<f64> = (0..n * e)
        .map(|_| rng.random_range(-0.1..0.1))
        .collect();

    let adam_cfg = AdamConfig::with_learning_rate(config.learning_rate);
    let mut proj_opt = OptimizerState::new(&projection, adam_cfg);
    let mut emb_opt = AdamTensor::new(n * e);
    let mut emb_step = 0u64;

    let score_loss = |projection: &DenseParams, model_embeddings: &[f64], idx: usize| -> Result<f64> {
        let projected = projection.forward(data.records[idx].embedding.as_slice())?;
        let probs: Vec<f64> = (0..n)
            .map(|m| {
                let row = m * e;
                let dot: f64 = projected
                    .iter()
                    .zip(&model_embeddings[row..row + e])
                    .map(|(&p, &q)| p * q)
                    .sum();
                sigmoid(dot)
            })
            .collect();
        bce_loss(&probs, &targets[idx])
    };
    let mean_loss = |projection: &DenseParams, model_embeddings: &[f64], idx: &[usize]| -> Result<f64> {
        let mut total = 0.0;
        for &i in idx {
            total += score_loss(projection, model_embeddings, i)?;
        }
        Ok(total / idx.len().max(1) as f64)
    };

    let mut best = (projection.clone(), model_embeddings.clone());
    let mut best_val = f64::INFINITY;
    let mut stale = 0usize;
    let mut curve = Vec::new();
    let mut order: Vec<usize> = split.train.to_vec();

    for epoch in 0..config.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut proj_grads = DenseGrads::zeros_like(&projection);
            let mut emb_grads = vec![0.0; n * e];
            let mut batch_loss = 0.0;
            for &i in batch {
                let trace = projection.forward_traced(
                    data.records[i].embedding.as_slice(),
                    config.dropout,
                    true,
                    &mut rng,
                )?;
                let projected = &trace.output;
                let mut d_projected = vec![0.0; e];
                let mut example_loss = 0.0;
                for (m, &t) in targets[i].iter().enumerate() {
                    let row = m * e;
                    let dot: f64 = projected
                        .iter()
                        .zip(&model_embeddings[row..row + e])
                        .map(|(&p, &q)| p * q)
                        .sum();
                    let prob = sigmoid(dot);
                    example_loss += bce_loss(&[prob], &[t])?;
                    let d_dot = (prob - t) / n as f64;
                    for j in 0..e {
                        d_projected[j] += d_dot * model_embeddings[row + j];
                        emb_grads[row + j] += d_dot * projected[j];
                    }
                }
                batch_loss += example_loss / n as f64;
                let grads = projection.backward(&trace, &d_projected)?;
                proj_grads.add(&grads);
            }
            let scale = 1.0 / batch.len() as f64;
            proj_grads.scale(scale);
            for g in emb_grads.iter_mut() {
                *g *= scale;
            }
            proj_opt.step(&mut projection, &proj_grads)?;
            emb_step += 1;
            emb_opt.step(emb_step, &adam_cfg, &mut model_embeddings, &emb_grads);
            epoch_loss += batch_loss;
        }
        let train_loss = epoch_loss / split.train.len() as f64;
        let val_loss = mean_loss(&projection, &model_embeddings, &split.validation)?;
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(Error::Training(format!(
                "factorization loss diverged at epoch {epoch}"
            )));
        }
        curve.push(EpochStats {
            epoch,
            train_loss,
            val_loss,
        });
        if val_loss < best_val {
            best_val = val_loss;
            best = (projection.clone(), model_embeddings.clone());
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }

    let router = FactorizationRouter::new(best.0, best.1, e, data.catalog.clone())?;
    Ok((router, curve))
}

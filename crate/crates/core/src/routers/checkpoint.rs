//! Versioned checkpoint container for every routing policy.
//!
//! A checkpoint holds the policy kind and parameters (as 32-bit floats),
//! the concept schema and catalog snapshot it was trained against, and the
//! training metadata. Serialization is deterministic JSON, so a save/load/
//! save cycle is byte-identical.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    BlackBoxRouter, BottleneckRouter, FactorizationRouter, KnnRouter, PolicyKind, RandomRouter,
    RouterPolicy,
};
use crate::dataset::{ConceptSchema, ModelCatalog};
use crate::error::{Error, Result};
use crate::numerics::DenseParams;
use crate::training::TrainConfig;

pub const CHECKPOINT_VERSION: u32 = 1;

/// How the training cost term turned suitability logits into a
/// distribution. Recorded so checkpoints are self-explanatory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostTermKind {
    /// Expected cost under the softmax of the suitability logits.
    SoftmaxExpectation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMetadata {
    pub lambda: f64,
    pub seed: u64,
    pub cost_term: CostTermKind,
    /// Config of the concept head (bottleneck checkpoints).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concept_config: Option<TrainConfig>,
    /// Config of the suitability / black-box head.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head_config: Option<TrainConfig>,
}

impl TrainMetadata {
    pub fn new(lambda: f64, seed: u64) -> Self {
        Self {
            lambda,
            seed,
            cost_term: CostTermKind::SoftmaxExpectation,
            concept_config: None,
            head_config: None,
        }
    }
}

/// Two-layer parameters stored as 32-bit floats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseParamsF32 {
    pub in_dim: usize,
    pub hidden_dim: usize,
    pub out_dim: usize,
    pub w1: Vec<f32>,
    pub b1: Vec<f32>,
    pub w2: Vec<f32>,
    pub b2: Vec<f32>,
}

impl DenseParamsF32 {
    fn from_dense(params: &DenseParams) -> Self {
        let narrow = |v: &[f64]| v.iter().map(|&x| x as f32).collect();
        Self {
            in_dim: params.in_dim(),
            hidden_dim: params.hidden_dim(),
            out_dim: params.out_dim(),
            w1: narrow(&params.w1),
            b1: narrow(&params.b1),
            w2: narrow(&params.w2),
            b2: narrow(&params.b2),
        }
    }

    fn to_dense(&self) -> Result<DenseParams> {
        let widen = |v: &[f32]| v.iter().map(|&x| x as f64).collect();
        DenseParams::from_parts(
            self.in_dim,
            self.hidden_dim,
            self.out_dim,
            widen(&self.w1),
            widen(&self.b1),
            widen(&self.w2),
            widen(&self.b2),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyParams {
    Bottleneck {
        concept_head: DenseParamsF32,
        suitability_head: DenseParamsF32,
    },
    BlackBox {
        head: DenseParamsF32,
    },
    Knn {
        k: usize,
        embeddings: Vec<Vec<f32>>,
        correctness: Vec<Vec<u8>>,
    },
    Factorization {
        projection: DenseParamsF32,
        embed_dim: usize,
        model_embeddings: Vec<f32>,
    },
    Random {
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub schema: ConceptSchema,
    pub catalog: ModelCatalog,
    pub policy: PolicyParams,
    pub metadata: TrainMetadata,
}

impl Checkpoint {
    /// Snapshots a policy. `schema` is the concept schema of the training
    /// data (for bottleneck policies it must match the router's own).
    pub fn from_policy(
        policy: &RouterPolicy,
        schema: &ConceptSchema,
        metadata: TrainMetadata,
    ) -> Result<Self> {
        let (catalog, params) = match policy {
            RouterPolicy::Bottleneck(r) => {
                if r.schema != *schema {
                    return Err(Error::Integrity(
                        "bottleneck router schema differs from the checkpoint schema".into(),
                    ));
                }
                (
                    r.catalog.clone(),
                    PolicyParams::Bottleneck {
                        concept_head: DenseParamsF32::from_dense(&r.concept_head),
                        suitability_head: DenseParamsF32::from_dense(&r.suitability_head),
                    },
                )
            }
            RouterPolicy::BlackBox(r) => (
                r.catalog.clone(),
                PolicyParams::BlackBox {
                    head: DenseParamsF32::from_dense(&r.head),
                },
            ),
            RouterPolicy::Knn(r) => (
                r.catalog.clone(),
                PolicyParams::Knn {
                    k: r.k,
                    embeddings: r
                        .embeddings
                        .iter()
                        .map(|e| e.iter().map(|&x| x as f32).collect())
                        .collect(),
                    correctness: r.correctness.clone(),
                },
            ),
            RouterPolicy::Factorization(r) => (
                r.catalog.clone(),
                PolicyParams::Factorization {
                    projection: DenseParamsF32::from_dense(&r.projection),
                    embed_dim: r.embed_dim,
                    model_embeddings: r.model_embeddings.iter().map(|&x| x as f32).collect(),
                },
            ),
            RouterPolicy::Random(r) => (
                r.catalog.clone(),
                PolicyParams::Random { seed: r.seed },
            ),
            RouterPolicy::Oracle => {
                return Err(Error::Contract(
                    "the oracle policy has no parameters to checkpoint".into(),
                ))
            }
        };
        Ok(Self {
            version: CHECKPOINT_VERSION,
            schema: schema.clone(),
            catalog,
            policy: params,
            metadata,
        })
    }

    pub fn kind(&self) -> PolicyKind {
        match self.policy {
            PolicyParams::Bottleneck { .. } => PolicyKind::Bottleneck,
            PolicyParams::BlackBox { .. } => PolicyKind::BlackBox,
            PolicyParams::Knn { .. } => PolicyKind::Knn,
            PolicyParams::Factorization { .. } => PolicyKind::Factorization,
            PolicyParams::Random { .. } => PolicyKind::Random,
        }
    }

    /// Rebuilds the runtime policy, re-validating all shapes.
    pub fn into_policy(self) -> Result<RouterPolicy> {
        self.schema.validate()?;
        self.catalog.validate()?;
        match self.policy {
            PolicyParams::Bottleneck {
                concept_head,
                suitability_head,
            } => Ok(RouterPolicy::Bottleneck(BottleneckRouter::new(
                concept_head.to_dense()?,
                suitability_head.to_dense()?,
                self.schema,
                self.catalog,
            )?)),
            PolicyParams::BlackBox { head } => Ok(RouterPolicy::BlackBox(BlackBoxRouter::new(
                head.to_dense()?,
                self.catalog,
            )?)),
            PolicyParams::Knn {
                k,
                embeddings,
                correctness,
            } => Ok(RouterPolicy::Knn(KnnRouter::fit(
                embeddings
                    .into_iter()
                    .map(|e| e.into_iter().map(f64::from).collect())
                    .collect(),
                correctness,
                k,
                self.catalog,
            )?)),
            PolicyParams::Factorization {
                projection,
                embed_dim,
                model_embeddings,
            } => Ok(RouterPolicy::Factorization(FactorizationRouter::new(
                projection.to_dense()?,
                model_embeddings.into_iter().map(f64::from).collect(),
                embed_dim,
                self.catalog,
            )?)),
            PolicyParams::Random { seed } => {
                Ok(RouterPolicy::Random(RandomRouter::new(seed, self.catalog)))
            }
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(fs::File::create(path)?);
        serde_json::to_writer_pretty(&mut out, self)?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| {
            Error::Checkpoint(format!("{}: {e}", path.display()))
        })?;
        let checkpoint: Checkpoint = serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        if checkpoint.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                checkpoint.version
            )));
        }
        checkpoint.schema.validate()?;
        checkpoint.catalog.validate()?;
        Ok(checkpoint)
    }
}

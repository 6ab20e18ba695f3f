//! Routing policies: the concept-bottleneck router plus black-box MLP,
//! KNN, matrix-factorization, random, and oracle baselines.
//!
//! All policies are immutable once constructed; prediction never mutates.
//! Ties in every argmax are broken toward the lowest catalog index, which
//! makes decisions deterministic and testable.

mod checkpoint;

pub use checkpoint::{Checkpoint, CostTermKind, TrainMetadata, CHECKPOINT_VERSION};

use serde::{Deserialize, Serialize};

use crate::dataset::{ConceptSchema, GroupKind, GroupName, ModelCatalog};
use crate::error::{Error, Result};
use crate::numerics::{sigmoid, DenseParams};

/// Threshold above which a binary concept counts as active in rationales.
pub const RATIONALE_THRESHOLD: f64 = 0.5;

// ---------------------------------------------------------------------------
// Decisions and rationales
// ---------------------------------------------------------------------------

/// Per-group decoded concept rationale attached to bottleneck decisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRationale {
    pub group: GroupName,
    /// Binary labels whose predicted probability exceeds the threshold.
    pub active: Vec<String>,
    /// Continuous label values (complexity group only).
    pub values: Vec<(String, f64)>,
    /// True when this group's slice was overridden by an intervention.
    pub intervened: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rationale {
    pub groups: Vec<GroupRationale>,
}

/// One routing decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingDecision {
    pub model_index: usize,
    pub model_name: String,
    /// Per-model suitability scores in catalog order.
    pub scores: Vec<f64>,
    /// Full predicted (possibly intervened) concept vector; bottleneck only.
    pub concepts: Option<Vec<f64>>,
    /// Decoded concept rationale; bottleneck only.
    pub rationale: Option<Rationale>,
}

/// Index of the maximum score; ties broken toward the lowest index.
pub fn argmax_lowest_index(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

fn build_rationale(
    schema: &ConceptSchema,
    concepts: &[f64],
    intervened: Option<GroupName>,
) -> Rationale {
    let groups = schema
        .groups
        .iter()
        .map(|group| {
            let range = schema.group_range(group.name).expect("schema group");
            let slice = &concepts[range.clone()];
            let (active, values) = match group.kind {
                GroupKind::Binary => (
                    group
                        .labels
                        .iter()
                        .zip(slice)
                        .filter(|(_, &v)| v > RATIONALE_THRESHOLD)
                        .map(|(label, _)| label.clone())
                        .collect(),
                    Vec::new(),
                ),
                GroupKind::Continuous => (
                    Vec::new(),
                    group
                        .labels
                        .iter()
                        .zip(slice)
                        .map(|(label, &v)| (label.clone(), v))
                        .collect(),
                ),
            };
            GroupRationale {
                group: group.name,
                active,
                values,
                intervened: intervened == Some(group.name),
            }
        })
        .collect();
    Rationale { groups }
}

// ---------------------------------------------------------------------------
// Concept-bottleneck router
// ---------------------------------------------------------------------------

/// Two independently trained heads: embeddings -> concepts -> suitability.
/// The decision is a pure function of the concept vector, which is what
/// makes rationales faithful and interventions possible.
#[derive(Debug, Clone)]
pub struct BottleneckRouter {
    pub concept_head: DenseParams,
    pub suitability_head: DenseParams,
    pub schema: ConceptSchema,
    pub catalog: ModelCatalog,
}

impl BottleneckRouter {
    pub fn new(
        concept_head: DenseParams,
        suitability_head: DenseParams,
        schema: ConceptSchema,
        catalog: ModelCatalog,
    ) -> Result<Self> {
        if concept_head.out_dim() != schema.width() {
            return Err(Error::Shape(format!(
                "concept head outputs {} but schema width is {}",
                concept_head.out_dim(),
                schema.width()
            )));
        }
        if suitability_head.in_dim() != schema.width() {
            return Err(Error::Shape(format!(
                "suitability head expects {} inputs but schema width is {}",
                suitability_head.in_dim(),
                schema.width()
            )));
        }
        if suitability_head.out_dim() != catalog.len() {
            return Err(Error::Shape(format!(
                "suitability head outputs {} but catalog has {} models",
                suitability_head.out_dim(),
                catalog.len()
            )));
        }
        Ok(Self {
            concept_head,
            suitability_head,
            schema,
            catalog,
        })
    }

    pub fn embedding_dim(&self) -> usize {
        self.concept_head.in_dim()
    }

    /// Predicted concept vector: sigmoid over every output, binary groups
    /// and complexity alike. Deterministic (inference mode, no dropout).
    pub fn predict_concepts(&self, embedding: &[f64]) -> Result<Vec<f64>> {
        let logits = self.concept_head.forward(embedding)?;
        Ok(logits.into_iter().map(sigmoid).collect())
    }

    /// Per-model suitability from a concept vector. Accepts predicted, gold,
    /// or synthetic concepts interchangeably; that interchangeability is what
    /// enables intervention and counterfactual studies.
    pub fn suitability_from_concepts(&self, concepts: &[f64]) -> Result<Vec<f64>> {
        let logits = self.suitability_head.forward(concepts)?;
        Ok(logits.into_iter().map(sigmoid).collect())
    }

    pub fn route(&self, embedding: &[f64]) -> Result<RoutingDecision> {
        let concepts = self.predict_concepts(embedding)?;
        self.decision_from_concepts(concepts, None)
    }

    /// Routes with one concept group's slice replaced by `override_values`;
    /// every other concept prediction is left unchanged and the decision is
    /// recomputed from the edited vector.
    pub fn route_with_intervention(
        &self,
        embedding: &[f64],
        group: GroupName,
        override_values: &[f64],
    ) -> Result<RoutingDecision> {
        let range = self
            .schema
            .group_range(group)
            .ok_or_else(|| Error::Schema(format!("unknown concept group '{group}'")))?;
        if override_values.len() != range.len() {
            return Err(Error::Shape(format!(
                "override for '{group}' has {} values, group width is {}",
                override_values.len(),
                range.len()
            )));
        }
        if override_values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Value(format!(
                "override values for '{group}' must lie in [0,1]"
            )));
        }
        let mut concepts = self.predict_concepts(embedding)?;
        concepts[range].copy_from_slice(override_values);
        self.decision_from_concepts(concepts, Some(group))
    }

    fn decision_from_concepts(
        &self,
        concepts: Vec<f64>,
        intervened: Option<GroupName>,
    ) -> Result<RoutingDecision> {
        let scores = self.suitability_from_concepts(&concepts)?;
        let model_index = argmax_lowest_index(&scores);
        let rationale = build_rationale(&self.schema, &concepts, intervened);
        Ok(RoutingDecision {
            model_index,
            model_name: self.catalog.models[model_index].name.clone(),
            scores,
            concepts: Some(concepts),
            rationale: Some(rationale),
        })
    }

    pub fn param_count(&self) -> usize {
        self.concept_head.param_count() + self.suitability_head.param_count()
    }
}

// ---------------------------------------------------------------------------
// Black-box MLP router
// ---------------------------------------------------------------------------

/// Single head mapping embeddings straight to per-model suitability.
#[derive(Debug, Clone)]
pub struct BlackBoxRouter {
    pub head: DenseParams,
    pub catalog: ModelCatalog,
}

impl BlackBoxRouter {
    pub fn new(head: DenseParams, catalog: ModelCatalog) -> Result<Self> {
        if head.out_dim() != catalog.len() {
            return Err(Error::Shape(format!(
                "head outputs {} but catalog has {} models",
                head.out_dim(),
                catalog.len()
            )));
        }
        Ok(Self { head, catalog })
    }

    pub fn predict(&self, embedding: &[f64]) -> Result<Vec<f64>> {
        let logits = self.head.forward(embedding)?;
        Ok(logits.into_iter().map(sigmoid).collect())
    }

    pub fn route(&self, embedding: &[f64]) -> Result<RoutingDecision> {
        let scores = self.predict(embedding)?;
        let model_index = argmax_lowest_index(&scores);
        Ok(RoutingDecision {
            model_index,
            model_name: self.catalog.models[model_index].name.clone(),
            scores,
            concepts: None,
            rationale: None,
        })
    }
}

// ---------------------------------------------------------------------------
// KNN router
// ---------------------------------------------------------------------------

/// Per-model nearest-neighbor correctness voting over stored training data.
#[derive(Debug, Clone)]
pub struct KnnRouter {
    pub embeddings: Vec<Vec<f64>>,
    pub correctness: Vec<Vec<u8>>,
    pub k: usize,
    pub catalog: ModelCatalog,
}

impl KnnRouter {
    pub fn fit(
        embeddings: Vec<Vec<f64>>,
        correctness: Vec<Vec<u8>>,
        k: usize,
        catalog: ModelCatalog,
    ) -> Result<Self> {
        if embeddings.is_empty() {
            return Err(Error::State(
                "KNN router fitted on an empty training set".into(),
            ));
        }
        if embeddings.len() != correctness.len() {
            return Err(Error::Shape(format!(
                "{} embeddings vs {} correctness vectors",
                embeddings.len(),
                correctness.len()
            )));
        }
        if k == 0 || k > embeddings.len() {
            return Err(Error::Config(format!(
                "neighbor count {k} must lie in [1, {}]",
                embeddings.len()
            )));
        }
        Ok(Self {
            embeddings,
            correctness,
            k,
            catalog,
        })
    }

    /// Per-model score: the fraction of the k nearest training embeddings
    /// (Euclidean) for which that model was correct. The neighbor set is
    /// deterministic: ties in distance break toward the lower index.
    pub fn predict(&self, embedding: &[f64]) -> Result<Vec<f64>> {
        if self.embeddings.is_empty() {
            return Err(Error::State("KNN router has no training data".into()));
        }
        let dim = self.embeddings[0].len();
        if embedding.len() != dim {
            return Err(Error::Shape(format!(
                "query has {} dims, training embeddings have {dim}",
                embedding.len()
            )));
        }
        let mut dists: Vec<(f64, usize)> = self
            .embeddings
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let d2: f64 = e
                    .iter()
                    .zip(embedding)
                    .map(|(&a, &b)| (a - b) * (a - b))
                    .sum();
                (d2, i)
            })
            .collect();
        dists.sort_unstable_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .expect("finite distances")
                .then(a.1.cmp(&b.1))
        });

        let n_models = self.catalog.len();
        let mut scores = vec![0.0; n_models];
        for &(_, idx) in dists.iter().take(self.k) {
            for (m, score) in scores.iter_mut().enumerate() {
                *score += self.correctness[idx][m] as f64;
            }
        }
        for score in scores.iter_mut() {
            *score /= self.k as f64;
        }
        Ok(scores)
    }

    pub fn route(&self, embedding: &[f64]) -> Result<RoutingDecision> {
        let scores = self.predict(embedding)?;
        let model_index = argmax_lowest_index(&scores);
        Ok(RoutingDecision {
            model_index,
            model_name: self.catalog.models[model_index].name.clone(),
            scores,
            concepts: None,
            rationale: None,
        })
    }
}

// ---------------------------------------------------------------------------
// Matrix-factorization router
// ---------------------------------------------------------------------------

/// Query projection dotted against learned per-model embeddings.
#[derive(Debug, Clone)]
pub struct FactorizationRouter {
    /// Projects a query embedding to the model-embedding space.
    pub projection: DenseParams,
    /// Row-major `(n_models, embed_dim)`.
    pub model_embeddings: Vec<f64>,
    pub embed_dim: usize,
    pub catalog: ModelCatalog,
}

impl FactorizationRouter {
    pub fn new(
        projection: DenseParams,
        model_embeddings: Vec<f64>,
        embed_dim: usize,
        catalog: ModelCatalog,
    ) -> Result<Self> {
        if projection.out_dim() != embed_dim {
            return Err(Error::Shape(format!(
                "projection outputs {} but model embeddings have width {embed_dim}",
                projection.out_dim()
            )));
        }
        if model_embeddings.len() != embed_dim * catalog.len() {
            return Err(Error::Shape(format!(
                "{} model-embedding scalars, expected {} x {embed_dim}",
                model_embeddings.len(),
                catalog.len()
            )));
        }
        Ok(Self {
            projection,
            model_embeddings,
            embed_dim,
            catalog,
        })
    }

    /// `score_i = sigmoid(projection(embedding) . model_embedding_i)`.
    pub fn predict(&self, embedding: &[f64]) -> Result<Vec<f64>> {
        let projected = self.projection.forward(embedding)?;
        let scores = (0..self.catalog.len())
            .map(|m| {
                let row = m * self.embed_dim;
                let dot: f64 = projected
                    .iter()
                    .zip(&self.model_embeddings[row..row + self.embed_dim])
                    .map(|(&p, &e)| p * e)
                    .sum();
                sigmoid(dot)
            })
            .collect();
        Ok(scores)
    }

    pub fn route(&self, embedding: &[f64]) -> Result<RoutingDecision> {
        let scores = self.predict(embedding)?;
        let model_index = argmax_lowest_index(&scores);
        Ok(RoutingDecision {
            model_index,
            model_name: self.catalog.models[model_index].name.clone(),
            scores,
            concepts: None,
            rationale: None,
        })
    }

    pub fn param_count(&self) -> usize {
        self.projection.param_count() + self.model_embeddings.len()
    }
}

// ---------------------------------------------------------------------------
// Random router
// ---------------------------------------------------------------------------

/// Uniform random choice, deterministic given the router seed and the
/// query embedding (the choice is derived by hashing both).
#[derive(Debug, Clone)]
pub struct RandomRouter {
    pub seed: u64,
    pub catalog: ModelCatalog,
}

impl RandomRouter {
    pub fn new(seed: u64, catalog: ModelCatalog) -> Self {
        Self { seed, catalog }
    }

    fn choose(&self, embedding: &[f64]) -> usize {
        // FNV-1a over the embedding bits, folded with the seed. Stable
        // across platforms and rustc versions, unlike the std hasher.
        let mut hash: u64 = 0xcbf29ce484222325 ^ self.seed;
        for &v in embedding {
            for byte in v.to_le_bytes() {
                hash ^= byte as u64;
                hash = hash.wrapping_mul(0x100000001b3);
            }
        }
        (hash % self.catalog.len() as u64) as usize
    }

    pub fn route(&self, embedding: &[f64]) -> Result<RoutingDecision> {
        let model_index = self.choose(embedding);
        let mut scores = vec![0.0; self.catalog.len()];
        scores[model_index] = 1.0;
        Ok(RoutingDecision {
            model_index,
            model_name: self.catalog.models[model_index].name.clone(),
            scores,
            concepts: None,
            rationale: None,
        })
    }
}

// ---------------------------------------------------------------------------
// Oracle assignment
// ---------------------------------------------------------------------------

/// Hindsight assignment: the cheapest model that answered correctly, or
/// `None` when no model did (scored as incorrect by evaluation).
pub fn oracle_assign(correctness: &[u8], raw_costs: &[f64]) -> Result<Option<usize>> {
    if correctness.len() != raw_costs.len() {
        return Err(Error::Shape(format!(
            "{} correctness bits vs {} costs",
            correctness.len(),
            raw_costs.len()
        )));
    }
    let mut best: Option<usize> = None;
    for (i, (&ok, &cost)) in correctness.iter().zip(raw_costs).enumerate() {
        if ok == 1 {
            match best {
                Some(b) if raw_costs[b] <= cost => {}
                _ => best = Some(i),
            }
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Policy enum
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Bottleneck,
    BlackBox,
    Knn,
    Factorization,
    Random,
    Oracle,
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PolicyKind::Bottleneck => "bottleneck",
            PolicyKind::BlackBox => "blackbox",
            PolicyKind::Knn => "knn",
            PolicyKind::Factorization => "factorization",
            PolicyKind::Random => "random",
            PolicyKind::Oracle => "oracle",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bottleneck" => Ok(PolicyKind::Bottleneck),
            "blackbox" => Ok(PolicyKind::BlackBox),
            "knn" => Ok(PolicyKind::Knn),
            "factorization" => Ok(PolicyKind::Factorization),
            "random" => Ok(PolicyKind::Random),
            "oracle" => Ok(PolicyKind::Oracle),
            other => Err(Error::Config(format!("unknown policy kind '{other}'"))),
        }
    }
}

/// Any loaded routing policy.
#[derive(Debug, Clone)]
pub enum RouterPolicy {
    Bottleneck(BottleneckRouter),
    BlackBox(BlackBoxRouter),
    Knn(KnnRouter),
    Factorization(FactorizationRouter),
    Random(RandomRouter),
    /// The oracle needs per-record labels, so it cannot be routed through
    /// [`RouterPolicy::route`]; see [`oracle_assign`].
    Oracle,
}

impl RouterPolicy {
    pub fn kind(&self) -> PolicyKind {
        match self {
            RouterPolicy::Bottleneck(_) => PolicyKind::Bottleneck,
            RouterPolicy::BlackBox(_) => PolicyKind::BlackBox,
            RouterPolicy::Knn(_) => PolicyKind::Knn,
            RouterPolicy::Factorization(_) => PolicyKind::Factorization,
            RouterPolicy::Random(_) => PolicyKind::Random,
            RouterPolicy::Oracle => PolicyKind::Oracle,
        }
    }

    pub fn catalog(&self) -> Option<&ModelCatalog> {
        match self {
            RouterPolicy::Bottleneck(r) => Some(&r.catalog),
            RouterPolicy::BlackBox(r) => Some(&r.catalog),
            RouterPolicy::Knn(r) => Some(&r.catalog),
            RouterPolicy::Factorization(r) => Some(&r.catalog),
            RouterPolicy::Random(r) => Some(&r.catalog),
            RouterPolicy::Oracle => None,
        }
    }

    pub fn route(&self, embedding: &[f64]) -> Result<RoutingDecision> {
        match self {
            RouterPolicy::Bottleneck(r) => r.route(embedding),
            RouterPolicy::BlackBox(r) => r.route(embedding),
            RouterPolicy::Knn(r) => r.route(embedding),
            RouterPolicy::Factorization(r) => r.route(embedding),
            RouterPolicy::Random(r) => r.route(embedding),
            RouterPolicy::Oracle => Err(Error::Contract(
                "the oracle policy requires correctness labels; use oracle_assign".into(),
            )),
        }
    }

    pub fn route_with_intervention(
        &self,
        embedding: &[f64],
        group: GroupName,
        override_values: &[f64],
    ) -> Result<RoutingDecision> {
        match self {
            RouterPolicy::Bottleneck(r) => {
                r.route_with_intervention(embedding, group, override_values)
            }
            other => Err(Error::Contract(format!(
                "intervention requires a bottleneck policy, got {}",
                other.kind()
            ))),
        }
    }

    /// Exact scalar parameter count, biases included. For KNN this counts
    /// the stored training scalars; random and oracle have none.
    pub fn param_count(&self) -> usize {
        match self {
            RouterPolicy::Bottleneck(r) => r.param_count(),
            RouterPolicy::BlackBox(r) => r.head.param_count(),
            RouterPolicy::Knn(r) => {
                let d = r.embeddings.first().map_or(0, Vec::len);
                r.embeddings.len() * d + r.correctness.len() * r.catalog.len()
            }
            RouterPolicy::Factorization(r) => r.param_count(),
            RouterPolicy::Random(_) | RouterPolicy::Oracle => 0,
        }
    }
}

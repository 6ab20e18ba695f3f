//! Ablation, intervention, and counterfactual concept-flip studies.

use serde::{Deserialize, Serialize};

use super::{decide_all, routing_accuracy};
use crate::dataset::{Dataset, DatasetSplit, GroupKind, GroupName, QueryRecord};
use crate::error::{Error, Result};
use crate::routers::{BottleneckRouter, RouterPolicy};
use crate::training::{train_bottleneck, TrainConfig};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Ablation,
    Intervention,
    Counterfactual,
    AssignmentShare,
}

/// One condition row: the metric samples across seeds plus their summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyCondition {
    pub condition: String,
    pub lambda: f64,
    pub samples: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl StudyCondition {
    pub fn from_samples(condition: impl Into<String>, lambda: f64, samples: Vec<f64>) -> Self {
        let mean = samples.iter().sum::<f64>() / samples.len().max(1) as f64;
        let std = if samples.len() > 1 {
            (samples.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>()
                / (samples.len() - 1) as f64)
                .sqrt()
        } else {
            0.0
        };
        Self {
            condition: condition.into(),
            lambda,
            samples,
            mean,
            std,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub kind: StudyKind,
    /// What the samples measure, e.g. `routing_accuracy`.
    pub metric: String,
    pub conditions: Vec<StudyCondition>,
}

impl StudyReport {
    /// Rows for one condition name, in lambda order.
    pub fn condition(&self, name: &str) -> Vec<&StudyCondition> {
        self.conditions
            .iter()
            .filter(|c| c.condition == name)
            .collect()
    }
}

fn clone_records(data: &Dataset, indices: &[usize]) -> Vec<QueryRecord> {
    indices.iter().map(|&i| data.records[i].clone()).collect()
}

// ---------------------------------------------------------------------------
// Ablation
// ---------------------------------------------------------------------------

/// Retrains the bottleneck router with each listed concept group removed
/// from the schema, at every lambda and seed, and reports test routing
/// accuracy against the full-schema baseline.
pub fn ablation_study(
    data: &Dataset,
    split: &DatasetSplit,
    groups: &[GroupName],
    lambdas: &[f64],
    seeds: &[u64],
    concept_config: &TrainConfig,
    suitability_config: &TrainConfig,
) -> Result<StudyReport> {
    if groups.is_empty() || lambdas.is_empty() || seeds.is_empty() {
        return Err(Error::Config(
            "ablation needs at least one group, lambda, and seed".into(),
        ));
    }
    for &group in groups {
        // Validates the group exists and that removing it leaves a schema.
        data.schema.without_group(group)?;
    }
    let test = clone_records(data, &split.test);
    let mut conditions = Vec::new();

    let accuracy_of = |data: &Dataset, lambda: f64, seed: u64| -> Result<f64> {
        let (router, _, _) = train_bottleneck(
            data,
            split,
            &concept_config.with_seed(seed),
            &suitability_config.with_lambda(lambda).with_seed(seed),
        )?;
        let reduced_test = clone_records(data, &split.test);
        let decisions = decide_all(&RouterPolicy::Bottleneck(router), &reduced_test)?;
        routing_accuracy(&decisions, &test)
    };

    for &lambda in lambdas {
        let baseline: Vec<f64> = seeds
            .iter()
            .map(|&s| accuracy_of(data, lambda, s))
            .collect::<Result<_>>()?;
        conditions.push(StudyCondition::from_samples("baseline", lambda, baseline));
        for &group in groups {
            let reduced = data.without_group(group)?;
            let samples: Vec<f64> = seeds
                .iter()
                .map(|&s| accuracy_of(&reduced, lambda, s))
                .collect::<Result<_>>()?;
            conditions.push(StudyCondition::from_samples(
                format!("without_{group}"),
                lambda,
                samples,
            ));
        }
    }

    Ok(StudyReport {
        kind: StudyKind::Ablation,
        metric: "routing_accuracy".into(),
        conditions,
    })
}

// ---------------------------------------------------------------------------
// Intervention
// ---------------------------------------------------------------------------

/// Replaces the routers' predictions for one concept group with the gold
/// labels at inference (no retraining) and reports accuracy against the
/// unintervened baseline. One router per seed.
pub fn intervention_study(
    routers: &[BottleneckRouter],
    records: &[QueryRecord],
    group: GroupName,
    lambda: f64,
) -> Result<StudyReport> {
    if routers.is_empty() {
        return Err(Error::Config("intervention needs at least one router".into()));
    }
    if records.is_empty() {
        return Err(Error::Contract("no records to evaluate".into()));
    }
    let range = routers[0]
        .schema
        .group_range(group)
        .ok_or_else(|| Error::Schema(format!("unknown concept group '{group}'")))?;

    let mut baseline = Vec::with_capacity(routers.len());
    let mut intervened = Vec::with_capacity(routers.len());
    for router in routers {
        let mut plain = Vec::with_capacity(records.len());
        let mut gold = Vec::with_capacity(records.len());
        for record in records {
            plain.push(router.route(&record.embedding)?.model_index);
            let decision = router.route_with_intervention(
                &record.embedding,
                group,
                &record.concepts[range.clone()],
            )?;
            gold.push(decision.model_index);
        }
        baseline.push(routing_accuracy(&plain, records)?);
        intervened.push(routing_accuracy(&gold, records)?);
    }

    Ok(StudyReport {
        kind: StudyKind::Intervention,
        metric: "routing_accuracy".into(),
        conditions: vec![
            StudyCondition::from_samples("baseline", lambda, baseline),
            StudyCondition::from_samples(format!("gold_{group}"), lambda, intervened),
        ],
    })
}

// ---------------------------------------------------------------------------
// Counterfactual concept flips
// ---------------------------------------------------------------------------

/// Result of one source-to-target language flip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualOutcome {
    pub source: String,
    pub target: String,
    pub n_samples: usize,
    /// Mean change (percentage points) in the aggregated selection
    /// probability of the designated target-language models. Selection
    /// probability normalizes the sigmoid suitability scores to sum to one;
    /// this is the only place scores are turned into a distribution.
    pub probability_delta_pp: f64,
    /// Mean rank improvement of the designated models (positive = better).
    pub rank_delta: f64,
}

impl CounterfactualOutcome {
    pub fn into_report(outcomes: Vec<CounterfactualOutcome>) -> StudyReport {
        let mut conditions = Vec::new();
        for o in outcomes {
            let pair = format!("{}->{}", o.source, o.target);
            conditions.push(StudyCondition::from_samples(
                format!("probability_delta_pp:{pair}"),
                0.0,
                vec![o.probability_delta_pp],
            ));
            conditions.push(StudyCondition::from_samples(
                format!("rank_delta:{pair}"),
                0.0,
                vec![o.rank_delta],
            ));
        }
        StudyReport {
            kind: StudyKind::Counterfactual,
            metric: "selection_shift".into(),
            conditions,
        }
    }
}

/// Selection distribution over models: sigmoid scores scaled to sum to one.
fn normalize_scores(scores: &[f64]) -> Vec<f64> {
    let total: f64 = scores.iter().sum();
    if total <= 0.0 {
        return vec![1.0 / scores.len() as f64; scores.len()];
    }
    scores.iter().map(|&s| s / total).collect()
}

/// 1-based rank of each model by descending score, ties toward lower index.
fn ranks_by_score(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| {
        scores[j]
            .partial_cmp(&scores[i])
            .expect("finite scores")
            .then(i.cmp(&j))
    });
    let mut ranks = vec![0usize; scores.len()];
    for (position, &model) in order.iter().enumerate() {
        ranks[model] = position + 1;
    }
    ranks
}

/// Builds paired synthetic concept vectors differing only in the
/// programming-language bit, feeds both through the suitability head, and
/// measures how the designated target-language models respond.
///
/// Vectors fix every other binary group to its first label (libraries stay
/// all-zero) and draw the complexity values uniformly at random, shared
/// within each pair.
pub fn counterfactual_flip_study(
    router: &BottleneckRouter,
    source: &str,
    target: &str,
    designated: &[usize],
    n_samples: usize,
    seed: u64,
) -> Result<CounterfactualOutcome> {
    if n_samples == 0 {
        return Err(Error::Config("n_samples must be at least 1".into()));
    }
    if designated.is_empty() {
        return Err(Error::Config(
            "counterfactual study needs at least one designated model".into(),
        ));
    }
    for &m in designated {
        if m >= router.catalog.len() {
            return Err(Error::Config(format!(
                "designated model index {m} outside the catalog"
            )));
        }
    }
    let schema = &router.schema;
    let source_idx = schema
        .label_index(GroupName::ProgrammingLanguages, source)
        .ok_or_else(|| Error::Schema(format!("unknown programming language '{source}'")))?;
    let target_idx = schema
        .label_index(GroupName::ProgrammingLanguages, target)
        .ok_or_else(|| Error::Schema(format!("unknown programming language '{target}'")))?;
    let complexity_range = schema
        .group_range(GroupName::Complexity)
        .ok_or_else(|| Error::Schema("schema has no complexity group".into()))?;

    // Template: first label of every binary group, libraries empty,
    // language bits cleared.
    let mut template = vec![0.0; schema.width()];
    for group in &schema.groups {
        if group.kind != GroupKind::Binary
            || group.name == GroupName::ProgrammingLanguages
            || group.name == GroupName::Libraries
        {
            continue;
        }
        let range = schema.group_range(group.name).expect("schema group");
        template[range.start] = 1.0;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prob_delta_sum = 0.0;
    let mut rank_delta_sum = 0.0;

    for _ in 0..n_samples {
        let mut concepts = template.clone();
        for i in complexity_range.clone() {
            concepts[i] = rng.random::<f64>();
        }
        let mut with_source = concepts.clone();
        with_source[source_idx] = 1.0;
        let mut with_target = concepts;
        with_target[target_idx] = 1.0;

        let scores_source = router.suitability_from_concepts(&with_source)?;
        let scores_target = router.suitability_from_concepts(&with_target)?;

        let probs_source = normalize_scores(&scores_source);
        let probs_target = normalize_scores(&scores_target);
        let agg = |probs: &[f64]| designated.iter().map(|&m| probs[m]).sum::<f64>();
        prob_delta_sum += agg(&probs_target) - agg(&probs_source);

        let ranks_source = ranks_by_score(&scores_source);
        let ranks_target = ranks_by_score(&scores_target);
        let mean_rank = |ranks: &[usize]| {
            designated.iter().map(|&m| ranks[m] as f64).sum::<f64>() / designated.len() as f64
        };
        rank_delta_sum += mean_rank(&ranks_source) - mean_rank(&ranks_target);
    }

    Ok(CounterfactualOutcome {
        source: source.into(),
        target: target.into(),
        n_samples,
        probability_delta_pp: 100.0 * prob_delta_sum / n_samples as f64,
        rank_delta: rank_delta_sum / n_samples as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ConceptGroup, ConceptSchema, ModelCatalog, ModelEntry, COMPLEXITY_LABELS};
    use crate::numerics::DenseParams;

    fn study_router() -> BottleneckRouter {
        let schema = ConceptSchema::new(vec![
            ConceptGroup {
                name: GroupName::Tasks,
                labels: vec!["generate".into(), "repair".into()],
                kind: GroupKind::Binary,
            },
            ConceptGroup {
                name: GroupName::Libraries,
                labels: vec!["stdlib".into(), "network".into()],
                kind: GroupKind::Binary,
            },
            ConceptGroup {
                name: GroupName::ProgrammingLanguages,
                labels: vec!["rust".into(), "python".into()],
                kind: GroupKind::Binary,
            },
            ConceptGroup {
                name: GroupName::Complexity,
                labels: COMPLEXITY_LABELS.iter().map(|s| s.to_string()).collect(),
                kind: GroupKind::Continuous,
            },
        ])
        .unwrap();
        let catalog = ModelCatalog::new(
            (0..2)
                .map(|i| ModelEntry {
                    name: format!("m{i}"),
                    input_price: 1.0,
                    output_price: 1.0,
                    avg_output_tokens: 100.0,
                    is_reasoning: i == 0,
                })
                .collect(),
        )
        .unwrap();
        let k = schema.width();
        // Suitability head wired so model 0 likes rust (index 4) and model 1
        // likes python (index 5): direct linear readout through gelu.
        let mut suit = DenseParams::zeros(k, 2, 2);
        suit.w1[4] = 3.0; // hidden 0 <- rust
        suit.w1[k + 5] = 3.0; // hidden 1 <- python
        suit.w2 = vec![4.0, -4.0, -4.0, 4.0];
        BottleneckRouter::new(DenseParams::zeros(3, 2, k), suit, schema, catalog).unwrap()
    }

    #[test]
    fn flip_moves_probability_toward_the_specialist() {
        let router = study_router();
        let outcome =
            counterfactual_flip_study(&router, "rust", "python", &[1], 200, 5).unwrap();
        assert!(
            outcome.probability_delta_pp > 10.0,
            "delta {}",
            outcome.probability_delta_pp
        );
        assert!(outcome.rank_delta >= 1.0, "rank delta {}", outcome.rank_delta);
    }

    #[test]
    fn source_equals_target_gives_exactly_zero() {
        let router = study_router();
        let outcome = counterfactual_flip_study(&router, "rust", "rust", &[0], 50, 9).unwrap();
        assert_eq!(outcome.probability_delta_pp, 0.0);
        assert_eq!(outcome.rank_delta, 0.0);
    }

    #[test]
    fn unknown_language_is_schema_error() {
        let router = study_router();
        assert!(matches!(
            counterfactual_flip_study(&router, "rust", "cobol", &[0], 10, 0),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn ranks_are_one_based_with_index_tie_break() {
        assert_eq!(ranks_by_score(&[0.3, 0.9, 0.3]), vec![2, 1, 3]);
    }

    #[test]
    fn study_condition_summary() {
        let c = StudyCondition::from_samples("x", 0.5, vec![1.0, 2.0, 3.0]);
        assert_eq!(c.mean, 2.0);
        assert!((c.std - 1.0).abs() < 1e-12);
    }
}

//! Measurement machinery: routing accuracy and cost, Pareto frontiers,
//! concept metrics, studies, assignment shares, significance tests,
//! throughput, and tabular report files.

mod report;
mod stats;
mod studies;

pub use report::{
    study_rows, write_curve_csv, write_frontier_csv, write_report_csv, write_share_csv,
    ReportRow, REPORT_COLUMNS,
};
pub use stats::{mann_whitney_u, spearman, t_test_two_tailed, SignificanceResult, TestKind};
pub use studies::{
    ablation_study, counterfactual_flip_study, intervention_study, CounterfactualOutcome,
    StudyCondition, StudyKind, StudyReport,
};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::{cost_vector, GroupKind, GroupName, ConceptSchema, ModelCatalog, QueryRecord};
use crate::error::{Error, Result};
use crate::routers::RouterPolicy;

// ---------------------------------------------------------------------------
// Accuracy and cost
// ---------------------------------------------------------------------------

/// Mean correctness of the chosen model over all records.
pub fn routing_accuracy(decisions: &[usize], records: &[QueryRecord]) -> Result<f64> {
    if decisions.len() != records.len() {
        return Err(Error::Contract(format!(
            "{} decisions for {} records",
            decisions.len(),
            records.len()
        )));
    }
    if records.is_empty() {
        return Err(Error::Contract("no records to score".into()));
    }
    let mut correct = 0usize;
    for (&choice, record) in decisions.iter().zip(records) {
        let bit = record
            .correctness
            .get(choice)
            .ok_or_else(|| Error::Contract(format!("model index {choice} out of range")))?;
        correct += *bit as usize;
    }
    Ok(correct as f64 / records.len() as f64)
}

/// Mean raw (currency) cost of the chosen model. Reporting uses raw costs
/// even though training regularizes normalized ones.
pub fn mean_routed_cost(
    decisions: &[usize],
    records: &[QueryRecord],
    catalog: &ModelCatalog,
) -> Result<f64> {
    if decisions.len() != records.len() {
        return Err(Error::Contract(format!(
            "{} decisions for {} records",
            decisions.len(),
            records.len()
        )));
    }
    if records.is_empty() {
        return Err(Error::Contract("no records to score".into()));
    }
    let mut total = 0.0;
    for (&choice, record) in decisions.iter().zip(records) {
        let costs = cost_vector(record, catalog);
        let cost = costs
            .get(choice)
            .ok_or_else(|| Error::Contract(format!("model index {choice} out of range")))?;
        total += cost;
    }
    Ok(total / records.len() as f64)
}

/// Fraction of queries routed to each model; sums to 1.
pub fn assignment_share(decisions: &[usize], catalog: &ModelCatalog) -> Result<Vec<f64>> {
    if decisions.is_empty() {
        return Err(Error::Contract("no decisions to aggregate".into()));
    }
    let mut counts = vec![0usize; catalog.len()];
    for &choice in decisions {
        *counts
            .get_mut(choice)
            .ok_or_else(|| Error::Contract(format!("model index {choice} out of range")))? += 1;
    }
    Ok(counts
        .iter()
        .map(|&c| c as f64 / decisions.len() as f64)
        .collect())
}

/// Routes every record through a policy and returns the chosen indices.
pub fn decide_all(policy: &RouterPolicy, records: &[QueryRecord]) -> Result<Vec<usize>> {
    records
        .iter()
        .map(|r| Ok(policy.route(&r.embedding)?.model_index))
        .collect()
}

// ---------------------------------------------------------------------------
// Pareto frontier
// ---------------------------------------------------------------------------

/// One aggregated operating point of a cost-regularized router.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub lambda: f64,
    pub acc_mean: f64,
    pub acc_std: f64,
    pub cost_mean: f64,
    pub cost_std: f64,
    pub seed_count: usize,
}

fn dominates(a: &FrontierPoint, b: &FrontierPoint) -> bool {
    let no_worse = a.cost_mean <= b.cost_mean && a.acc_mean >= b.acc_mean;
    let strictly_better = a.cost_mean < b.cost_mean || a.acc_mean > b.acc_mean;
    no_worse && strictly_better
}

/// Non-dominated subset, sorted by cost ascending.
pub fn pareto_frontier(points: &[FrontierPoint]) -> Vec<FrontierPoint> {
    let mut frontier: Vec<FrontierPoint> = points
        .iter()
        .filter(|p| !points.iter().any(|q| dominates(q, p)))
        .cloned()
        .collect();
    frontier.sort_by(|a, b| {
        a.cost_mean
            .partial_cmp(&b.cost_mean)
            .expect("finite costs")
            .then(a.acc_mean.partial_cmp(&b.acc_mean).expect("finite accs"))
    });
    frontier
}

// ---------------------------------------------------------------------------
// Concept metrics
// ---------------------------------------------------------------------------

/// Micro-averaged metrics for one concept group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub group: GroupName,
    pub kind: GroupKind,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub mse: Option<f64>,
    pub mae: Option<f64>,
    /// Set when precision or recall had an empty denominator and was
    /// defined as 0.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptMetricsReport {
    pub groups: Vec<GroupMetrics>,
}

/// Binary groups are thresholded at 0.5 and micro-averaged; the complexity
/// group is scored with MSE and MAE on the raw values.
pub fn concept_metrics(
    predictions: &[Vec<f64>],
    gold: &[Vec<f64>],
    schema: &ConceptSchema,
) -> Result<ConceptMetricsReport> {
    if predictions.len() != gold.len() {
        return Err(Error::Shape(format!(
            "{} prediction rows vs {} gold rows",
            predictions.len(),
            gold.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Contract("no rows to score".into()));
    }
    let width = schema.width();
    for row in predictions.iter().chain(gold) {
        if row.len() != width {
            return Err(Error::Shape(format!(
                "row width {} does not match schema width {width}",
                row.len()
            )));
        }
    }

    let mut groups = Vec::new();
    for group in &schema.groups {
        let range = schema.group_range(group.name).expect("schema group");
        match group.kind {
            GroupKind::Binary => {
                let (mut tp, mut tn, mut fp, mut fne) = (0usize, 0usize, 0usize, 0usize);
                for (p_row, g_row) in predictions.iter().zip(gold) {
                    for i in range.clone() {
                        let p = p_row[i] > 0.5;
                        let t = g_row[i] > 0.5;
                        match (p, t) {
                            (true, true) => tp += 1,
                            (false, false) => tn += 1,
                            (true, false) => fp += 1,
                            (false, true) => fne += 1,
                        }
                    }
                }
                let total = (tp + tn + fp + fne) as f64;
                let mut degenerate = false;
                let precision = if tp + fp == 0 {
                    degenerate = true;
                    0.0
                } else {
                    tp as f64 / (tp + fp) as f64
                };
                let recall = if tp + fne == 0 {
                    degenerate = true;
                    0.0
                } else {
                    tp as f64 / (tp + fne) as f64
                };
                let f1 = if precision + recall == 0.0 {
                    0.0
                } else {
                    2.0 * precision * recall / (precision + recall)
                };
                groups.push(GroupMetrics {
                    group: group.name,
                    kind: group.kind,
                    accuracy: Some((tp + tn) as f64 / total),
                    precision: Some(precision),
                    recall: Some(recall),
                    f1: Some(f1),
                    mse: None,
                    mae: None,
                    degenerate,
                });
            }
            GroupKind::Continuous => {
                let mut se = 0.0;
                let mut ae = 0.0;
                let mut count = 0usize;
                for (p_row, g_row) in predictions.iter().zip(gold) {
                    for i in range.clone() {
                        let d = p_row[i] - g_row[i];
                        se += d * d;
                        ae += d.abs();
                        count += 1;
                    }
                }
                groups.push(GroupMetrics {
                    group: group.name,
                    kind: group.kind,
                    accuracy: None,
                    precision: None,
                    recall: None,
                    f1: None,
                    mse: Some(se / count as f64),
                    mae: Some(ae / count as f64),
                    degenerate: false,
                });
            }
        }
    }
    Ok(ConceptMetricsReport { groups })
}

// ---------------------------------------------------------------------------
// Throughput
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub queries: usize,
    pub repetitions: usize,
    pub mean_seconds: f64,
    pub best_seconds: f64,
    pub mean_qps: f64,
    pub best_qps: f64,
}

/// Times batched inference over the full record list, `repetitions` times,
/// single-threaded. Reports mean and best wall time.
pub fn throughput_benchmark(
    policy: &RouterPolicy,
    records: &[QueryRecord],
    repetitions: usize,
) -> Result<ThroughputReport> {
    if repetitions == 0 {
        return Err(Error::Config("repetitions must be at least 1".into()));
    }
    if records.is_empty() {
        return Err(Error::Contract("no records to benchmark".into()));
    }
    let mut times = Vec::with_capacity(repetitions);
    let mut sink = 0usize;
    for _ in 0..repetitions {
        let start = Instant::now();
        for record in records {
            sink ^= policy.route(&record.embedding)?.model_index;
        }
        times.push(start.elapsed().as_secs_f64());
    }
    std::hint::black_box(sink);
    let mean_seconds = times.iter().sum::<f64>() / repetitions as f64;
    let best_seconds = times.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(ThroughputReport {
        queries: records.len(),
        repetitions,
        mean_seconds,
        best_seconds,
        mean_qps: records.len() as f64 / mean_seconds,
        best_qps: records.len() as f64 / best_seconds,
    })
}

// ---------------------------------------------------------------------------
// Aggregate report container
// ---------------------------------------------------------------------------

/// Everything an evaluation run can produce, in one serializable container.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub points: Vec<FrontierPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concept_metrics: Option<ConceptMetricsReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub studies: Vec<StudyReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub significance: Vec<SignificanceResult>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ConceptGroup, ModelEntry, COMPLEXITY_LABELS};
    use crate::routers::{oracle_assign, RandomRouter};

    fn catalog() -> ModelCatalog {
        ModelCatalog::new(vec![
            ModelEntry {
                name: "pricey".into(),
                input_price: 10.0,
                output_price: 20.0,
                avg_output_tokens: 100.0,
                is_reasoning: true,
            },
            ModelEntry {
                name: "cheap".into(),
                input_price: 0.1,
                output_price: 0.2,
                avg_output_tokens: 100.0,
                is_reasoning: false,
            },
        ])
        .unwrap()
    }

    fn records() -> Vec<QueryRecord> {
        vec![
            QueryRecord {
                id: "a".into(),
                embedding: vec![0.0; 2],
                concepts: vec![1.0, 0.0, 0.5, 0.5, 0.5],
                correctness: vec![1, 0],
                input_tokens: 100,
                task: None,
            },
            QueryRecord {
                id: "b".into(),
                embedding: vec![1.0; 2],
                concepts: vec![0.0, 1.0, 0.0, 0.0, 0.0],
                correctness: vec![1, 1],
                input_tokens: 100,
                task: None,
            },
        ]
    }

    #[test]
    fn accuracy_counts_chosen_correctness() {
        let records = records();
        assert_eq!(routing_accuracy(&[0, 0], &records).unwrap(), 1.0);
        assert_eq!(routing_accuracy(&[1, 0], &records).unwrap(), 0.5);
        assert_eq!(routing_accuracy(&[1, 1], &records).unwrap(), 0.5);
    }

    #[test]
    fn accuracy_out_of_range_is_contract_error() {
        assert!(matches!(
            routing_accuracy(&[5, 0], &records()),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn oracle_decisions_reach_upper_bound_on_covered_records() {
        let records = records();
        let catalog = catalog();
        let decisions: Vec<usize> = records
            .iter()
            .map(|r| {
                oracle_assign(&r.correctness, &cost_vector(r, &catalog))
                    .unwrap()
                    .expect("every record has a correct model")
            })
            .collect();
        assert_eq!(routing_accuracy(&decisions, &records).unwrap(), 1.0);
    }

    #[test]
    fn mean_cost_of_fixed_choosers() {
        let records = records();
        let catalog = catalog();
        let cheap = mean_routed_cost(&[1, 1], &records, &catalog).unwrap();
        let pricey = mean_routed_cost(&[0, 0], &records, &catalog).unwrap();
        assert!(cheap < pricey);
        let expected_cheap = (100.0 * 0.1 / 1e6 + 100.0 * 0.2 / 1e6 + 100.0 * 0.1 / 1e6
            + 100.0 * 0.2 / 1e6)
            / 2.0;
        assert!((cheap - expected_cheap).abs() < 1e-12);
    }

    #[test]
    fn shares_sum_to_one() {
        let catalog = catalog();
        let shares = assignment_share(&[0, 1, 1, 1], &catalog).unwrap();
        assert_eq!(shares, vec![0.25, 0.75]);
        assert!(matches!(
            assignment_share(&[], &catalog),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn pareto_keeps_only_undominated_points() {
        let point = |lambda: f64, cost: f64, acc: f64| FrontierPoint {
            lambda,
            acc_mean: acc,
            acc_std: 0.0,
            cost_mean: cost,
            cost_std: 0.0,
            seed_count: 1,
        };
        let single = pareto_frontier(&[point(0.0, 1.0, 0.9)]);
        assert_eq!(single.len(), 1);

        let two = pareto_frontier(&[point(0.0, 1.0, 0.9), point(1.0, 2.0, 0.8)]);
        assert_eq!(two.len(), 1);
        assert_eq!(two[0].cost_mean, 1.0);

        let three = pareto_frontier(&[
            point(0.0, 1.0, 0.8),
            point(1.0, 2.0, 0.9),
            point(2.0, 3.0, 0.85),
        ]);
        assert_eq!(three.len(), 2);
        assert_eq!(three[0].cost_mean, 1.0);
        assert_eq!(three[1].cost_mean, 2.0);
    }

    #[test]
    fn pareto_matches_quadratic_brute_force() {
        // O(n^2) brute force over a fixed point cloud.
        let mut points = Vec::new();
        let mut state = 123456789u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as f64 / (1u64 << 31) as f64
        };
        for i in 0..40 {
            points.push(FrontierPoint {
                lambda: i as f64,
                acc_mean: next(),
                acc_std: 0.0,
                cost_mean: next(),
                cost_std: 0.0,
                seed_count: 1,
            });
        }
        let frontier = pareto_frontier(&points);
        for p in &points {
            let dominated = points.iter().any(|q| dominates(q, p));
            let included = frontier.iter().any(|f| f.lambda == p.lambda);
            assert_eq!(!dominated, included, "lambda {}", p.lambda);
        }
    }

    #[test]
    fn concept_metrics_perfect_predictions() {
        let schema = ConceptSchema::new(vec![
            ConceptGroup {
                name: GroupName::Tasks,
                labels: vec!["a".into(), "b".into()],
                kind: GroupKind::Binary,
            },
            ConceptGroup {
                name: GroupName::Complexity,
                labels: COMPLEXITY_LABELS.iter().map(|s| s.to_string()).collect(),
                kind: GroupKind::Continuous,
            },
        ])
        .unwrap();
        let gold = vec![vec![1.0, 0.0, 0.2, 0.4, 0.3], vec![0.0, 1.0, 0.0, 1.0, 0.5]];
        let report = concept_metrics(&gold, &gold, &schema).unwrap();
        let tasks = &report.groups[0];
        assert_eq!(tasks.accuracy, Some(1.0));
        assert_eq!(tasks.f1, Some(1.0));
        let complexity = &report.groups[1];
        assert_eq!(complexity.mse, Some(0.0));
        assert_eq!(complexity.mae, Some(0.0));
    }

    #[test]
    fn concept_metrics_all_negative_predictions_have_zero_recall() {
        let schema = ConceptSchema::new(vec![ConceptGroup {
            name: GroupName::Tasks,
            labels: vec!["a".into()],
            kind: GroupKind::Binary,
        }])
        .unwrap();
        let gold = vec![vec![1.0], vec![1.0]];
        let pred = vec![vec![0.0], vec![0.0]];
        let report = concept_metrics(&pred, &gold, &schema).unwrap();
        assert_eq!(report.groups[0].recall, Some(0.0));
        assert!(report.groups[0].degenerate); // no predicted positives either
    }

    #[test]
    fn concept_metrics_constant_offset_complexity() {
        let schema = ConceptSchema::new(vec![ConceptGroup {
            name: GroupName::Complexity,
            labels: COMPLEXITY_LABELS.iter().map(|s| s.to_string()).collect(),
            kind: GroupKind::Continuous,
        }])
        .unwrap();
        let gold = vec![vec![0.2, 0.4, 0.6]];
        let pred = vec![vec![0.3, 0.5, 0.7]];
        let report = concept_metrics(&pred, &gold, &schema).unwrap();
        assert!((report.groups[0].mae.unwrap() - 0.1).abs() < 1e-12);
        assert!((report.groups[0].mse.unwrap() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn throughput_rejects_zero_repetitions() {
        let catalog = catalog();
        let policy = RouterPolicy::Random(RandomRouter::new(0, catalog));
        assert!(matches!(
            throughput_benchmark(&policy, &records(), 0),
            Err(Error::Config(_))
        ));
        let report = throughput_benchmark(&policy, &records(), 3).unwrap();
        assert_eq!(report.repetitions, 3);
        assert!(report.mean_qps > 0.0);
    }
}

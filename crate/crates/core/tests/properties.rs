//! Property tests for cross-cutting invariants.

use proptest::prelude::*;

use crouter_core::dataset::{normalize_costs, split_dataset};
use crouter_core::evaluation::{mann_whitney_u, pareto_frontier, t_test_two_tailed, FrontierPoint};
use crouter_core::numerics::{bce_loss, softmax, DenseParams, PROB_CLAMP};
use crouter_core::routers::{oracle_assign, KnnRouter};
use crouter_core::training::cost_term;

use crouter_core::dataset::{ModelCatalog, ModelEntry};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn catalog(n: usize) -> ModelCatalog {
    ModelCatalog::new(
        (0..n)
            .map(|i| ModelEntry {
                name: format!("m{i}"),
                input_price: 1.0,
                output_price: 1.0,
                avg_output_tokens: 100.0,
                is_reasoning: i == 0,
            })
            .collect(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn normalize_costs_preserves_all_pairwise_order(raw in prop::collection::vec(0.01f64..100.0, 1..12)) {
        let normalized = normalize_costs(&raw).unwrap();
        let max = normalized.iter().cloned().fold(f64::MIN, f64::max);
        prop_assert_eq!(max, 1.0);
        for i in 0..raw.len() {
            for j in 0..raw.len() {
                prop_assert_eq!(
                    raw[i].partial_cmp(&raw[j]).unwrap(),
                    normalized[i].partial_cmp(&normalized[j]).unwrap()
                );
            }
        }
    }

    #[test]
    fn oracle_assignment_is_scale_invariant(
        correctness in prop::collection::vec(0u8..=1, 1..10),
        scale in 0.001f64..1000.0,
    ) {
        let costs: Vec<f64> = (0..correctness.len()).map(|i| 0.5 + i as f64 * 0.3).collect();
        let scaled: Vec<f64> = costs.iter().map(|c| c * scale).collect();
        prop_assert_eq!(
            oracle_assign(&correctness, &costs).unwrap(),
            oracle_assign(&correctness, &scaled).unwrap()
        );
    }

    #[test]
    fn bce_is_non_negative_and_zero_only_at_target(
        pred in prop::collection::vec(0.0f64..=1.0, 1..8),
    ) {
        let clamped: Vec<f64> = pred
            .iter()
            .map(|&p| p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP))
            .collect();
        let loss = bce_loss(&clamped, &clamped).unwrap();
        prop_assert!(loss >= 0.0);
        // Self-targeting is the entropy of the prediction: zero only when
        // every clamped probability sits at a clamp boundary.
        let at_corner = clamped
            .iter()
            .all(|&p| p == PROB_CLAMP || p == 1.0 - PROB_CLAMP);
        if !at_corner {
            prop_assert!(loss > 0.0);
        }
        // Against a hard target the loss is zero only for a perfect
        // (clamped) prediction.
        let hard: Vec<f64> = clamped.iter().map(|&p| f64::from(p > 0.5)).collect();
        let hard_loss = bce_loss(&hard, &hard).unwrap();
        prop_assert!(hard_loss < 1e-6);
    }

    #[test]
    fn splits_are_disjoint_and_proportional(n in 10usize..3000, seed in any::<u64>()) {
        let split = split_dataset(n, seed).unwrap();
        let mut all: Vec<usize> = split
            .train
            .iter()
            .chain(&split.validation)
            .chain(&split.test)
            .copied()
            .collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        let tenth = n as f64 / 10.0;
        prop_assert!((split.validation.len() as f64 - tenth).abs() <= 1.0);
        prop_assert!((split.test.len() as f64 - tenth).abs() <= 1.0);
        prop_assert!((split.train.len() as f64 - 8.0 * tenth).abs() <= 2.0);
        // Determinism.
        prop_assert_eq!(split, split_dataset(n, seed).unwrap());
    }

    #[test]
    fn pareto_frontier_matches_brute_force(
        coords in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..24),
    ) {
        let points: Vec<FrontierPoint> = coords
            .iter()
            .enumerate()
            .map(|(i, &(cost, acc))| FrontierPoint {
                lambda: i as f64,
                acc_mean: acc,
                acc_std: 0.0,
                cost_mean: cost,
                cost_std: 0.0,
                seed_count: 1,
            })
            .collect();
        let frontier = pareto_frontier(&points);
        for p in &points {
            let dominated = points.iter().any(|q| {
                q.cost_mean <= p.cost_mean
                    && q.acc_mean >= p.acc_mean
                    && (q.cost_mean < p.cost_mean || q.acc_mean > p.acc_mean)
            });
            let included = frontier.iter().any(|f| f.lambda == p.lambda);
            prop_assert_eq!(included, !dominated);
        }
        for window in frontier.windows(2) {
            prop_assert!(window[0].cost_mean <= window[1].cost_mean);
        }
    }

    #[test]
    fn cost_term_is_a_convex_combination(
        logits in prop::collection::vec(-10.0f64..10.0, 1..8),
    ) {
        let costs: Vec<f64> = (0..logits.len()).map(|i| 0.1 + 0.9 * i as f64 / logits.len() as f64).collect();
        let value = cost_term(&logits, &costs);
        let min = costs.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = costs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(value >= min - 1e-12 && value <= max + 1e-12);
        let probs = softmax(&logits);
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn significance_tests_are_symmetric_under_sample_exchange(
        a in prop::collection::vec(-50.0f64..50.0, 2..8),
        b in prop::collection::vec(-50.0f64..50.0, 2..8),
    ) {
        if let (Ok(ab), Ok(ba)) = (t_test_two_tailed(&a, &b), t_test_two_tailed(&b, &a)) {
            prop_assert!((ab.statistic + ba.statistic).abs() < 1e-9);
            prop_assert!((ab.p_value - ba.p_value).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&ab.p_value));
        }
        let mab = mann_whitney_u(&a, &b).unwrap();
        let mba = mann_whitney_u(&b, &a).unwrap();
        // U1 + U2 = n1 * n2.
        prop_assert!((mab.statistic + mba.statistic - (a.len() * b.len()) as f64).abs() < 1e-9);
        prop_assert!((mab.p_value - mba.p_value).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&mab.p_value));
    }

    #[test]
    fn knn_duplicated_training_set_and_doubled_k_agree(
        seed in any::<u64>(),
        k in 1usize..5,
    ) {
        // Random continuous embeddings: distance ties have measure zero.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        use rand::Rng;
        let n = 8usize;
        let embeddings: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let labels: Vec<Vec<u8>> = (0..n)
            .map(|_| (0..2).map(|_| rng.random_range(0..=1)).collect())
            .collect();
        let single = KnnRouter::fit(embeddings.clone(), labels.clone(), k, catalog(2)).unwrap();
        let mut doubled_e = embeddings.clone();
        doubled_e.extend(embeddings);
        let mut doubled_l = labels.clone();
        doubled_l.extend(labels);
        let doubled = KnnRouter::fit(doubled_e, doubled_l, 2 * k, catalog(2)).unwrap();
        let query: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = single.predict(&query).unwrap();
        let b = doubled.predict(&query).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_trace_replay_is_exact(
        seed in any::<u64>(),
        dropout in 0.0f64..0.9,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        use rand::Rng;
        let params = DenseParams::random(5, 7, 3, &mut rng);
        let input: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
        let trace = params.forward_traced(&input, dropout, true, &mut rng).unwrap();
        prop_assert_eq!(trace.replay(&params).unwrap(), trace.output);
    }
}

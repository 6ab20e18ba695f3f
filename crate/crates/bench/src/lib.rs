//! Shared fixtures for the criterion benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crouter_core::dataset::GeneratorSpec;
use crouter_core::numerics::DenseParams;
use crouter_core::routers::{BottleneckRouter, KnnRouter};

/// Random embeddings of the given shape, deterministic per seed.
pub fn random_embeddings(count: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

/// Desk-scale bottleneck router (64 -> 256 -> 24, 24 -> 176 -> 6) with
/// random parameters; inference cost matches a trained router exactly.
pub fn desk_router() -> BottleneckRouter {
    let spec = GeneratorSpec::standard(1);
    let schema = spec.schema().expect("bundled schema");
    let catalog = spec.catalog().expect("bundled catalog");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let k = schema.width();
    BottleneckRouter::new(
        DenseParams::random(spec.embedding_dim, 256, k, &mut rng),
        DenseParams::random(k, 176, catalog.len(), &mut rng),
        schema,
        catalog,
    )
    .expect("shapes line up")
}

/// Production-scale concept head (1408 -> 256 -> 226) for raw forward cost.
pub fn production_scale_head() -> DenseParams {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    DenseParams::random(1408, 256, 226, &mut rng)
}

/// KNN router over `n` stored training points.
pub fn knn_router(n: usize, dim: usize, k: usize) -> KnnRouter {
    let spec = GeneratorSpec::standard(1);
    let catalog = spec.catalog().expect("bundled catalog");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let embeddings = random_embeddings(n, dim, 4);
    let correctness = (0..n)
        .map(|_| (0..catalog.len()).map(|_| rng.random_range(0..=1)).collect())
        .collect();
    KnnRouter::fit(embeddings, correctness, k, catalog).expect("valid knn fixture")
}

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};

use crouter_bench::{desk_router, knn_router, production_scale_head, random_embeddings};

fn forward_pass(c: &mut Criterion) {
    let head = production_scale_head();
    let query = &random_embeddings(1, 1408, 5)[0];
    c.bench_function("mlp_forward/1408x256x226", |b| {
        b.iter(|| head.forward(black_box(query)).unwrap())
    });
}

fn single_route(c: &mut Criterion) {
    let router = desk_router();
    let query = &random_embeddings(1, 64, 6)[0];
    c.bench_function("bottleneck_route/single", |b| {
        b.iter(|| router.route(black_box(query)).unwrap())
    });
}

fn knn_predict(c: &mut Criterion) {
    let router = knn_router(1000, 64, 20);
    let query = &random_embeddings(1, 64, 7)[0];
    c.bench_function("knn_predict/1000x64_k20", |b| {
        b.iter(|| router.predict(black_box(query)).unwrap())
    });
}

fn batch_route(c: &mut Criterion) {
    let router = desk_router();
    let queries = random_embeddings(3869, 64, 8);
    let mut group = c.benchmark_group("bottleneck_route/test_set");
    group.throughput(Throughput::Elements(queries.len() as u64));
    group.sample_size(10);
    group.bench_function("3869_queries", |b| {
        b.iter(|| {
            let mut sink = 0usize;
            for q in &queries {
                sink ^= router.route(q).unwrap().model_index;
            }
            sink
        })
    });
    group.finish();
}

criterion_group!(benches, forward_pass, single_route, knn_predict, batch_route);
criterion_main!(benches);

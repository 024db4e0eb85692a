use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dgs_core::dist::Dist;
use dgs_core::explore::{approx_bellman_ford, bfs_forest, ExploreConfig};
use dgs_core::spanner::{build_spanner, spanner_schedule};
use dgs_core::stream::{generate_stream, SpaceLedger};

fn bench_bfs_forest(c: &mut Criterion) {
    let mut group = c.benchmark_group("bfs_forest");
    group.sample_size(10);
    for n in [100u32, 200] {
        let stream = generate_stream(n, 3 * n as usize, 1.0, false, Dist::ONE, 1).unwrap();
        group.bench_with_input(BenchmarkId::new("eta4", n), &stream, |b, s| {
            b.iter(|| {
                let mut ledger = SpaceLedger::new();
                bfs_forest(s, &[1], 4, &ExploreConfig::default(), &mut ledger, 7).unwrap()
            })
        });
    }
    group.finish();
}

fn bench_bellman_ford(c: &mut Criterion) {
    let mut group = c.benchmark_group("approx_bellman_ford");
    group.sample_size(10);
    let stream = generate_stream(100, 300, 1.0, true, Dist::from_int(32), 2).unwrap();
    group.bench_function("n100_eta6", |b| {
        b.iter(|| {
            let mut ledger = SpaceLedger::new();
            approx_bellman_ford(
                &stream,
                &[1],
                6,
                0.25,
                Dist::from_int(99 * 32),
                None,
                &ExploreConfig::default(),
                &mut ledger,
                7,
            )
            .unwrap()
        })
    });
    group.finish();
}

fn bench_spanner(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_spanner");
    group.sample_size(10);
    let stream = generate_stream(200, 500, 0.5, false, Dist::ONE, 3).unwrap();
    let mut params = spanner_schedule(200, 0.5, 4.0, 0.5).unwrap();
    params.cp1 = 0.5;
    params.c4 = 0.125;
    group.bench_function("n200", |b| {
        b.iter(|| {
            let mut ledger = SpaceLedger::new();
            build_spanner(&stream, &params, &mut ledger, 11).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_bfs_forest, bench_bellman_ford, bench_spanner);
criterion_main!(benches);

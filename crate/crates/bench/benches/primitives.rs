use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use dgs_core::dist::Dist;
use dgs_core::encoding::{CisCodebook, L0Sampler, OneSparseSketch};
use dgs_core::hashing::PairwiseHash;
use dgs_core::rng::SplitMix64;
use dgs_core::samplers::{CisBank, DistBank, XorBank};

fn bench_hash_eval(c: &mut Criterion) {
    let mut group = c.benchmark_group("pairwise_hash_eval");
    for n in [1u64 << 10, 1 << 16] {
        let h = PairwiseHash::sample(n, 7);
        group.throughput(Throughput::Elements(1024));
        group.bench_with_input(BenchmarkId::from_parameter(n), &h, |b, h| {
            b.iter(|| {
                let mut acc = 0u64;
                for x in 1..=1024u64 {
                    acc ^= h.eval_u64(black_box(x));
                }
                acc
            })
        });
    }
    group.finish();
}

fn bench_codebook_build(c: &mut Criterion) {
    let mut group = c.benchmark_group("cis_codebook_build");
    group.sample_size(10);
    for n in [256usize, 1024, 4096] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| CisCodebook::build(black_box(n)))
        });
    }
    group.finish();
}

fn bench_one_sparse(c: &mut Criterion) {
    let cb = CisCodebook::build(1024);
    let updates: Vec<(u32, i64)> = {
        let mut rng = SplitMix64::new(3);
        (0..1024).map(|_| (1 + rng.range_u64(0..1024) as u32, 1)).collect()
    };
    let mut group = c.benchmark_group("one_sparse_sketch");
    group.throughput(Throughput::Elements(updates.len() as u64));
    group.bench_function("update_1024", |b| {
        b.iter(|| {
            let mut sk = OneSparseSketch::new();
            for &(i, d) in &updates {
                sk.update(&cb, black_box(i), d);
            }
            sk
        })
    });
    group.finish();
}

fn bench_l0_sampler(c: &mut Criterion) {
    let cb = CisCodebook::build(1024);
    let support: Vec<(u32, i64)> = (0..16).map(|k| (37 * k + 11, k as i64 + 1)).collect();
    let mut group = c.benchmark_group("l0_sampler");
    group.bench_function("feed16_query_n1024", |b| {
        let mut seed = 0;
        b.iter(|| {
            seed += 1;
            let mut s = L0Sampler::new(1024, 0.05, seed);
            for &(i, d) in &support {
                s.update(&cb, i, d);
            }
            s.query(&cb).unwrap()
        })
    });
    group.finish();
}

fn bench_slot_ladders(c: &mut Criterion) {
    let h = PairwiseHash::sample(1 << 10, 11);
    let cb = CisCodebook::build(1024);
    let items: Vec<u32> = {
        let mut rng = SplitMix64::new(5);
        (0..1024).map(|_| 1 + rng.range_u64(0..1024) as u32).collect()
    };
    let mut group = c.benchmark_group("slot_ladders");
    group.throughput(Throughput::Elements(items.len() as u64));
    group.bench_function("xor_bank", |b| {
        b.iter(|| {
            let mut bank = XorBank::new(h.lambda());
            for &y in &items {
                bank.update(h.eval(y), 1, y as u64);
            }
            bank
        })
    });
    group.bench_function("dist_bank", |b| {
        b.iter(|| {
            let mut bank = DistBank::new(h.lambda());
            for &y in &items {
                bank.update(h.eval(y), 1, Dist::from_int(y as i64), y as u64);
            }
            bank
        })
    });
    group.bench_function("cis_bank", |b| {
        b.iter(|| {
            let mut bank = CisBank::new(h.lambda());
            for &y in &items {
                bank.update(h.eval(y), 1, cb.code(y));
            }
            bank
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_hash_eval,
    bench_codebook_build,
    bench_one_sparse,
    bench_l0_sampler,
    bench_slot_ladders,
);
criterion_main!(benches);

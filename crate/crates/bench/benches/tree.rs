use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng;
use spinloc::rng::rng_from_seed;
use spinloc_bench::tree_fixture;

fn tree_ops(c: &mut Criterion) {
    let mut group = c.benchmark_group("tree");
    for exp in [10u32, 13, 16] {
        let len = 1usize << exp;
        let mut tree = tree_fixture(len);
        let mut rng = rng_from_seed(1);
        group.bench_with_input(BenchmarkId::new("update", len), &len, |b, &len| {
            b.iter(|| {
                let k = rng.random_range(0..len);
                tree.update(k, rng.random_range(0.5..2.0)).unwrap();
            })
        });
        group.bench_with_input(BenchmarkId::new("sample", len), &len, |b, _| {
            b.iter(|| tree.sample(&mut rng).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("delete_insert", len), &len, |b, &len| {
            b.iter(|| {
                let k = rng.random_range(0..len);
                let w = tree.weight(k).unwrap();
                tree.delete(k).unwrap();
                tree.insert(k, w).unwrap();
            })
        });
    }
    group.finish();
}

criterion_group!(benches, tree_ops);
criterion_main!(benches);

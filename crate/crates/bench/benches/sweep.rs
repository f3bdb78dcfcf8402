use criterion::{criterion_group, criterion_main, Criterion};
use hyptor_core::classify::{enumerate, SearchSpace};
use hyptor_core::d4_family::CaseTag;

fn small_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    let space = SearchSpace::new(CaseTag::Case1).with_denominators(2, 4);
    group.bench_function("case 1, bounds 2/4, one worker", |b| b.iter(|| enumerate(&space, 1).unwrap()));
    group.finish();
}

criterion_group!(benches, small_sweep);
criterion_main!(benches);

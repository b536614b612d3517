use criterion::{black_box, criterion_group, criterion_main, Criterion};
use polmine_bench::{block_matrix, problem, rbac, starbac_log};
use polmine_core::expectation::{FactorDistribution, LossCache, Pin};
use polmine_core::io::{Language, RunConfig};
use polmine_core::logic::FactId;
use polmine_core::miner::MinerRun;
use polmine_core::oracle::exact_min_loss;

fn expectation(c: &mut Criterion) {
    let data = block_matrix(40, 24);
    let p = problem(&rbac(4), &data);
    let compiled = p.compile().unwrap();
    let q = FactorDistribution::uniform(&p.base().facts);
    c.bench_function("expected loss, rbac 40x24", |b| {
        b.iter(|| black_box(compiled.expectation(&q, None)))
    });
    let pin = Pin { fact: FactId(0), value: 1 };
    c.bench_function("expected loss with a pin, rbac 40x24", |b| {
        b.iter(|| black_box(compiled.expectation(&q, Some(pin))))
    });
    let mut cache = LossCache::new(compiled.clone(), q.clone()).unwrap();
    c.bench_function("incremental pinned delta, rbac 40x24", |b| {
        b.iter(|| black_box(cache.pinned_delta(FactId(0), 1).unwrap()))
    });
}

fn sweep(c: &mut Criterion) {
    let data = block_matrix(40, 24);
    let p = problem(&rbac(4), &data);
    let compiled = p.compile().unwrap();
    let config = rbac(4);
    c.bench_function("annealing sweep, rbac 40x24", |b| {
        b.iter_batched(
            || MinerRun::new(compiled.clone(), &p.base().facts, config.schedule, 1).unwrap(),
            |mut run| {
                run.step().unwrap();
                run
            },
            criterion::BatchSize::LargeInput,
        )
    });

    let data = starbac_log(200);
    let mut config = RunConfig::new(Language::Starbac);
    config.starbac.roles = 1;
    let p = problem(&config, &data);
    let compiled = p.compile().unwrap();
    c.bench_function("annealing sweep, starbac 200 requests", |b| {
        b.iter_batched(
            || MinerRun::new(compiled.clone(), &p.base().facts, config.schedule, 1).unwrap(),
            |mut run| {
                run.step().unwrap();
                run
            },
            criterion::BatchSize::LargeInput,
        )
    });
}

fn oracle(c: &mut Criterion) {
    let data = block_matrix(4, 3);
    let p = problem(&rbac(1), &data);
    let t = p.base();
    c.bench_function("exhaustive minimum, 7 facts", |b| {
        b.iter(|| black_box(exact_min_loss(&t.structure, &t.facts, &p.loss).unwrap()))
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = expectation, sweep, oracle
}
criterion_main!(benches);

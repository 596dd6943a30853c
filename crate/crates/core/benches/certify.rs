use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use floorcheck::certifier::certify_statement;
use floorcheck::cli::run_reports;
use floorcheck::config::RunConfig;
use floorcheck::corpus::builtin_corpus;
use floorcheck::parallel::Parallelism;
use floorcheck::report::Stages;

const MODES: [(&str, Parallelism); 2] = [("sequential", Parallelism::Sequential), ("parallel", Parallelism::Parallel)];

fn certify_branches(c: &mut Criterion) {
    let corpus = builtin_corpus();
    let mut group = c.benchmark_group("certify");
    for id in ["T1", "T20", "T24"] {
        let t = corpus.theorem(id).unwrap();
        for (name, mode) in MODES {
            let cfg = RunConfig { parallelism: mode, ..RunConfig::default() };
            group.bench_with_input(BenchmarkId::new(name, id), &cfg, |b, cfg| {
                b.iter(|| certify_statement(black_box(&t.as_printed), &t.slices, cfg))
            });
        }
    }
    group.finish();
}

fn check_corpus(c: &mut Criterion) {
    let corpus = builtin_corpus();
    let records: Vec<_> = corpus.theorems.iter().filter(|t| !["T4", "T23"].contains(&t.id.as_str())).collect();
    let mut group = c.benchmark_group("check");
    group.sample_size(10);
    for (name, mode) in MODES {
        let cfg = RunConfig { n_max: 10, parallelism: mode, ..RunConfig::default() };
        group.bench_function(name, |b| b.iter(|| run_reports(black_box(&records), corpus, &cfg, Stages::CHECK)));
    }
    group.finish();
}

criterion_group!(benches, certify_branches, check_corpus);
criterion_main!(benches);

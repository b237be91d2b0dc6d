use std::hint::black_box;

use casgen_bench::cleveland;
use casgen_core::{
    ga_search, roc_auc, train_cascade, CascadeSpec, CfsCache, Classifier, GaConfig, Hyperparameters, Label,
    LearnerSpec, MethodSpec,
};
use criterion::{criterion_group, criterion_main, Criterion};

fn learners(c: &mut Criterion) {
    let table = cleveland();
    let mut group = c.benchmark_group("train");
    for (name, spec) in [
        ("naive_bayes", LearnerSpec::naive_bayes()),
        ("c45", LearnerSpec::c45()),
        ("ripper", LearnerSpec::ripper()),
    ] {
        group.bench_function(name, |b| b.iter(|| spec.train(black_box(&table)).unwrap()));
    }
    group.finish();

    let tree = LearnerSpec::c45().train(&table).unwrap();
    c.bench_function("predict/c45_303_rows", |b| {
        b.iter(|| {
            table
                .rows()
                .map(|r| tree.predict_distribution(black_box(r)).unwrap().positive())
                .sum::<f64>()
        })
    });
}

fn feature_selection(c: &mut Criterion) {
    let table = cleveland();
    c.bench_function("cfs/cache_build", |b| b.iter(|| CfsCache::build(black_box(&table)).unwrap()));
    let cache = CfsCache::build(&table).unwrap();
    let ga = GaConfig::default();
    c.bench_function("cfs/ga_search", |b| b.iter(|| ga_search(black_box(&cache), &ga).unwrap()));
    let spec = CascadeSpec::new(LearnerSpec::c45());
    c.bench_function("cascade/train_c45", |b| b.iter(|| train_cascade(&spec, black_box(&table), 7).unwrap()));
}

fn ensembles(c: &mut Criterion) {
    let table = cleveland();
    let hp = Hyperparameters::default();
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    for name in ["Bg-C4.5", "RS-C4.5", "Bg-C-C4.5", "RS-C-RPR"] {
        let spec = MethodSpec::parse(name, &hp).unwrap();
        group.bench_function(name, |b| b.iter(|| spec.train(black_box(&table), 3).unwrap()));
    }
    group.finish();

    let truth: Vec<Label> = table.labels().to_vec();
    let scores: Vec<f64> = (0..truth.len()).map(|i| ((i * 37) % 101) as f64 / 100.0).collect();
    c.bench_function("metrics/roc_auc_303", |b| b.iter(|| roc_auc(black_box(&truth), black_box(&scores)).unwrap()));
}

criterion_group!(benches, learners, feature_selection, ensembles);
criterion_main!(benches);

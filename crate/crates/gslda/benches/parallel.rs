//! Sequential versus parallel timings for the hot loops.
//!
//! "sequential" runs inside a one-thread rayon pool, "parallel" on the
//! default pool. Built without the `parallel` feature only the sequential
//! numbers are produced.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gslda::boosting::SampleWeights;
use gslda::cascade::{train_cascade, CascadeConfig, CascadeModel, Method, TrainingPool};
use gslda::detect::scan_image;
use gslda::features::{GrayImage, HaarPoolSpec};
use gslda::scatter::{forward_select, ResponseMatrix, ScatterConfig};
use gslda::synth::{synth_corpus, SynthSpec};
use gslda::weak::{build_table, FeatureValues};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn modes() -> Vec<(&'static str, Option<usize>)> {
    let mut m = vec![("sequential", Some(1))];
    if cfg!(feature = "parallel") {
        m.push(("parallel", None));
    }
    m
}

#[cfg(feature = "parallel")]
fn in_pool<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn in_pool<R: Send>(_threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    f()
}

fn stump_data(n: usize, m: usize) -> (FeatureValues, Vec<i8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let labels: Vec<i8> = (0..n).map(|i| if i % 3 == 0 { 1 } else { -1 }).collect();
    let values = (0..n * m).map(|_| rng.random_range(-1.0..1.0)).collect();
    (FeatureValues::new(n, values).unwrap(), labels)
}

fn responses(n: usize, m: usize) -> ResponseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut labels: Vec<i8> = (0..n).map(|_| if rng.random_bool(0.4) { 1 } else { -1 }).collect();
    labels[0] = 1;
    labels[1] = -1;
    let data = (0..n * m).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
    ResponseMatrix::from_feature_major(data, labels).unwrap()
}

fn small_cascade() -> (CascadeModel, Vec<GrayImage>) {
    let corpus = synth_corpus(&SynthSpec { seed: 4, n_pos: 300, n_neg: 300, n_reservoir: 40, n_test: 4, ..Default::default() })
        .unwrap();
    let pool = TrainingPool {
        positives: corpus.positives,
        negatives: corpus.negatives,
        reservoir: corpus.reservoir,
    };
    let cfg = CascadeConfig {
        method: Method::Bgslda1,
        max_stages: 4,
        features: HaarPoolSpec { base_window: 16, stride: 1, min_size: 1, limit: Some(500), seed: 4 },
        seed: 4,
        ..Default::default()
    };
    let model = train_cascade(&pool, &cfg, |_| {}).unwrap().model;
    (model, corpus.test_images.into_iter().map(|(_, img)| img).collect())
}

fn benches(c: &mut Criterion) {
    let (values, labels) = stump_data(2000, 500);
    let weights = SampleWeights::uniform(labels.len());
    let rm = responses(1000, 400);
    let scfg = ScatterConfig { max_features: 20, ..Default::default() };
    let (model, images) = small_cascade();

    let mut g = c.benchmark_group("build_table");
    g.sample_size(10);
    for (name, threads) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| in_pool(threads, || build_table(&values, &labels, &weights).unwrap()))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("forward_select");
    g.sample_size(10);
    for (name, threads) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| in_pool(threads, || forward_select(&rm, &scfg, None).unwrap()))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("scan_image");
    g.sample_size(10);
    for (name, threads) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                in_pool(threads, || {
                    images.iter().map(|img| scan_image(&model, img, 1.25, 1).unwrap().0.len()).sum::<usize>()
                })
            })
        });
    }
    g.finish();
}

criterion_group!(parallel, benches);
criterion_main!(parallel);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng;
use rbnk_core::{
    evaluate, find_attractor, random_network, rng_from_seed, ArityMode, EnvironmentSet, EvaluationConfig,
    Landscape, NetworkState,
};

fn step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for r in [12, 100, 1000] {
        let mut rng = rng_from_seed(1);
        let g = random_network(r, ArityMode::Uniform { min: 1, max: 5 }, 2, 10, &mut rng).unwrap();
        let current: Vec<bool> = (0..r).map(|_| rng.random()).collect();
        let mut next = vec![false; r];
        let input = [true, false];
        group.bench_with_input(BenchmarkId::from_parameter(r), &r, |b, _| {
            b.iter(|| g.step_into(black_box(&current), &mut next, Some(&input)))
        });
    }
    group.finish();
}

fn fitness(c: &mut Criterion) {
    let mut group = c.benchmark_group("fitness");
    for k in [0, 2, 5, 9] {
        let mut rng = rng_from_seed(2);
        let l = Landscape::generate(10, k, &mut rng).unwrap();
        let traits: Vec<bool> = (0..10).map(|_| rng.random()).collect();
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, _| {
            b.iter(|| l.fitness(black_box(&traits)).unwrap())
        });
    }
    group.finish();
}

fn evaluation(c: &mut Criterion) {
    let mut rng = rng_from_seed(3);
    let envs = EnvironmentSet::generate(10, 2, 1, 0.0, &mut rng).unwrap();
    let g = random_network(12, ArityMode::Fixed(2), 2, 10, &mut rng).unwrap();
    let config = EvaluationConfig::default();
    c.bench_function("evaluate_r12_t100_x10", |b| {
        b.iter(|| evaluate(black_box(&g), &envs, &config, &mut rng).unwrap())
    });
}

fn attractor(c: &mut Criterion) {
    let mut group = c.benchmark_group("find_attractor");
    for b in [1, 2] {
        let mut rng = rng_from_seed(4);
        let g = random_network(100, ArityMode::Fixed(b), 0, 0, &mut rng).unwrap();
        let start = NetworkState::random(100, &mut rng);
        group.bench_with_input(BenchmarkId::new("r100", b), &b, |bench, _| {
            bench.iter(|| find_attractor(black_box(&g), &start, None, 100_000).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, step, fitness, evaluation, attractor);
criterion_main!(benches);

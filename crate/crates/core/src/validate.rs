//! Self-check that cross-validates the fast paths against [`crate::oracle`].

use std::collections::HashSet;

use rand::Rng;
use serde::Serialize;

use crate::analysis::{two_tailed_p, welch_t_test};
use crate::eval::{evaluate, EvaluationConfig};
use crate::landscape::{EnvironmentSet, Landscape};
use crate::network::{find_attractor, random_network, ArityMode, NetworkState, MAX_ARITY};
use crate::oracle;
use crate::rng::{derive_seed, rng_from_seed, SimRng};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, failures: usize, cases: usize) -> Self {
        Check {
            name,
            passed: failures == 0,
            detail: format!("{failures} mismatches in {cases} cases"),
        }
    }
}

/// Runs every check; `scale` multiplies the number of random cases.
pub fn run_validation(seed: u64, scale: usize) -> Vec<Check> {
    let scale = scale.max(1);
    let checks: [fn(&mut SimRng, usize) -> Check; 7] = [
        check_step,
        check_attractors,
        check_fitness,
        check_optima,
        check_welch,
        check_evaluation,
        check_seeds,
    ];
    checks
        .iter()
        .enumerate()
        .map(|(i, check)| check(&mut rng_from_seed(derive_seed(seed, &[i as u64])), scale))
        .collect()
}

fn check_step(rng: &mut SimRng, scale: usize) -> Check {
    let cases = 50 * scale;
    let mut failures = 0;
    for _ in 0..cases {
        let inputs = rng.random_range(0..=3);
        let traits = rng.random_range(0..=4);
        let r = inputs + traits + rng.random_range(1..=12);
        let g = random_network(r, ArityMode::Uniform { min: 1, max: MAX_ARITY }, inputs, traits, rng).unwrap();
        let state = NetworkState::random(r, rng);
        let input: Vec<bool> = (0..inputs).map(|_| rng.random()).collect();
        let input = (inputs > 0).then_some(input.as_slice());
        let fast = g.step(&state, input).unwrap();
        if fast.bits() != oracle::naive_step(&g, state.bits(), input).as_slice() {
            failures += 1;
        }
    }
    Check::new("network_step", failures, cases)
}

fn check_attractors(rng: &mut SimRng, scale: usize) -> Check {
    let cases = 30 * scale;
    let mut failures = 0;
    for _ in 0..cases {
        let r = rng.random_range(1..=10);
        let b = rng.random_range(1..=MAX_ARITY);
        let g = random_network(r, ArityMode::Fixed(b), 0, 0, rng).unwrap();
        let start = NetworkState::random(r, rng);
        let fast = find_attractor(&g, &start, None, 1 << 12).unwrap();
        if fast != Some(oracle::brute_force_attractor(&g, start.bits(), None)) {
            failures += 1;
        }
    }
    Check::new("attractor_search", failures, cases)
}

fn check_fitness(rng: &mut SimRng, scale: usize) -> Check {
    let cases = 100 * scale;
    let mut failures = 0;
    for _ in 0..cases {
        let n = rng.random_range(1..=12);
        let k = rng.random_range(0..n);
        let l = Landscape::generate(n, k, rng).unwrap();
        let traits: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        if (l.fitness(&traits).unwrap() - oracle::naive_fitness(&l, &traits)).abs() > 1e-12 {
            failures += 1;
        }
    }
    Check::new("landscape_fitness", failures, cases)
}

fn check_optima(rng: &mut SimRng, scale: usize) -> Check {
    let cases = 5 * scale;
    let mut failures = 0;
    for _ in 0..cases {
        let n = rng.random_range(2..=8);
        let k = rng.random_range(0..n);
        let l = Landscape::generate(n, k, rng).unwrap();
        let opt = l.exhaustive_optimum().unwrap();
        let endpoints: Vec<usize> = (0..1usize << n).map(|g| oracle::trait_space_hillclimb(&l, g)).collect();
        let fixed = endpoints.iter().enumerate().filter(|&(g, &e)| g == e).count();
        let best = endpoints
            .iter()
            .map(|&e| oracle::naive_fitness(&l, &oracle::genotype_bits(e, n)))
            .fold(f64::NEG_INFINITY, f64::max);
        if fixed != opt.local_optima || (best - opt.best_fitness).abs() > 1e-12 {
            failures += 1;
        }
    }
    Check::new("local_optima", failures, cases)
}

fn check_welch(rng: &mut SimRng, scale: usize) -> Check {
    let cases = 100 * scale;
    let mut failures = 0;
    for _ in 0..cases {
        let a: Vec<f64> = (0..rng.random_range(2..30)).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..rng.random_range(2..30)).map(|_| rng.random::<f64>() * 2.0).collect();
        let fast = welch_t_test(&a, &b).unwrap();
        let (t, df) = oracle::naive_welch(&a, &b);
        if (fast.t_statistic - t).abs() > 1e-9 * t.abs().max(1.0) || (fast.degrees_of_freedom - df).abs() > 1e-9 * df {
            failures += 1;
        }
    }
    for (t, df, p) in [(12.706, 1.0, 0.05), (2.228, 10.0, 0.05), (2.750, 30.0, 0.01)] {
        if (two_tailed_p(t, df) - p).abs() > 1e-3 {
            failures += 1;
        }
    }
    Check::new("welch_t_test", failures, cases + 3)
}

fn check_evaluation(rng: &mut SimRng, scale: usize) -> Check {
    let cases = 10 * scale;
    let mut failures = 0;
    let config = EvaluationConfig::default();
    for _ in 0..cases {
        let envs = EnvironmentSet::generate(10, rng.random_range(0..10), 1, 0.0, rng).unwrap();
        let g = random_network(12, ArityMode::Uniform { min: 1, max: MAX_ARITY }, 2, 10, rng).unwrap();
        let seed: u64 = rng.random();
        let a = evaluate(&g, &envs, &config, &mut rng_from_seed(seed)).unwrap();
        let b = evaluate(&g, &envs, &config, &mut rng_from_seed(seed)).unwrap();
        if a != b || !(0.0..=1.0).contains(&a) {
            failures += 1;
        }
    }
    Check::new("evaluation", failures, cases)
}

fn check_seeds(rng: &mut SimRng, scale: usize) -> Check {
    let master: u64 = rng.random();
    let mut seen = HashSet::new();
    let mut cases = 0;
    for cell in 0..(20 * scale) as u64 {
        for l in 0..10 {
            for r in 0..10 {
                seen.insert(derive_seed(master, &[cell, l, r]));
                cases += 1;
            }
        }
    }
    Check::new("seed_derivation", cases - seen.len(), cases)
}

//! Significance tests, arity summaries and one-mutant robustness scans.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::eval::{evaluate, EvaluationConfig};
use crate::evolve::{mutate, MutationKind, MutationSettings, RunRecord};
use crate::landscape::EnvironmentSet;
use crate::network::{NetworkGenome, MAX_ARITY};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t_statistic: f64,
    /// Welch–Satterthwaite degrees of freedom.
    pub degrees_of_freedom: f64,
    /// Two-tailed.
    pub p_value: f64,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance.
pub fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() as f64 - 1.0)
}

/// Two-tailed p-value of `t` under Student's t with `df` degrees of freedom.
pub fn two_tailed_p(t: f64, df: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

/// Welch's unequal-variance t-test between two samples.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::DegenerateSample(format!(
            "need at least 2 values per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let se_a = variance(a) / a.len() as f64;
    let se_b = variance(b) / b.len() as f64;
    let se = se_a + se_b;
    if se <= 0.0 || !se.is_finite() {
        return Err(Error::DegenerateSample("both samples have zero variance".into()));
    }
    let t = (mean(a) - mean(b)) / se.sqrt();
    let df = se * se
        / (se_a * se_a / (a.len() as f64 - 1.0) + se_b * se_b / (b.len() as f64 - 1.0));
    Ok(TTestResult {
        t_statistic: t,
        degrees_of_freedom: df,
        p_value: two_tailed_p(t, df),
    })
}

/// Which lesser mutation produced the least fit one-mutant neighbor,
/// accumulated over one or more genomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub neighbor_count: usize,
    pub alter_function_worst: usize,
    pub rewire_connection_worst: usize,
}

impl RobustnessReport {
    pub fn genomes(&self) -> usize {
        self.alter_function_worst + self.rewire_connection_worst
    }

    /// The kind that most often produced the worst neighbor; `None` on a tie.
    pub fn worst_mutation_kind(&self) -> Option<MutationKind> {
        use std::cmp::Ordering::*;
        match self.alter_function_worst.cmp(&self.rewire_connection_worst) {
            Greater => Some(MutationKind::AlterFunction),
            Less => Some(MutationKind::RewireConnection),
            Equal => None,
        }
    }

    pub fn merge(&mut self, other: &RobustnessReport) {
        self.neighbor_count = self.neighbor_count.max(other.neighbor_count);
        self.alter_function_worst += other.alter_function_worst;
        self.rewire_connection_worst += other.rewire_connection_worst;
    }
}

/// Builds `neighbors` one-mutant variants of `genome`, each by a fair coin
/// between a function-bit flip and a rewiring, and reports which kind gave
/// the lowest fitness. Ties among minimal mutants are broken uniformly.
pub fn one_mutant_robustness<R: Rng + ?Sized>(
    genome: &NetworkGenome,
    envs: &EnvironmentSet,
    config: &EvaluationConfig,
    neighbors: usize,
    rng: &mut R,
) -> Result<RobustnessReport> {
    if neighbors == 0 {
        return Err(Error::InvalidParameter("neighbors must be at least 1".into()));
    }
    let settings = MutationSettings::default();
    let mut worst_fitness = f64::INFINITY;
    let mut worst_kinds: Vec<MutationKind> = Vec::new();
    for _ in 0..neighbors {
        let kind = if rng.random::<bool>() {
            MutationKind::AlterFunction
        } else {
            MutationKind::RewireConnection
        };
        let mutant = mutate(genome, kind, &settings, rng)?;
        let fitness = evaluate(&mutant, envs, config, &mut rng_from_seed(rng.random()))?;
        if fitness < worst_fitness {
            worst_fitness = fitness;
            worst_kinds.clear();
        }
        if fitness == worst_fitness {
            worst_kinds.push(kind);
        }
    }
    let winner = worst_kinds[rng.random_range(0..worst_kinds.len())];
    let mut report = RobustnessReport {
        neighbor_count: neighbors,
        ..Default::default()
    };
    match winner {
        MutationKind::AlterFunction => report.alter_function_worst = 1,
        _ => report.rewire_connection_worst = 1,
    }
    Ok(report)
}

/// Normalized arity histogram pooled over the final genomes; bin `b - 1`
/// holds arity `b`.
pub fn arity_distribution(records: &[RunRecord]) -> [f64; MAX_ARITY] {
    genome_arity_distribution(records.iter().map(|r| &r.final_genome))
}

pub fn genome_arity_distribution<'a>(
    genomes: impl IntoIterator<Item = &'a NetworkGenome>,
) -> [f64; MAX_ARITY] {
    let mut counts = [0usize; MAX_ARITY];
    for g in genomes {
        for (c, h) in counts.iter_mut().zip(g.arity_histogram()) {
            *c += h;
        }
    }
    let total: usize = counts.iter().sum();
    let mut dist = [0.0; MAX_ARITY];
    if total > 0 {
        for (d, c) in dist.iter_mut().zip(counts) {
            *d = c as f64 / total as f64;
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::Landscape;
    use crate::network::{random_network, ArityMode};
    use crate::oracle::naive_welch;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng;

    // Box–Muller.
    fn gaussian<R: Rng>(rng: &mut R, mean: f64, sd: f64) -> f64 {
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random();
        mean + sd * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    #[test]
    fn identical_samples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let r = welch_t_test(&a, &a).unwrap();
        assert_eq!(r.t_statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn equal_variance_reference() {
        // Means 3 and 4, variances 2.5 each: t = -1/sqrt(1) = -1, df = 8.
        let r = welch_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert!((r.t_statistic + 1.0).abs() < 1e-12);
        assert!((r.degrees_of_freedom - 8.0).abs() < 1e-12);
        assert!((r.p_value - 0.3465935070873345).abs() < 1e-6);
    }

    #[test]
    fn published_critical_values() {
        // (t, df, two-tailed p) from standard t tables.
        let table = [
            (12.706, 1.0, 0.05),
            (4.303, 2.0, 0.05),
            (2.571, 5.0, 0.05),
            (2.228, 10.0, 0.05),
            (3.169, 10.0, 0.01),
            (2.086, 20.0, 0.05),
            (2.750, 30.0, 0.01),
        ];
        for (t, df, p) in table {
            assert!((two_tailed_p(t, df) - p).abs() < 1e-3, "t={t} df={df}");
        }
    }

    #[test]
    fn separated_gaussians() {
        let mut rng = rng_from_seed(1);
        let a: Vec<f64> = (0..100).map(|_| gaussian(&mut rng, 0.0, 0.1)).collect();
        let b: Vec<f64> = (0..100).map(|_| gaussian(&mut rng, 1.0, 0.1)).collect();
        assert!(welch_t_test(&a, &b).unwrap().p_value < 1e-6);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(welch_t_test(&[1.0, 1.0], &[2.0, 2.0]), Err(Error::DegenerateSample(_))));
        assert!(matches!(welch_t_test(&[1.0], &[2.0, 3.0]), Err(Error::DegenerateSample(_))));
        assert!(welch_t_test(&[1.0, 1.0], &[2.0, 3.0]).is_ok());
    }

    #[test]
    fn single_neighbor_reports_its_kind() {
        let mut rng = rng_from_seed(2);
        let g = random_network(14, ArityMode::Fixed(2), 2, 10, &mut rng).unwrap();
        let envs = EnvironmentSet::generate(10, 2, 1, 0.0, &mut rng).unwrap();
        let config = EvaluationConfig::default();
        for seed in 0..20 {
            let mut a = rng_from_seed(seed);
            let report = one_mutant_robustness(&g, &envs, &config, 1, &mut a).unwrap();
            // Replay the coin that chose the single mutant's kind.
            let expected = if rng_from_seed(seed).random::<bool>() {
                MutationKind::AlterFunction
            } else {
                MutationKind::RewireConnection
            };
            assert_eq!(report.worst_mutation_kind(), Some(expected));
            assert_eq!(report.genomes(), 1);
        }
    }

    #[test]
    fn constant_landscape_splits_evenly() {
        let mut rng = rng_from_seed(3);
        let flat = Landscape::from_parts(10, 0, vec![vec![]; 10], vec![vec![0.5, 0.5]; 10]).unwrap();
        let envs = EnvironmentSet::single(flat);
        let config = EvaluationConfig { trials: 1, ..Default::default() };
        let mut total = RobustnessReport::default();
        for _ in 0..400 {
            let g = random_network(12, ArityMode::Fixed(2), 2, 10, &mut rng).unwrap();
            total.merge(&one_mutant_robustness(&g, &envs, &config, 5, &mut rng).unwrap());
        }
        assert_eq!(total.genomes(), 400);
        let share = total.alter_function_worst as f64 / 400.0;
        // 3 standard deviations of a fair binomial at n = 400.
        assert!((share - 0.5).abs() < 3.0 * 0.025, "share {share}");
    }

    #[test]
    fn arity_distribution_of_uniform_init() {
        let mut rng = rng_from_seed(4);
        let genomes: Vec<NetworkGenome> = (0..200)
            .map(|_| random_network(12, ArityMode::Uniform { min: 1, max: 5 }, 2, 10, &mut rng).unwrap())
            .collect();
        let dist = genome_arity_distribution(&genomes);
        assert!(dist.iter().all(|&d| (d - 0.2).abs() < 0.03), "{dist:?}");
        let ones: Vec<NetworkGenome> = (0..3)
            .map(|_| random_network(12, ArityMode::Fixed(1), 2, 10, &mut rng).unwrap())
            .collect();
        assert_eq!(genome_arity_distribution(&ones), [1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn welch_matches_naive_and_is_symmetric(
            a in prop::collection::vec(-100.0f64..100.0, 2..30),
            b in prop::collection::vec(-100.0f64..100.0, 2..30),
        ) {
            prop_assume!(variance(&a) + variance(&b) > 1e-6);
            let ab = welch_t_test(&a, &b).unwrap();
            let ba = welch_t_test(&b, &a).unwrap();
            let (t, df) = naive_welch(&a, &b);
            prop_assert!((ab.t_statistic - t).abs() <= 1e-9 * t.abs().max(1.0));
            prop_assert!((ab.degrees_of_freedom - df).abs() <= 1e-9 * df);
            prop_assert!((ab.t_statistic + ba.t_statistic).abs() <= 1e-12 * ab.t_statistic.abs().max(1.0));
            prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab.p_value));
            prop_assert!(ab.degrees_of_freedom > 0.0);
        }

        #[test]
        fn p_is_affine_invariant(
            a in prop::collection::vec(-10.0f64..10.0, 3..20),
            b in prop::collection::vec(-10.0f64..10.0, 3..20),
            scale in 0.1f64..10.0,
            shift in -50.0f64..50.0,
        ) {
            prop_assume!(variance(&a) > 1e-3 && variance(&b) > 1e-3);
            let p = welch_t_test(&a, &b).unwrap().p_value;
            let ta: Vec<f64> = a.iter().map(|x| x * scale + shift).collect();
            let tb: Vec<f64> = b.iter().map(|x| x * scale + shift).collect();
            let q = welch_t_test(&ta, &tb).unwrap().p_value;
            prop_assert!((p - q).abs() < 1e-8);
        }
    }
}

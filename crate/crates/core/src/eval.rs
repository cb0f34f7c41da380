//! Coupled network/landscape evaluation.
//!
//! A trial starts the network in a uniform random state and updates it for
//! `cycles` synchronous steps. The input patterns `0..2^I` are applied in
//! ascending order, each for an equal share of the cycles, and the trajectory
//! runs on across pattern switches. After every step the trait nodes are
//! scored on the active landscape; a trial scores the mean over its cycles
//! and a genome scores the mean over its trials.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::EnvironmentSet;
use crate::network::NetworkGenome;
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationConfig {
    /// Update cycles per trial.
    pub cycles: usize,
    /// Independent random-start trials per evaluation.
    pub trials: usize,
    /// Score each input pattern on its own landscape instead of landscape 0.
    pub multi_environment: bool,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            cycles: 100,
            trials: 10,
            multi_environment: false,
        }
    }
}

/// Input patterns in ascending binary order, input 0 as the most significant
/// bit, each held for `cycles_per_pattern` consecutive cycles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputSchedule {
    patterns: Vec<Vec<bool>>,
    cycles_per_pattern: usize,
}

impl InputSchedule {
    pub fn new(input_count: usize, cycles: usize) -> Result<Self> {
        let count = 1usize << input_count;
        if cycles == 0 || cycles % count != 0 {
            return Err(Error::ScheduleInfeasible {
                cycles,
                patterns: count,
            });
        }
        let patterns = (0..count)
            .map(|p| {
                (0..input_count)
                    .map(|k| (p >> (input_count - 1 - k)) & 1 == 1)
                    .collect()
            })
            .collect();
        Ok(InputSchedule {
            patterns,
            cycles_per_pattern: cycles / count,
        })
    }

    pub fn patterns(&self) -> &[Vec<bool>] {
        &self.patterns
    }

    pub fn cycles_per_pattern(&self) -> usize {
        self.cycles_per_pattern
    }

    /// Pattern index in force during 0-based cycle `t`.
    pub fn pattern_index(&self, t: usize) -> usize {
        t / self.cycles_per_pattern
    }
}

fn check_compatible(
    genome: &NetworkGenome,
    envs: &EnvironmentSet,
    config: &EvaluationConfig,
) -> Result<InputSchedule> {
    if config.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if genome.trait_count() != envs.n() {
        return Err(Error::DimensionMismatch {
            expected: envs.n(),
            found: genome.trait_count(),
        });
    }
    let schedule = InputSchedule::new(genome.input_count(), config.cycles)?;
    if config.multi_environment && envs.len() != schedule.patterns().len() {
        return Err(Error::DimensionMismatch {
            expected: schedule.patterns().len(),
            found: envs.len(),
        });
    }
    Ok(schedule)
}

/// Mean fitness of `genome` over `config.trials` random-start trials.
pub fn evaluate<R: Rng + ?Sized>(
    genome: &NetworkGenome,
    envs: &EnvironmentSet,
    config: &EvaluationConfig,
    rng: &mut R,
) -> Result<f64> {
    let schedule = check_compatible(genome, envs, config)?;
    let r = genome.len();
    let traits = genome.trait_range();
    let landscapes = envs.landscapes();
    let has_inputs = genome.input_count() > 0;
    let mut current = vec![false; r];
    let mut next = vec![false; r];

    let mut total = 0.0;
    for _ in 0..config.trials {
        for bit in current.iter_mut() {
            *bit = rng.random();
        }
        let mut trial = 0.0;
        for t in 0..config.cycles {
            let p = schedule.pattern_index(t);
            let input = has_inputs.then(|| schedule.patterns[p].as_slice());
            genome.step_into(&current, &mut next, input);
            std::mem::swap(&mut current, &mut next);
            let landscape = if config.multi_environment {
                &landscapes[p]
            } else {
                &landscapes[0]
            };
            trial += landscape.fitness_unchecked(&current[traits.clone()]);
        }
        total += trial / config.cycles as f64;
    }
    Ok(total / config.trials as f64)
}

/// Mean and unbiased variance of `samples` evaluations, sample `i` drawing
/// from the stream seeded by `derive_seed(seed, [i])`.
pub fn expected_fitness_variance(
    genome: &NetworkGenome,
    envs: &EnvironmentSet,
    config: &EvaluationConfig,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if samples < 2 {
        return Err(Error::InvalidParameter("samples must be at least 2".into()));
    }
    let values = (0..samples)
        .map(|i| evaluate(genome, envs, config, &mut rng_from_seed(derive_seed(seed, &[i as u64]))))
        .collect::<Result<Vec<_>>>()?;
    let n = samples as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, variance))
}

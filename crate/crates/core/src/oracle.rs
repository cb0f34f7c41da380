//! Naive reference implementations used to cross-check the optimized paths.
//!
//! Nothing here calls into the fast code it checks: truth tables are read
//! through [`BooleanFunction::table`] as plain vectors, indices are built with
//! explicit powers of two, trajectories are stored in full and scanned
//! linearly.

use crate::landscape::Landscape;
use crate::network::{AttractorReport, NetworkGenome};

/// Output of node `node` evaluated directly from its truth table.
pub fn naive_node_output(
    genome: &NetworkGenome,
    node: usize,
    state: &[bool],
    input: Option<&[bool]>,
) -> bool {
    let spec = &genome.nodes()[node];
    let arity = spec.connections.len();
    let mut index = 0usize;
    for (slot, &source) in spec.connections.iter().enumerate() {
        let value = match input {
            Some(bits) if slot == 0 && node < genome.input_count() => bits[node],
            _ => state[source],
        };
        if value {
            index += 2usize.pow((arity - 1 - slot) as u32);
        }
    }
    spec.function.table()[index]
}

pub fn naive_step(genome: &NetworkGenome, state: &[bool], input: Option<&[bool]>) -> Vec<bool> {
    (0..genome.len())
        .map(|i| naive_node_output(genome, i, state, input))
        .collect()
}

/// Stores the whole trajectory and scans it for the first repeated state.
///
/// Terminates for any genome because the state space is finite.
pub fn brute_force_attractor(
    genome: &NetworkGenome,
    start: &[bool],
    input: Option<&[bool]>,
) -> AttractorReport {
    let mut trajectory: Vec<Vec<bool>> = vec![start.to_vec()];
    loop {
        let next = naive_step(genome, trajectory.last().unwrap(), input);
        if let Some(first) = trajectory.iter().position(|s| *s == next) {
            return AttractorReport {
                transient_length: first,
                cycle_length: trajectory.len() - first,
            };
        }
        trajectory.push(next);
    }
}

/// Mean of per-trait table lookups with the index built by powers of two.
pub fn naive_fitness(landscape: &Landscape, traits: &[bool]) -> f64 {
    let n = landscape.n();
    let k = landscape.k();
    let mut total = 0.0;
    for trait_index in 0..n {
        let mut word = vec![traits[trait_index]];
        word.extend(landscape.neighbors(trait_index).iter().map(|&j| traits[j]));
        let mut index = 0usize;
        for (pos, &bit) in word.iter().enumerate() {
            if bit {
                index += 2usize.pow((k - pos) as u32);
            }
        }
        total += landscape.table(trait_index)[index];
    }
    total / n as f64
}

/// Genotype `g` as a trait vector, trait `i` taken from bit `i`.
pub fn genotype_bits(g: usize, n: usize) -> Vec<bool> {
    (0..n).map(|i| (g >> i) & 1 == 1).collect()
}

/// Steepest-ascent hillclimb over one-bit flips from `start`; returns the
/// genotype where no flip improves fitness.
pub fn trait_space_hillclimb(landscape: &Landscape, start: usize) -> usize {
    let n = landscape.n();
    let mut current = start;
    let mut current_fitness = naive_fitness(landscape, &genotype_bits(current, n));
    loop {
        let best = (0..n)
            .map(|i| {
                let g = current ^ (1 << i);
                (g, naive_fitness(landscape, &genotype_bits(g, n)))
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if best.1 <= current_fitness {
            return current;
        }
        current = best.0;
        current_fitness = best.1;
    }
}

/// Welch's t statistic and Welch–Satterthwaite degrees of freedom computed
/// from two-pass sums, without the p-value.
pub fn naive_welch(a: &[f64], b: &[f64]) -> (f64, f64) {
    fn moments(x: &[f64]) -> (f64, f64, f64) {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
        (n, mean, ss / (n - 1.0))
    }
    let (na, ma, va) = moments(a);
    let (nb, mb, vb) = moments(b);
    let sa = va / na;
    let sb = vb / nb;
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    (t, df)
}

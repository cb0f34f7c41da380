//! Mutation operators and the single-parent hillclimber.

use std::io::{Read, Write};

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{evaluate, EvaluationConfig};
use crate::landscape::EnvironmentSet;
use crate::network::{BooleanFunction, NetworkGenome, NodeSpec, MAX_ARITY};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MutationKind {
    DeleteNode,
    DuplicateNode,
    AlterFunction,
    RewireConnection,
    AlterArity,
}

const FIXED_ARITY_KINDS: [MutationKind; 4] = [
    MutationKind::DeleteNode,
    MutationKind::DuplicateNode,
    MutationKind::AlterFunction,
    MutationKind::RewireConnection,
];

const EVOLVABLE_ARITY_KINDS: [MutationKind; 5] = [
    MutationKind::DeleteNode,
    MutationKind::DuplicateNode,
    MutationKind::AlterFunction,
    MutationKind::RewireConnection,
    MutationKind::AlterArity,
];

impl MutationKind {
    /// Kinds drawn with equal probability in each mode.
    pub fn enabled(evolvable_arity: bool) -> &'static [MutationKind] {
        if evolvable_arity {
            &EVOLVABLE_ARITY_KINDS
        } else {
            &FIXED_ARITY_KINDS
        }
    }
}

/// What `AlterFunction` does to the chosen node's truth table.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionMutation {
    /// Flip one uniformly chosen table bit.
    #[default]
    BitFlip,
    /// Redraw the whole table.
    Rerandomize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// Fitter child wins; at equal fitness the smaller genome wins; full ties
    /// are decided by a fair coin.
    #[default]
    Parsimony,
    /// Child wins if fitter or smaller, so fitness may decrease.
    FitterOrSmaller,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationSettings {
    /// Inclusive arity bounds used by `AlterArity`.
    pub arity_range: (usize, usize),
    pub function_mutation: FunctionMutation,
}

impl Default for MutationSettings {
    fn default() -> Self {
        MutationSettings {
            arity_range: (1, MAX_ARITY),
            function_mutation: FunctionMutation::BitFlip,
        }
    }
}

/// Applies one mutation of the given kind, returning the child.
///
/// Input and trait nodes keep their positions and roles under every kind.
pub fn mutate<R: Rng + ?Sized>(
    genome: &NetworkGenome,
    kind: MutationKind,
    settings: &MutationSettings,
    rng: &mut R,
) -> Result<NetworkGenome> {
    let r = genome.len();
    let protected = genome.protected_count();
    let inputs = genome.input_count();
    let traits = genome.trait_count();
    let mut nodes = genome.nodes().to_vec();

    match kind {
        MutationKind::DeleteNode => {
            if r <= protected {
                return Err(Error::NoDeletableNode);
            }
            let victim = rng.random_range(protected..r);
            nodes.remove(victim);
            let survivors = r - 1;
            for node in &mut nodes {
                for c in &mut node.connections {
                    if *c == victim {
                        *c = rng.random_range(0..survivors);
                    } else if *c > victim {
                        *c -= 1;
                    }
                }
            }
        }
        MutationKind::DuplicateNode => {
            let original = rng.random_range(0..r);
            let copy = nodes[original].clone();
            nodes.push(copy);
            let target = rng.random_range(0..r);
            let slot = rng.random_range(0..nodes[target].connections.len());
            nodes[target].connections[slot] = r;
        }
        MutationKind::AlterFunction => {
            let i = rng.random_range(0..r);
            let f = nodes[i].function;
            nodes[i].function = match settings.function_mutation {
                FunctionMutation::BitFlip => f.with_flipped(rng.random_range(0..f.table_len())),
                FunctionMutation::Rerandomize => BooleanFunction::random(f.arity(), rng)?,
            };
        }
        MutationKind::RewireConnection => {
            let i = rng.random_range(0..r);
            let slot = rng.random_range(0..nodes[i].connections.len());
            nodes[i].connections[slot] = rng.random_range(0..r);
        }
        MutationKind::AlterArity => {
            let (lo, hi) = settings.arity_range;
            if lo < 1 || hi > MAX_ARITY || lo > hi {
                return Err(Error::InvalidParameter(format!(
                    "arity range {lo}..={hi} outside 1..={MAX_ARITY}"
                )));
            }
            let i = rng.random_range(0..r);
            let new_arity = rng.random_range(lo..=hi);
            nodes[i] = resize_node(&nodes[i], new_arity, r, rng);
        }
    }
    Ok(NetworkGenome::from_parts_unchecked(nodes, inputs, traits))
}

/// Changes a node's arity. Growing appends random connections; the table
/// keeps the old output wherever the appended inputs are all 0 and draws
/// random bits elsewhere. Shrinking drops trailing connections and keeps the
/// entries where the dropped inputs are 0.
fn resize_node<R: Rng + ?Sized>(node: &NodeSpec, new_arity: usize, r: usize, rng: &mut R) -> NodeSpec {
    let old_arity = node.function.arity();
    let old = node.function.packed();
    let mut connections = node.connections.clone();
    let mut table = 0u32;
    if new_arity >= old_arity {
        let shift = new_arity - old_arity;
        connections.extend((0..shift).map(|_| rng.random_range(0..r)));
        let low_mask = (1usize << shift) - 1;
        for index in 0..1usize << new_arity {
            let bit = if index & low_mask == 0 {
                (old >> (index >> shift)) & 1
            } else {
                u32::from(rng.random::<bool>())
            };
            table |= bit << index;
        }
    } else {
        let shift = old_arity - new_arity;
        connections.truncate(new_arity);
        for index in 0..1usize << new_arity {
            table |= ((old >> (index << shift)) & 1) << index;
        }
    }
    NodeSpec {
        function: BooleanFunction::from_packed(new_arity, table),
        connections,
        role: node.role,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    KeepParent,
    KeepChild,
}

/// Decides whether the child replaces the parent. Fitness comparison is exact.
pub fn select<R: Rng + ?Sized>(
    parent_fitness: f64,
    parent_size: usize,
    child_fitness: f64,
    child_size: usize,
    rule: SelectionRule,
    rng: &mut R,
) -> Selection {
    let child_wins = match rule {
        SelectionRule::Parsimony => {
            child_fitness > parent_fitness
                || (child_fitness == parent_fitness && child_size < parent_size)
        }
        SelectionRule::FitterOrSmaller => {
            child_fitness > parent_fitness || child_size < parent_size
        }
    };
    let tie = child_fitness == parent_fitness && child_size == parent_size;
    if child_wins || (tie && rng.random::<bool>()) {
        Selection::KeepChild
    } else {
        Selection::KeepParent
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillclimberConfig {
    pub generations: usize,
    pub evolvable_arity: bool,
    pub mutation: MutationSettings,
    pub evaluation: EvaluationConfig,
    pub selection: SelectionRule,
    /// Re-evaluate the parent every generation instead of reusing the value
    /// from the evaluation that made it parent.
    pub reevaluate_parent: bool,
    /// Record every `record_stride`-th generation; generation 0 and the last
    /// generation are always recorded.
    pub record_stride: usize,
    pub seed: u64,
}

impl Default for HillclimberConfig {
    fn default() -> Self {
        HillclimberConfig {
            generations: 10_000,
            evolvable_arity: false,
            mutation: MutationSettings::default(),
            evaluation: EvaluationConfig::default(),
            selection: SelectionRule::Parsimony,
            reevaluate_parent: false,
            record_stride: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSample {
    pub generation: usize,
    pub fitness: f64,
    pub size: usize,
    pub arity_histogram: [usize; MAX_ARITY],
}

impl GenerationSample {
    fn of(generation: usize, fitness: f64, genome: &NetworkGenome) -> Self {
        GenerationSample {
            generation,
            fitness,
            size: genome.len(),
            arity_histogram: genome.arity_histogram(),
        }
    }
}

pub const RUN_CSV_HEADER: [&str; 8] = ["generation", "fitness", "R", "b1", "b2", "b3", "b4", "b5"];

/// Time series and outcome of one hillclimber run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub landscape_id: String,
    pub record_stride: usize,
    pub samples: Vec<GenerationSample>,
    pub final_genome: NetworkGenome,
    pub final_fitness: f64,
}

impl RunRecord {
    /// Writes the series as CSV with header
    /// `generation,fitness,R,b1,b2,b3,b4,b5`.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(RUN_CSV_HEADER)?;
        for s in &self.samples {
            let mut row = vec![s.generation.to_string(), s.fitness.to_string(), s.size.to_string()];
            row.extend(s.arity_histogram.iter().map(|c| c.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses a series written by [`RunRecord::write_csv`].
    pub fn read_csv<R: Read>(reader: R) -> csv::Result<Vec<GenerationSample>> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.iter().ne(RUN_CSV_HEADER) {
            return Err(csv::Error::from(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("unexpected run header {header:?}"),
            )));
        }
        r.deserialize::<(usize, f64, usize, usize, usize, usize, usize, usize)>()
            .map(|row| {
                let (generation, fitness, size, b1, b2, b3, b4, b5) = row?;
                Ok(GenerationSample {
                    generation,
                    fitness,
                    size,
                    arity_histogram: [b1, b2, b3, b4, b5],
                })
            })
            .collect()
    }
}

/// Runs the hillclimber from `initial` for `config.generations` generations.
///
/// Each generation draws one mutation kind uniformly from the enabled kinds;
/// a `DeleteNode` draw on a genome without plain nodes is redrawn among the
/// other kinds. All randomness comes from the stream seeded by `config.seed`.
pub fn run_hillclimber(
    initial: &NetworkGenome,
    envs: &EnvironmentSet,
    config: &HillclimberConfig,
    landscape_id: &str,
) -> Result<RunRecord> {
    if config.record_stride == 0 {
        return Err(Error::InvalidParameter("record_stride must be at least 1".into()));
    }
    initial.validate()?;
    let mut rng = rng_from_seed(config.seed);
    let kinds = MutationKind::enabled(config.evolvable_arity);
    let without_delete: Vec<MutationKind> = kinds
        .iter()
        .copied()
        .filter(|&k| k != MutationKind::DeleteNode)
        .collect();

    let mut parent = initial.clone();
    let mut parent_fitness = evaluate(&parent, envs, &config.evaluation, &mut rng)?;
    let mut samples = vec![GenerationSample::of(0, parent_fitness, &parent)];

    for generation in 1..=config.generations {
        let mut kind = *kinds.choose(&mut rng).expect("non-empty");
        if kind == MutationKind::DeleteNode && parent.len() <= parent.protected_count() {
            kind = *without_delete.choose(&mut rng).expect("non-empty");
        }
        let child = mutate(&parent, kind, &config.mutation, &mut rng)?;
        let child_fitness = evaluate(&child, envs, &config.evaluation, &mut rng)?;
        if config.reevaluate_parent {
            parent_fitness = evaluate(&parent, envs, &config.evaluation, &mut rng)?;
        }
        let decision = select(
            parent_fitness,
            parent.len(),
            child_fitness,
            child.len(),
            config.selection,
            &mut rng,
        );
        if decision == Selection::KeepChild {
            parent = child;
            parent_fitness = child_fitness;
        }
        if generation % config.record_stride == 0 || generation == config.generations {
            samples.push(GenerationSample::of(generation, parent_fitness, &parent));
        }
    }

    Ok(RunRecord {
        seed: config.seed,
        landscape_id: landscape_id.to_string(),
        record_stride: config.record_stride,
        samples,
        final_genome: parent,
        final_fitness: parent_fitness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{random_network, ArityMode, Role};
    use crate::rng::{rng_from_seed, SimRng};
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn genome(r: usize, arity: ArityMode, rng: &mut SimRng) -> NetworkGenome {
        random_network(r, arity, 2, 10, rng).unwrap()
    }

    fn references_to(g: &NetworkGenome, target: usize) -> usize {
        g.nodes().iter().flat_map(|n| &n.connections).filter(|&&c| c == target).count()
    }

    #[test]
    fn delete_node_compacts_indices() {
        let mut rng = rng_from_seed(1);
        for _ in 0..200 {
            let g = genome(13, ArityMode::Fixed(3), &mut rng);
            let child = mutate(&g, MutationKind::DeleteNode, &MutationSettings::default(), &mut rng).unwrap();
            assert_eq!(child.len(), 12);
            child.validate().unwrap();
            assert_eq!(&child.nodes()[..12].iter().map(|n| n.role).collect::<Vec<_>>()[..], &g.nodes()[..12].iter().map(|n| n.role).collect::<Vec<_>>()[..]);
        }
    }

    #[test]
    fn delete_node_needs_plain_node() {
        let mut rng = rng_from_seed(2);
        let g = genome(12, ArityMode::Fixed(2), &mut rng);
        assert!(matches!(
            mutate(&g, MutationKind::DeleteNode, &MutationSettings::default(), &mut rng),
            Err(Error::NoDeletableNode)
        ));
    }

    #[test]
    fn duplicate_node_gets_exactly_one_incoming_slot() {
        let mut rng = rng_from_seed(3);
        for _ in 0..200 {
            let g = genome(12, ArityMode::Uniform { min: 1, max: 5 }, &mut rng);
            let child = mutate(&g, MutationKind::DuplicateNode, &MutationSettings::default(), &mut rng).unwrap();
            assert_eq!(child.len(), 13);
            child.validate().unwrap();
            assert_eq!(child.nodes()[12].role, Role::Plain);
            assert_eq!(references_to(&child, 12), 1);
            let changed_slots: usize = g
                .nodes()
                .iter()
                .zip(child.nodes())
                .map(|(a, b)| a.connections.iter().zip(&b.connections).filter(|(x, y)| x != y).count())
                .sum();
            assert_eq!(changed_slots, 1);
            let copy = &child.nodes()[12];
            assert!(g.nodes().iter().any(|n| n.function == copy.function && n.connections == copy.connections));
        }
    }

    #[test]
    fn alter_function_flips_one_bit() {
        let mut rng = rng_from_seed(4);
        for _ in 0..200 {
            let g = genome(12, ArityMode::Fixed(2), &mut rng);
            let child = mutate(&g, MutationKind::AlterFunction, &MutationSettings::default(), &mut rng).unwrap();
            let distance: usize = g
                .nodes()
                .iter()
                .zip(child.nodes())
                .map(|(a, b)| a.function.table().iter().zip(b.function.table()).filter(|(x, y)| **x != *y).count())
                .sum();
            assert_eq!(distance, 1);
            assert!(g.nodes().iter().zip(child.nodes()).all(|(a, b)| a.connections == b.connections));
        }
    }

    #[test]
    fn rewire_changes_at_most_one_slot() {
        let mut rng = rng_from_seed(5);
        for _ in 0..200 {
            let g = genome(15, ArityMode::Fixed(3), &mut rng);
            let child = mutate(&g, MutationKind::RewireConnection, &MutationSettings::default(), &mut rng).unwrap();
            let changed: usize = g
                .nodes()
                .iter()
                .zip(child.nodes())
                .map(|(a, b)| a.connections.iter().zip(&b.connections).filter(|(x, y)| x != y).count())
                .sum();
            assert!(changed <= 1);
            assert!(g.nodes().iter().zip(child.nodes()).all(|(a, b)| a.function == b.function));
        }
    }

    #[test]
    fn arity_resize_preserves_zero_extension() {
        let mut rng = rng_from_seed(6);
        let original = NodeSpec {
            function: BooleanFunction::from_table(&[false, true, true, false]).unwrap(),
            connections: vec![3, 7],
            role: Role::Plain,
        };
        let grown = resize_node(&original, 4, 10, &mut rng);
        assert_eq!(grown.connections[..2], [3, 7]);
        assert_eq!(grown.connections.len(), 4);
        let table = grown.function.table();
        for old_index in 0..4 {
            assert_eq!(table[old_index << 2], original.function.table()[old_index]);
        }
        let shrunk = resize_node(&grown, 2, 10, &mut rng);
        assert_eq!(shrunk, original);
        let one = resize_node(&original, 1, 10, &mut rng);
        // Keep entries where the dropped second input is 0: indices 0 and 2.
        assert_eq!(one.function.table(), vec![false, true]);
        assert_eq!(one.connections, vec![3]);
    }

    #[test]
    fn selection_rules() {
        let mut rng = rng_from_seed(7);
        assert_eq!(select(0.5, 12, 0.6, 14, SelectionRule::Parsimony, &mut rng), Selection::KeepChild);
        assert_eq!(select(0.5, 14, 0.5, 12, SelectionRule::Parsimony, &mut rng), Selection::KeepChild);
        assert_eq!(select(0.5, 12, 0.5, 14, SelectionRule::Parsimony, &mut rng), Selection::KeepParent);
        assert_eq!(select(0.6, 14, 0.5, 12, SelectionRule::Parsimony, &mut rng), Selection::KeepParent);
        assert_eq!(select(0.6, 14, 0.5, 12, SelectionRule::FitterOrSmaller, &mut rng), Selection::KeepChild);
        let kept = (0..10_000)
            .filter(|_| select(0.5, 12, 0.5, 12, SelectionRule::Parsimony, &mut rng) == Selection::KeepChild)
            .count();
        assert!((kept as f64 / 10_000.0 - 0.5).abs() < 0.03);
    }

    #[test]
    fn kind_frequencies_are_uniform() {
        let mut rng = rng_from_seed(8);
        for evolvable in [false, true] {
            let kinds = MutationKind::enabled(evolvable);
            let draws = 100_000;
            let mut counts: HashMap<MutationKind, usize> = HashMap::new();
            for _ in 0..draws {
                *counts.entry(*kinds.choose(&mut rng).unwrap()).or_default() += 1;
            }
            let p = 1.0 / kinds.len() as f64;
            let sd = (draws as f64 * p * (1.0 - p)).sqrt();
            for k in kinds {
                let dev = (counts[k] as f64 - draws as f64 * p).abs();
                assert!(dev < 3.0 * sd, "{k:?}: {} draws", counts[k]);
            }
        }
    }

    fn small_setup(seed: u64) -> (NetworkGenome, EnvironmentSet) {
        let mut rng = rng_from_seed(seed);
        let g = genome(12, ArityMode::Fixed(2), &mut rng);
        let envs = EnvironmentSet::generate(10, 2, 1, 0.0, &mut rng).unwrap();
        (g, envs)
    }

    #[test]
    fn zero_generations_records_initial_only() {
        let (g, envs) = small_setup(9);
        let config = HillclimberConfig { generations: 0, ..Default::default() };
        let record = run_hillclimber(&g, &envs, &config, "l0").unwrap();
        assert_eq!(record.samples.len(), 1);
        assert_eq!(record.samples[0].generation, 0);
        assert_eq!(record.final_genome, g);
    }

    #[test]
    fn runs_are_deterministic_and_monotone() {
        let (g, envs) = small_setup(10);
        let config = HillclimberConfig { generations: 300, record_stride: 1, seed: 11, ..Default::default() };
        let a = run_hillclimber(&g, &envs, &config, "l0").unwrap();
        let b = run_hillclimber(&g, &envs, &config, "l0").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples.len(), 301);
        assert!(a.samples.windows(2).all(|w| w[1].fitness >= w[0].fitness));
        assert!(a.samples.iter().all(|s| s.size >= 12));
    }

    #[test]
    fn thinned_series_keeps_last_generation() {
        let (g, envs) = small_setup(12);
        let config = HillclimberConfig { generations: 25, record_stride: 10, seed: 1, ..Default::default() };
        let record = run_hillclimber(&g, &envs, &config, "l0").unwrap();
        let gens: Vec<usize> = record.samples.iter().map(|s| s.generation).collect();
        assert_eq!(gens, vec![0, 10, 20, 25]);
    }

    #[test]
    fn evolvable_arity_stays_in_range() {
        let mut rng = rng_from_seed(13);
        let g = genome(12, ArityMode::Uniform { min: 2, max: 4 }, &mut rng);
        let envs = EnvironmentSet::generate(10, 1, 1, 0.0, &mut rng).unwrap();
        let config = HillclimberConfig {
            generations: 400,
            evolvable_arity: true,
            mutation: MutationSettings { arity_range: (2, 4), ..Default::default() },
            seed: 14,
            ..Default::default()
        };
        let record = run_hillclimber(&g, &envs, &config, "l0").unwrap();
        for s in &record.samples {
            assert_eq!(s.arity_histogram[0] + s.arity_histogram[4], 0);
        }
    }

    #[test]
    fn run_csv_round_trip() {
        let (g, envs) = small_setup(15);
        let config = HillclimberConfig { generations: 50, record_stride: 5, seed: 2, ..Default::default() };
        let record = run_hillclimber(&g, &envs, &config, "l0").unwrap();
        let mut buf = Vec::new();
        record.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("generation,fitness,R,b1,b2,b3,b4,b5\n"));
        assert_eq!(RunRecord::read_csv(&buf[..]).unwrap(), record.samples);
    }

    fn any_kind(evolvable: bool) -> impl Strategy<Value = MutationKind> {
        let kinds = MutationKind::enabled(evolvable).to_vec();
        (0..kinds.len()).prop_map(move |i| kinds[i])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn mutation_sequences_preserve_invariants(
            seed in any::<u64>(),
            evolvable in any::<bool>(),
            kinds in prop::collection::vec(any_kind(true), 1..60),
        ) {
            let mut rng = rng_from_seed(seed);
            let arity = if evolvable { ArityMode::Uniform { min: 1, max: 5 } } else { ArityMode::Fixed(3) };
            let mut g = genome(12, arity, &mut rng);
            for kind in kinds {
                let kind = if !evolvable && kind == MutationKind::AlterArity { MutationKind::AlterFunction } else { kind };
                match mutate(&g, kind, &MutationSettings::default(), &mut rng) {
                    Ok(child) => g = child,
                    Err(Error::NoDeletableNode) => prop_assert_eq!(g.len(), 12),
                    Err(e) => return Err(TestCaseError::fail(e.to_string())),
                }
                prop_assert!(g.validate().is_ok());
                prop_assert!(g.len() >= 12);
                if !evolvable {
                    prop_assert!(g.nodes().iter().all(|n| n.function.arity() == 3));
                }
            }
        }
    }
}

//! Synchronous random Boolean networks.
//!
//! A [`NetworkGenome`] is the full heritable description of a network: per
//! node a Boolean function, an ordered list of source nodes and a role. The
//! first `input_count` nodes are input-sensitive, the next `trait_count`
//! nodes are traits, and every other node is plain.
//!
//! Truth tables are indexed by the source bits read as an unsigned binary
//! number with the first connection as the most significant bit.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported node arity.
pub const MAX_ARITY: usize = 5;

/// Boolean update function of a single node, stored as a packed truth table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "FunctionRepr", into = "FunctionRepr")]
pub struct BooleanFunction {
    arity: usize,
    table: u32,
}

#[derive(Serialize, Deserialize)]
struct FunctionRepr {
    arity: usize,
    table: String,
}

impl TryFrom<FunctionRepr> for BooleanFunction {
    type Error = Error;

    fn try_from(repr: FunctionRepr) -> Result<Self> {
        let bits: Vec<bool> = repr
            .table
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidParameter(format!(
                    "truth table character {other:?}"
                ))),
            })
            .collect::<Result<_>>()?;
        let f = BooleanFunction::from_table(&bits)?;
        if f.arity != repr.arity {
            return Err(Error::InvalidParameter(format!(
                "arity {} does not match table length {}",
                repr.arity,
                bits.len()
            )));
        }
        Ok(f)
    }
}

impl From<BooleanFunction> for FunctionRepr {
    fn from(f: BooleanFunction) -> Self {
        FunctionRepr {
            arity: f.arity,
            table: f
                .table()
                .into_iter()
                .map(|b| if b { '1' } else { '0' })
                .collect(),
        }
    }
}

impl BooleanFunction {
    /// Builds a function from its truth table; the length must be `2^arity`.
    pub fn from_table(table: &[bool]) -> Result<Self> {
        let arity = (1..=MAX_ARITY)
            .find(|&b| 1usize << b == table.len())
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "truth table length {} is not 2^B for B in 1..={MAX_ARITY}",
                    table.len()
                ))
            })?;
        let packed = table
            .iter()
            .enumerate()
            .fold(0u32, |acc, (i, &b)| acc | (u32::from(b) << i));
        Ok(BooleanFunction {
            arity,
            table: packed,
        })
    }

    pub fn random<R: Rng + ?Sized>(arity: usize, rng: &mut R) -> Result<Self> {
        check_arity(arity)?;
        let mask = table_mask(arity);
        Ok(BooleanFunction {
            arity,
            table: rng.random::<u32>() & mask,
        })
    }

    /// The function that outputs `value` for every input.
    pub fn constant(arity: usize, value: bool) -> Result<Self> {
        check_arity(arity)?;
        Ok(BooleanFunction {
            arity,
            table: if value { table_mask(arity) } else { 0 },
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn table_len(&self) -> usize {
        1 << self.arity
    }

    pub fn table(&self) -> Vec<bool> {
        (0..self.table_len()).map(|i| self.output(i)).collect()
    }

    /// Output for the input tuple encoded as `index`.
    #[inline]
    pub fn output(&self, index: usize) -> bool {
        (self.table >> index) & 1 == 1
    }

    pub fn with_flipped(&self, index: usize) -> Self {
        debug_assert!(index < self.table_len());
        BooleanFunction {
            arity: self.arity,
            table: self.table ^ (1 << index),
        }
    }

    pub(crate) fn packed(&self) -> u32 {
        self.table
    }

    pub(crate) fn from_packed(arity: usize, table: u32) -> Self {
        debug_assert!(table & !table_mask(arity) == 0);
        BooleanFunction { arity, table }
    }
}

fn table_mask(arity: usize) -> u32 {
    if arity >= 5 {
        u32::MAX
    } else {
        (1u32 << (1 << arity)) - 1
    }
}

fn check_arity(arity: usize) -> Result<()> {
    if (1..=MAX_ARITY).contains(&arity) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "arity {arity} outside 1..={MAX_ARITY}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// First connection carries an environmental input bit when one is applied.
    Input,
    /// State is read as an NK trait.
    Trait,
    Plain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub function: BooleanFunction,
    pub connections: Vec<usize>,
    pub role: Role,
}

/// How arities are assigned to freshly generated nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArityMode {
    Fixed(usize),
    /// Uniform over the inclusive range.
    Uniform { min: usize, max: usize },
}

impl ArityMode {
    fn validate(&self) -> Result<()> {
        match *self {
            ArityMode::Fixed(b) => check_arity(b),
            ArityMode::Uniform { min, max } => {
                check_arity(min)?;
                check_arity(max)?;
                if min > max {
                    return Err(Error::InvalidParameter(format!(
                        "empty arity range {min}..={max}"
                    )));
                }
                Ok(())
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match *self {
            ArityMode::Fixed(b) => b,
            ArityMode::Uniform { min, max } => rng.random_range(min..=max),
        }
    }
}

/// Heritable description of a Boolean network with input and trait roles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkGenome {
    nodes: Vec<NodeSpec>,
    input_count: usize,
    trait_count: usize,
}

impl NetworkGenome {
    /// Assembles a genome from explicit nodes, checking every invariant.
    pub fn new(nodes: Vec<NodeSpec>, input_count: usize, trait_count: usize) -> Result<Self> {
        let genome = NetworkGenome {
            nodes,
            input_count,
            trait_count,
        };
        genome.validate()?;
        Ok(genome)
    }

    /// Builds a genome and re-derives node roles from their positions.
    pub(crate) fn from_parts_unchecked(
        mut nodes: Vec<NodeSpec>,
        input_count: usize,
        trait_count: usize,
    ) -> Self {
        for (i, node) in nodes.iter_mut().enumerate() {
            node.role = role_for(i, input_count, trait_count);
        }
        NetworkGenome {
            nodes,
            input_count,
            trait_count,
        }
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    #[cfg(test)]
    pub(crate) fn into_nodes(self) -> Vec<NodeSpec> {
        self.nodes
    }

    /// Number of nodes R.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn input_count(&self) -> usize {
        self.input_count
    }

    pub fn trait_count(&self) -> usize {
        self.trait_count
    }

    /// Input and trait nodes; these occupy indices `0..protected_count()`.
    pub fn protected_count(&self) -> usize {
        self.input_count + self.trait_count
    }

    pub fn trait_range(&self) -> std::ops::Range<usize> {
        self.input_count..self.input_count + self.trait_count
    }

    /// Count of nodes per arity; bin `b - 1` holds arity `b`.
    pub fn arity_histogram(&self) -> [usize; MAX_ARITY] {
        let mut hist = [0; MAX_ARITY];
        for node in &self.nodes {
            hist[node.function.arity() - 1] += 1;
        }
        hist
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.nodes.len();
        if r == 0 || r < self.protected_count() {
            return Err(Error::InvalidParameter(format!(
                "genome has {r} nodes but needs at least max(1, I + N) = {}",
                self.protected_count().max(1)
            )));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.connections.len() != node.function.arity() {
                return Err(Error::InvalidParameter(format!(
                    "node {i}: {} connections for arity {}",
                    node.connections.len(),
                    node.function.arity()
                )));
            }
            if let Some(&c) = node.connections.iter().find(|&&c| c >= r) {
                return Err(Error::InvalidParameter(format!(
                    "node {i}: connection to missing node {c}"
                )));
            }
            let expected = role_for(i, self.input_count, self.trait_count);
            if node.role != expected {
                return Err(Error::InvalidParameter(format!(
                    "node {i}: role {:?}, expected {expected:?}",
                    node.role
                )));
            }
        }
        Ok(())
    }

    /// Synchronous update of every node from `current` into `next`.
    ///
    /// With `input` supplied, input node `k` reads `input[k]` in place of the
    /// source of its first connection. Slices must already have length R and
    /// `input` length I.
    #[inline]
    pub fn step_into(&self, current: &[bool], next: &mut [bool], input: Option<&[bool]>) {
        for (i, (node, out)) in self.nodes.iter().zip(next.iter_mut()).enumerate() {
            let (first, rest) = node.connections.split_first().expect("arity >= 1");
            let lead = match input {
                Some(bits) if i < self.input_count => bits[i],
                _ => current[*first],
            };
            let index = rest
                .iter()
                .fold(usize::from(lead), |acc, &c| (acc << 1) | usize::from(current[c]));
            *out = node.function.output(index);
        }
    }

    /// One synchronous update with dimension checks.
    pub fn step(&self, state: &NetworkState, input: Option<&[bool]>) -> Result<NetworkState> {
        self.check_state(state)?;
        self.check_input(input)?;
        let mut next = vec![false; self.len()];
        self.step_into(&state.bits, &mut next, input);
        Ok(NetworkState { bits: next })
    }

    pub(crate) fn check_state(&self, state: &NetworkState) -> Result<()> {
        if state.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: state.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_input(&self, input: Option<&[bool]>) -> Result<()> {
        match input {
            Some(bits) if bits.len() != self.input_count => Err(Error::DimensionMismatch {
                expected: self.input_count,
                found: bits.len(),
            }),
            _ => Ok(()),
        }
    }
}

pub(crate) fn role_for(index: usize, input_count: usize, trait_count: usize) -> Role {
    if index < input_count {
        Role::Input
    } else if index < input_count + trait_count {
        Role::Trait
    } else {
        Role::Plain
    }
}

/// Generates a random network of `r` nodes.
///
/// Truth-table bits are independent fair coins and every connection is
/// uniform over all nodes, the node itself and repeats included.
pub fn random_network<R: Rng + ?Sized>(
    r: usize,
    arity: ArityMode,
    input_count: usize,
    trait_count: usize,
    rng: &mut R,
) -> Result<NetworkGenome> {
    arity.validate()?;
    if r == 0 || r < input_count + trait_count {
        return Err(Error::InvalidParameter(format!(
            "R = {r} must be at least max(1, I + N) = {}",
            (input_count + trait_count).max(1)
        )));
    }
    let nodes = (0..r)
        .map(|i| {
            let b = arity.sample(rng);
            let function = BooleanFunction::random(b, rng)?;
            let connections = (0..b).map(|_| rng.random_range(0..r)).collect();
            Ok(NodeSpec {
                function,
                connections,
                role: role_for(i, input_count, trait_count),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NetworkGenome {
        nodes,
        input_count,
        trait_count,
    })
}

/// Full network state, one bit per node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NetworkState {
    bits: Vec<bool>,
}

impl NetworkState {
    pub fn new(bits: Vec<bool>) -> Self {
        NetworkState { bits }
    }

    pub fn zeros(r: usize) -> Self {
        NetworkState {
            bits: vec![false; r],
        }
    }

    pub fn random<R: Rng + ?Sized>(r: usize, rng: &mut R) -> Self {
        NetworkState {
            bits: (0..r).map(|_| rng.random()).collect(),
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

impl From<Vec<bool>> for NetworkState {
    fn from(bits: Vec<bool>) -> Self {
        NetworkState { bits }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttractorReport {
    /// Steps taken before the trajectory first enters the cycle.
    pub transient_length: usize,
    /// Number of distinct states on the cycle.
    pub cycle_length: usize,
}

/// Default step cap for attractor searches: `10 * 2^min(R, 20)`, at most 10^6.
pub fn default_max_steps(r: usize) -> usize {
    (10usize << r.min(20)).min(1_000_000)
}

fn pack(bits: &[bool]) -> Box<[u64]> {
    let mut words = vec![0u64; bits.len().div_ceil(64)];
    for (i, &b) in bits.iter().enumerate() {
        words[i / 64] |= u64::from(b) << (i % 64);
    }
    words.into_boxed_slice()
}

/// Follows the trajectory from `start` under a fixed input pattern until a
/// state repeats.
///
/// Returns `Ok(None)` when no state repeats within `max_steps` updates.
pub fn find_attractor(
    genome: &NetworkGenome,
    start: &NetworkState,
    input: Option<&[bool]>,
    max_steps: usize,
) -> Result<Option<AttractorReport>> {
    if max_steps == 0 {
        return Err(Error::InvalidParameter("max_steps must be at least 1".into()));
    }
    genome.check_state(start)?;
    genome.check_input(input)?;

    let mut seen: HashMap<Box<[u64]>, usize> = HashMap::new();
    let mut current = start.bits.clone();
    let mut next = vec![false; current.len()];
    seen.insert(pack(&current), 0);
    for t in 1..=max_steps {
        genome.step_into(&current, &mut next, input);
        std::mem::swap(&mut current, &mut next);
        let key = pack(&current);
        if let Some(&first) = seen.get(&key) {
            return Ok(Some(AttractorReport {
                transient_length: first,
                cycle_length: t - first,
            }));
        }
        seen.insert(key, t);
    }
    Ok(None)
}

/// Mean with min/max envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Envelope {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        Envelope {
            mean: values.iter().sum::<f64>() / n,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Per-arity dynamics summary over many fresh random networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorStatistics {
    pub nodes: usize,
    pub arity: usize,
    pub runs: usize,
    pub update_cycles: usize,
    pub max_steps: usize,
    /// Per-run attractor cycle length. A run whose search hit `max_steps`
    /// contributes `max_steps`, a lower bound on its true cycle length.
    pub cycle_lengths: Vec<f64>,
    /// Runs whose attractor search exhausted `max_steps`.
    pub censored: usize,
    /// Per-run number of distinct states among those visited during the
    /// first `update_cycles` updates.
    pub distinct_states: Vec<f64>,
    pub cycle_length: Envelope,
    pub distinct: Envelope,
}

/// Builds `runs` random networks without inputs or traits, runs each from a
/// random start for `update_cycles` updates and then searches for the
/// attractor the trajectory has reached.
pub fn attractor_statistics<R: Rng + ?Sized>(
    r: usize,
    arity: usize,
    runs: usize,
    update_cycles: usize,
    max_steps: usize,
    rng: &mut R,
) -> Result<AttractorStatistics> {
    if runs == 0 {
        return Err(Error::InvalidParameter("runs must be at least 1".into()));
    }
    let mut cycle_lengths = Vec::with_capacity(runs);
    let mut distinct_states = Vec::with_capacity(runs);
    let mut censored = 0;
    for _ in 0..runs {
        let genome = random_network(r, ArityMode::Fixed(arity), 0, 0, rng)?;
        let mut current = NetworkState::random(r, rng).bits;
        let mut next = vec![false; r];
        let mut visited = std::collections::HashSet::with_capacity(update_cycles);
        for _ in 0..update_cycles {
            genome.step_into(&current, &mut next, None);
            std::mem::swap(&mut current, &mut next);
            visited.insert(pack(&current));
        }
        distinct_states.push(visited.len() as f64);
        match find_attractor(&genome, &NetworkState::new(current), None, max_steps)? {
            Some(report) => cycle_lengths.push(report.cycle_length as f64),
            None => {
                censored += 1;
                cycle_lengths.push(max_steps as f64);
            }
        }
    }
    Ok(AttractorStatistics {
        nodes: r,
        arity,
        runs,
        update_cycles,
        max_steps,
        cycle_length: Envelope::of(&cycle_lengths),
        distinct: Envelope::of(&distinct_states),
        cycle_lengths,
        censored,
        distinct_states,
    })
}

//! Random Boolean networks whose trait nodes are scored on NK fitness
//! landscapes, evolved by a mutation hillclimber.
//!
//! The pieces, bottom up:
//!
//! - [`network`]: genomes, synchronous updates, attractor search.
//! - [`landscape`]: NK landscapes and sets of related environments.
//! - [`eval`]: running a genome under an input schedule and scoring its traits.
//! - [`evolve`]: mutation operators, selection and the hillclimber.
//! - [`analysis`]: Welch's t-test, arity distributions, one-mutant robustness.
//! - [`harness`]: JSON manifests, batch runs and their CSV/JSON outputs.
//!
//! All randomness flows from explicit `u64` seeds through [`rng::derive_seed`].

pub mod analysis;
pub mod error;
pub mod eval;
pub mod evolve;
pub mod harness;
pub mod landscape;
pub mod network;
pub mod oracle;
pub mod rng;
pub mod validate;

pub use analysis::{one_mutant_robustness, welch_t_test, RobustnessReport, TTestResult};
pub use error::{Error, Result};
pub use eval::{evaluate, EvaluationConfig, InputSchedule};
pub use evolve::{
    mutate, run_hillclimber, select, FunctionMutation, GenerationSample, HillclimberConfig, MutationKind,
    MutationSettings, RunRecord, Selection, SelectionRule,
};
pub use harness::{CellArity, CellKey, ExperimentManifest, ExperimentResults, Metric};
pub use landscape::{EnvironmentSet, Landscape};
pub use network::{
    attractor_statistics, find_attractor, random_network, ArityMode, AttractorReport, AttractorStatistics,
    BooleanFunction, NetworkGenome, NetworkState, NodeSpec, Role, MAX_ARITY,
};
pub use rng::{derive_seed, rng_from_seed, SimRng};

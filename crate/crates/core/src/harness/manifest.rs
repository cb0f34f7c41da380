use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::EvaluationConfig;
use crate::evolve::{FunctionMutation, HillclimberConfig, MutationSettings, SelectionRule};
use crate::landscape::varied_trait_count;
use crate::network::{ArityMode, MAX_ARITY};
use crate::rng::derive_seed;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Counter used in place of a run index when deriving landscape seeds.
const LANDSCAPE_STREAM: u64 = u64::MAX;

/// Connectivity setting of a grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellArity {
    Fixed(usize),
    Evolvable,
}

impl fmt::Display for CellArity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellArity::Fixed(b) => write!(f, "{b}"),
            CellArity::Evolvable => f.write_str("evo"),
        }
    }
}

impl FromStr for CellArity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "evo" => Ok(CellArity::Evolvable),
            _ => s
                .parse()
                .map(CellArity::Fixed)
                .map_err(|_| Error::InvalidParameter(format!("bad B value {s:?}"))),
        }
    }
}

/// One parameter combination of an experiment grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellKey {
    pub arity: CellArity,
    pub k: usize,
    pub v: f64,
}

impl CellKey {
    /// Stable identifier used for seed derivation:
    /// `B << 32 | K << 16 | round(1000 V)`, with B = 0 for evolvable arity.
    /// It depends only on the cell's parameters, so a cell draws the same
    /// seeds whatever grid it appears in.
    pub fn code(&self) -> u64 {
        let b = match self.arity {
            CellArity::Fixed(b) => b as u64,
            CellArity::Evolvable => 0,
        };
        (b << 32) | ((self.k as u64) << 16) | (self.v * 1000.0).round() as u64
    }

    /// Directory name for the cell's files, e.g. `B1_K0_V0`.
    pub fn slug(&self) -> String {
        format!("B{}_K{}_V{}", self.arity, self.k, self.v)
    }

    /// The `K << 16 | round(1000 V)` part of [`CellKey::code`].
    pub fn landscape_code(&self) -> u64 {
        self.code() & 0xFFFF_FFFF
    }

    /// Seed of environment set `landscape`. It ignores B, so cells that
    /// differ only in connectivity evolve on the same landscapes.
    pub fn landscape_seed(&self, master: u64, landscape: usize) -> u64 {
        derive_seed(master, &[self.landscape_code(), landscape as u64, LANDSCAPE_STREAM])
    }

    pub fn run_seed(&self, master: u64, landscape: usize, run: usize) -> u64 {
        derive_seed(master, &[self.code(), landscape as u64, run as u64])
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B={},K={},V={}", self.arity, self.k, self.v)
    }
}

/// Parses `B=1,K=0` or `B=evo,K=2,V=0.5`; V defaults to 0.
impl FromStr for CellKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut arity = None;
        let mut k = None;
        let mut v = 0.0;
        for part in s.split(',') {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter(format!("bad cell component {part:?}")))?;
            let bad = || Error::InvalidParameter(format!("bad value in {part:?}"));
            match name.trim() {
                "B" => arity = Some(value.trim().parse()?),
                "K" => k = Some(value.trim().parse().map_err(|_| bad())?),
                "V" => v = value.trim().parse().map_err(|_| bad())?,
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown cell parameter {other:?}"
                    )))
                }
            }
        }
        match (arity, k) {
            (Some(arity), Some(k)) => Ok(CellKey { arity, k, v }),
            _ => Err(Error::InvalidParameter(format!("cell {s:?} needs B and K"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterGrid {
    /// Fixed connectivities to sweep; ignored when `evolvable_arity` is set.
    #[serde(default)]
    pub arities: Vec<usize>,
    #[serde(default)]
    pub evolvable_arity: bool,
    #[serde(default = "default_arity_range")]
    pub arity_range: (usize, usize),
    pub ks: Vec<usize>,
    #[serde(default = "default_vs")]
    pub vs: Vec<f64>,
    /// One landscape per input pattern (E = 2^I) instead of one shared landscape.
    #[serde(default)]
    pub multi_environment: bool,
}

fn default_arity_range() -> (usize, usize) {
    (1, MAX_ARITY)
}

fn default_vs() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSettings {
    pub cycles: usize,
    pub trials: usize,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        EvaluationSettings {
            cycles: 100,
            trials: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "fitness")]
    Fitness,
    #[serde(rename = "R")]
    Size,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Fitness => "fitness",
            Metric::Size => "R",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fitness" => Ok(Metric::Fitness),
            "R" | "size" => Ok(Metric::Size),
            _ => Err(Error::InvalidParameter(format!("unknown metric {s:?}"))),
        }
    }
}

/// A Welch test between two cells to include in `stats.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Comparison {
    pub cell_a: String,
    pub cell_b: String,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
}

fn default_metrics() -> Vec<Metric> {
    vec![Metric::Fitness, Metric::Size]
}

/// Seeds, parameter grid and protocol of a batch of hillclimber runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub schema_version: u32,
    pub name: String,
    pub grid: ParameterGrid,
    #[serde(default = "default_traits")]
    pub traits: usize,
    #[serde(default = "default_inputs")]
    pub inputs: usize,
    #[serde(default)]
    pub evaluation: EvaluationSettings,
    pub runs_per_landscape: usize,
    pub landscapes_per_cell: usize,
    pub generations: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    /// Record every generation, overriding `record_stride`.
    #[serde(default)]
    pub full_series: bool,
    #[serde(default)]
    pub function_mutation: FunctionMutation,
    #[serde(default)]
    pub selection: SelectionRule,
    #[serde(default)]
    pub reevaluate_parent: bool,
    #[serde(default)]
    pub comparisons: Vec<Comparison>,
}

fn default_traits() -> usize {
    10
}

fn default_inputs() -> usize {
    2
}

fn default_stride() -> usize {
    10
}

impl ExperimentManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        let manifest: ExperimentManifest = serde_json::from_str(text)
            .map_err(|e| Error::InvalidManifest(e.to_string()))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidManifest(msg));
        if self.schema_version != MANIFEST_SCHEMA_VERSION {
            return bad(format!("unsupported schema version {}", self.schema_version));
        }
        if self.runs_per_landscape == 0 || self.landscapes_per_cell == 0 {
            return bad("runs_per_landscape and landscapes_per_cell must be positive".into());
        }
        if self.traits == 0 {
            return bad("traits must be positive".into());
        }
        if self.record_stride == 0 {
            return bad("record_stride must be positive".into());
        }
        if self.evaluation.trials == 0 {
            return bad("evaluation.trials must be positive".into());
        }
        let patterns = 1usize << self.inputs;
        if self.evaluation.cycles == 0 || self.evaluation.cycles % patterns != 0 {
            return bad(format!(
                "evaluation.cycles = {} must be a positive multiple of 2^inputs = {patterns}",
                self.evaluation.cycles
            ));
        }
        let (lo, hi) = self.grid.arity_range;
        if lo < 1 || hi > MAX_ARITY || lo > hi {
            return bad(format!("arity_range ({lo}, {hi}) outside 1..={MAX_ARITY}"));
        }
        if !self.grid.evolvable_arity {
            if self.grid.arities.is_empty() {
                return bad("grid.arities is empty for a fixed-arity experiment".into());
            }
            if let Some(b) = self.grid.arities.iter().find(|b| !(1..=MAX_ARITY).contains(*b)) {
                return bad(format!("arity {b} outside 1..={MAX_ARITY}"));
            }
        }
        if self.grid.ks.is_empty() || self.grid.vs.is_empty() {
            return bad("grid.ks and grid.vs must be non-empty".into());
        }
        if let Some(k) = self.grid.ks.iter().find(|&&k| k >= self.traits) {
            return bad(format!("K = {k} must be below N = {}", self.traits));
        }
        for &v in &self.grid.vs {
            varied_trait_count(self.traits, v).map_err(|e| Error::InvalidManifest(e.to_string()))?;
            if v != 0.0 && !self.grid.multi_environment {
                return bad(format!("V = {v} requires multi_environment"));
            }
        }
        let cells = self.cells();
        for c in &self.comparisons {
            for name in [&c.cell_a, &c.cell_b] {
                let key: CellKey = name.parse().map_err(|e: Error| Error::InvalidManifest(e.to_string()))?;
                if !cells.contains(&key) {
                    return bad(format!("comparison cell {name} is not in the grid"));
                }
            }
        }
        Ok(())
    }

    /// Grid cells in output order: B, then K, then V.
    pub fn cells(&self) -> Vec<CellKey> {
        let arities: Vec<CellArity> = if self.grid.evolvable_arity {
            vec![CellArity::Evolvable]
        } else {
            self.grid.arities.iter().map(|&b| CellArity::Fixed(b)).collect()
        };
        let mut cells = Vec::new();
        for &arity in &arities {
            for &k in &self.grid.ks {
                for &v in &self.grid.vs {
                    cells.push(CellKey { arity, k, v });
                }
            }
        }
        cells
    }

    pub fn runs_per_cell(&self) -> usize {
        self.runs_per_landscape * self.landscapes_per_cell
    }

    pub fn environments(&self) -> usize {
        if self.grid.multi_environment {
            1 << self.inputs
        } else {
            1
        }
    }

    /// Arity assignment for a cell's initial genomes.
    pub fn arity_mode(&self, cell: &CellKey) -> ArityMode {
        match cell.arity {
            CellArity::Fixed(b) => ArityMode::Fixed(b),
            CellArity::Evolvable => ArityMode::Uniform {
                min: self.grid.arity_range.0,
                max: self.grid.arity_range.1,
            },
        }
    }

    pub fn hillclimber_config(&self, seed: u64) -> HillclimberConfig {
        HillclimberConfig {
            generations: self.generations,
            evolvable_arity: self.grid.evolvable_arity,
            mutation: MutationSettings {
                arity_range: self.grid.arity_range,
                function_mutation: self.function_mutation,
            },
            evaluation: self.evaluation_config(),
            selection: self.selection,
            reevaluate_parent: self.reevaluate_parent,
            record_stride: if self.full_series { 1 } else { self.record_stride },
            seed,
        }
    }

    pub fn evaluation_config(&self) -> EvaluationConfig {
        EvaluationConfig {
            cycles: self.evaluation.cycles,
            trials: self.evaluation.trials,
            multi_environment: self.grid.multi_environment,
        }
    }

    /// Copy restricted to the smallest sub-grid containing the listed cells.
    /// Seeds are unchanged because they derive from cell parameters.
    pub fn restricted_to(&self, cells: &[CellKey]) -> Result<Self> {
        let mut out = self.clone();
        let keep = |c: &CellKey| cells.contains(c);
        let all = self.cells();
        if let Some(missing) = cells.iter().find(|c| !all.contains(c)) {
            return Err(Error::InvalidManifest(format!("cell {missing} is not in the grid")));
        }
        if !self.grid.evolvable_arity {
            out.grid.arities.retain(|&b| all.iter().any(|c| c.arity == CellArity::Fixed(b) && keep(c)));
        }
        out.grid.ks.retain(|&k| all.iter().any(|c| c.k == k && keep(c)));
        out.grid.vs.retain(|&v| all.iter().any(|c| c.v == v && keep(c)));
        let kept = out.cells();
        out.comparisons.retain(|c| {
            [&c.cell_a, &c.cell_b]
                .iter()
                .all(|name| name.parse::<CellKey>().map(|k| kept.contains(&k)).unwrap_or(false))
        });
        Ok(out)
    }
}

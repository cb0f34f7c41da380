//! Running manifests and reading their output trees.
//!
//! Layout under the output directory:
//!
//! ```text
//! manifest.json                     manifest echo with run status
//! summary.csv                       B,K,V,mean_fitness,sd_fitness,mean_R,sd_R,n
//! stats.csv                         cell_a,cell_b,metric,t,df,p
//! cells/<slug>/landscape_<l>.json   environment set l of the cell
//! cells/<slug>/run_<l>_<r>.csv      generation,fitness,R,b1,b2,b3,b4,b5
//! cells/<slug>/run_<l>_<r>.json     run manifest with the final genome
//! ```

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{mean, variance, welch_t_test, TTestResult};
use crate::error::{Error, Result};
use crate::evolve::{run_hillclimber, HillclimberConfig};
use crate::harness::manifest::{CellKey, ExperimentManifest, Metric};
use crate::landscape::EnvironmentSet;
use crate::network::{random_network, NetworkGenome};
use crate::rng::{derive_seed, rng_from_seed};

pub const RUN_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    Partial,
}

/// The manifest as run, written to `manifest.json` in the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEcho {
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    pub cells: Vec<String>,
    pub manifest: ExperimentManifest,
}

/// Everything needed to re-launch or re-analyse a single run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub cell: String,
    pub landscape_index: usize,
    pub run_index: usize,
    /// Seed of the stream that built the initial genome.
    pub run_seed: u64,
    /// Path relative to the experiment output directory.
    pub landscape_file: PathBuf,
    pub parameters: HillclimberConfig,
    pub final_fitness: f64,
    pub final_size: usize,
    pub final_genome: NetworkGenome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    #[serde(rename = "B")]
    pub b: String,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "V")]
    pub v: f64,
    pub mean_fitness: f64,
    pub sd_fitness: f64,
    #[serde(rename = "mean_R")]
    pub mean_size: f64,
    #[serde(rename = "sd_R")]
    pub sd_size: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub cell_a: String,
    pub cell_b: String,
    pub metric: String,
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

impl StatsRow {
    fn new(cell_a: &CellKey, cell_b: &CellKey, metric: Metric, result: Option<TTestResult>) -> Self {
        let (t, df, p) = result
            .map(|r| (r.t_statistic, r.degrees_of_freedom, r.p_value))
            .unwrap_or((f64::NAN, f64::NAN, f64::NAN));
        StatsRow {
            cell_a: cell_a.to_string(),
            cell_b: cell_b.to_string(),
            metric: metric.name().to_string(),
            t,
            df,
            p,
        }
    }
}

pub fn landscape_path(cell: &CellKey, landscape: usize) -> PathBuf {
    Path::new("cells").join(cell.slug()).join(format!("landscape_{landscape}.json"))
}

fn run_stem(cell: &CellKey, landscape: usize, run: usize) -> PathBuf {
    Path::new("cells").join(cell.slug()).join(format!("run_{landscape}_{run}"))
}

/// Builds (or reloads from the manifest's seeds) environment set `l` of `cell`.
pub fn cell_environment(manifest: &ExperimentManifest, cell: &CellKey, landscape: usize) -> Result<EnvironmentSet> {
    let mut rng = rng_from_seed(cell.landscape_seed(manifest.master_seed, landscape));
    EnvironmentSet::generate(manifest.traits, cell.k, manifest.environments(), cell.v, &mut rng)
}

/// Runs one hillclimber job exactly as [`run_experiment`] would.
pub fn run_single(
    manifest: &ExperimentManifest,
    cell: &CellKey,
    envs: &EnvironmentSet,
    landscape: usize,
    run: usize,
) -> Result<RunManifest> {
    let run_seed = cell.run_seed(manifest.master_seed, landscape, run);
    let r_min = manifest.inputs + manifest.traits;
    let initial = random_network(
        r_min,
        manifest.arity_mode(cell),
        manifest.inputs,
        manifest.traits,
        &mut rng_from_seed(run_seed),
    )?;
    let config = manifest.hillclimber_config(derive_seed(run_seed, &[1]));
    let landscape_file = landscape_path(cell, landscape);
    let record = run_hillclimber(&initial, envs, &config, &landscape_file.to_string_lossy())?;
    let run_manifest = RunManifest {
        schema_version: RUN_SCHEMA_VERSION,
        cell: cell.to_string(),
        landscape_index: landscape,
        run_index: run,
        run_seed,
        landscape_file,
        parameters: config,
        final_fitness: record.final_fitness,
        final_size: record.final_genome.len(),
        final_genome: record.final_genome.clone(),
    };
    write_run_files(&manifest.output_dir, cell, landscape, run, &record, &run_manifest)?;
    Ok(run_manifest)
}

fn write_run_files(
    out: &Path,
    cell: &CellKey,
    landscape: usize,
    run: usize,
    record: &crate::evolve::RunRecord,
    run_manifest: &RunManifest,
) -> Result<()> {
    let stem = out.join(run_stem(cell, landscape, run));
    let csv_path = stem.with_extension("csv");
    let file = File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    record
        .write_csv(BufWriter::new(file))
        .map_err(|e| Error::csv(&csv_path, e))?;
    write_json(&stem.with_extension("json"), run_manifest)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

pub fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(!rows.is_empty())
        .from_writer(BufWriter::new(file));
    if rows.is_empty() {
        w.write_record(header).map_err(|e| Error::csv(path, e))?;
    }
    for row in rows {
        w.serialize(row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    r.deserialize()
        .collect::<csv::Result<Vec<T>>>()
        .map_err(|e| Error::csv(path, e))
}

pub const SUMMARY_HEADER: [&str; 8] = ["B", "K", "V", "mean_fitness", "sd_fitness", "mean_R", "sd_R", "n"];
pub const STATS_HEADER: [&str; 6] = ["cell_a", "cell_b", "metric", "t", "df", "p"];

/// Final-generation results of a finished experiment, grouped by cell.
#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub dir: PathBuf,
    pub manifest: ExperimentManifest,
    pub cells: Vec<(CellKey, Vec<RunManifest>)>,
}

impl ExperimentResults {
    /// Reads `manifest.json` and every run manifest under `dir`.
    pub fn load(dir: &Path) -> Result<Self> {
        let echo: ManifestEcho = read_json(&dir.join("manifest.json"))?;
        echo.manifest.validate()?;
        let cells = echo
            .manifest
            .cells()
            .into_iter()
            .map(|cell| {
                let mut runs = Vec::with_capacity(echo.manifest.runs_per_cell());
                for l in 0..echo.manifest.landscapes_per_cell {
                    for r in 0..echo.manifest.runs_per_landscape {
                        let path = dir.join(run_stem(&cell, l, r)).with_extension("json");
                        let run: RunManifest = read_json(&path)?;
                        run.final_genome.validate()?;
                        runs.push(run);
                    }
                }
                Ok((cell, runs))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ExperimentResults {
            dir: dir.to_path_buf(),
            manifest: echo.manifest,
            cells,
        })
    }

    pub fn runs(&self, cell: &CellKey) -> Option<&[RunManifest]> {
        self.cells.iter().find(|(c, _)| c == cell).map(|(_, runs)| runs.as_slice())
    }

    pub fn values(&self, cell: &CellKey, metric: Metric) -> Option<Vec<f64>> {
        self.runs(cell).map(|runs| metric_values(runs, metric))
    }

    /// Welch test of `metric` between two cells.
    pub fn compare(&self, a: &CellKey, b: &CellKey, metric: Metric) -> Result<StatsRow> {
        let missing = |c: &CellKey| Error::InvalidParameter(format!("cell {c} not found in {}", self.dir.display()));
        let va = self.values(a, metric).ok_or_else(|| missing(a))?;
        let vb = self.values(b, metric).ok_or_else(|| missing(b))?;
        Ok(StatsRow::new(a, b, metric, welch_t_test(&va, &vb).ok()))
    }

    pub fn environment(&self, run: &RunManifest) -> Result<EnvironmentSet> {
        EnvironmentSet::load(&self.dir.join(&run.landscape_file))
    }
}

fn metric_values(runs: &[RunManifest], metric: Metric) -> Vec<f64> {
    runs.iter()
        .map(|r| match metric {
            Metric::Fitness => r.final_fitness,
            Metric::Size => r.final_size as f64,
        })
        .collect()
}

fn sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        f64::NAN
    } else {
        variance(values).sqrt()
    }
}

fn summary_row(cell: &CellKey, runs: &[RunManifest]) -> SummaryRow {
    let fitness = metric_values(runs, Metric::Fitness);
    let size = metric_values(runs, Metric::Size);
    SummaryRow {
        b: cell.arity.to_string(),
        k: cell.k,
        v: cell.v,
        mean_fitness: mean(&fitness),
        sd_fitness: sd(&fitness),
        mean_size: mean(&size),
        sd_size: sd(&size),
        n: runs.len(),
    }
}

/// Runs every cell of the manifest and writes the output tree.
///
/// Runs execute in parallel; each writes only its own files and the summary
/// files are written afterwards in grid order, so the output tree depends on
/// the manifest alone.
pub fn run_experiment(manifest: &ExperimentManifest) -> Result<ExperimentResults> {
    manifest.validate()?;
    let out = &manifest.output_dir;
    let cells = manifest.cells();
    let mut environments = Vec::with_capacity(cells.len());
    for cell in &cells {
        let dir = out.join("cells").join(cell.slug());
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let mut sets = Vec::with_capacity(manifest.landscapes_per_cell);
        for l in 0..manifest.landscapes_per_cell {
            let envs = cell_environment(manifest, cell, l)?;
            envs.save(&out.join(landscape_path(cell, l)))?;
            sets.push(envs);
        }
        environments.push(sets);
    }

    let jobs: Vec<(usize, usize, usize)> = (0..cells.len())
        .flat_map(|c| {
            (0..manifest.landscapes_per_cell)
                .flat_map(move |l| (0..manifest.runs_per_landscape).map(move |r| (c, l, r)))
        })
        .collect();
    let outcomes: Vec<Result<RunManifest>> = jobs
        .par_iter()
        .map(|&(c, l, r)| run_single(manifest, &cells[c], &environments[c][l], l, r))
        .collect();

    let mut echo = ManifestEcho {
        status: RunStatus::Complete,
        error: None,
        cells: cells.iter().map(|c| c.to_string()).collect(),
        manifest: manifest.clone(),
    };
    let mut runs_by_cell: Vec<Vec<RunManifest>> = vec![Vec::new(); cells.len()];
    let mut first_error = None;
    for (&(c, _, _), outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok(run) => runs_by_cell[c].push(run),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_error {
        echo.status = RunStatus::Partial;
        echo.error = Some(e.to_string());
        write_json(&out.join("manifest.json"), &echo)?;
        return Err(e);
    }
    write_json(&out.join("manifest.json"), &echo)?;

    let summary: Vec<SummaryRow> = cells
        .iter()
        .zip(&runs_by_cell)
        .map(|(cell, runs)| summary_row(cell, runs))
        .collect();
    write_csv_rows(&out.join("summary.csv"), &summary, &SUMMARY_HEADER)?;

    let results = ExperimentResults {
        dir: out.clone(),
        manifest: manifest.clone(),
        cells: cells.into_iter().zip(runs_by_cell).collect(),
    };
    let mut stats = Vec::new();
    for comparison in &manifest.comparisons {
        let a: CellKey = comparison.cell_a.parse()?;
        let b: CellKey = comparison.cell_b.parse()?;
        for &metric in &comparison.metrics {
            stats.push(results.compare(&a, &b, metric)?);
        }
    }
    write_csv_rows(&out.join("stats.csv"), &stats, &STATS_HEADER)?;
    Ok(results)
}

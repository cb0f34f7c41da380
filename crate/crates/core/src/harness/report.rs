//! Attractor sweeps and robustness scans over stored runs.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{one_mutant_robustness, RobustnessReport};
use crate::error::Result;
use crate::harness::experiment::{write_csv_rows, ExperimentResults};
use crate::harness::manifest::CellKey;
use crate::network::{attractor_statistics, AttractorStatistics};
use crate::rng::{derive_seed, rng_from_seed};

pub const ATTRACTOR_HEADER: [&str; 9] = [
    "B",
    "runs",
    "mean_cycle",
    "min_cycle",
    "max_cycle",
    "censored",
    "mean_distinct",
    "min_distinct",
    "max_distinct",
];

pub const ROBUSTNESS_HEADER: [&str; 5] = ["cell", "neighbors", "genomes", "alter_function", "rewire_connection"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorRow {
    #[serde(rename = "B")]
    pub b: usize,
    pub runs: usize,
    pub mean_cycle: f64,
    pub min_cycle: f64,
    pub max_cycle: f64,
    pub censored: usize,
    pub mean_distinct: f64,
    pub min_distinct: f64,
    pub max_distinct: f64,
}

impl From<&AttractorStatistics> for AttractorRow {
    fn from(s: &AttractorStatistics) -> Self {
        AttractorRow {
            b: s.arity,
            runs: s.runs,
            mean_cycle: s.cycle_length.mean,
            min_cycle: s.cycle_length.min,
            max_cycle: s.cycle_length.max,
            censored: s.censored,
            mean_distinct: s.distinct.mean,
            min_distinct: s.distinct.min,
            max_distinct: s.distinct.max,
        }
    }
}

/// Attractor statistics for each arity; arity `b` draws from
/// `derive_seed(seed, [b])`.
pub fn attractor_sweep(
    nodes: usize,
    arities: &[usize],
    runs: usize,
    update_cycles: usize,
    max_steps: usize,
    seed: u64,
) -> Result<Vec<AttractorStatistics>> {
    arities
        .par_iter()
        .map(|&b| {
            let mut rng = rng_from_seed(derive_seed(seed, &[b as u64]));
            attractor_statistics(nodes, b, runs, update_cycles, max_steps, &mut rng)
        })
        .collect()
}

pub fn write_attractor_csv(path: &Path, stats: &[AttractorStatistics]) -> Result<()> {
    let rows: Vec<AttractorRow> = stats.iter().map(AttractorRow::from).collect();
    write_csv_rows(path, &rows, &ATTRACTOR_HEADER)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub cell: String,
    pub neighbors: usize,
    pub genomes: usize,
    pub alter_function: usize,
    pub rewire_connection: usize,
}

/// One-mutant robustness of every final genome in the listed cells (all
/// cells when `cells` is empty). The genome of run `r` on landscape `l`
/// draws from `derive_seed(seed, [cell code, l, r])`.
pub fn robustness_scan(
    results: &ExperimentResults,
    cells: &[CellKey],
    neighbors: usize,
    seed: u64,
) -> Result<Vec<(CellKey, RobustnessReport)>> {
    let config = results.manifest.evaluation_config();
    results
        .cells
        .iter()
        .filter(|(cell, _)| cells.is_empty() || cells.contains(cell))
        .map(|(cell, runs)| {
            let reports = runs
                .par_iter()
                .map(|run| {
                    let envs = results.environment(run)?;
                    let s = derive_seed(seed, &[cell.code(), run.landscape_index as u64, run.run_index as u64]);
                    one_mutant_robustness(&run.final_genome, &envs, &config, neighbors, &mut rng_from_seed(s))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut total = RobustnessReport::default();
            for r in &reports {
                total.merge(r);
            }
            Ok((*cell, total))
        })
        .collect()
}

pub fn write_robustness_csv(path: &Path, reports: &[(CellKey, RobustnessReport)]) -> Result<()> {
    let rows: Vec<RobustnessRow> = reports
        .iter()
        .map(|(cell, r)| RobustnessRow {
            cell: cell.to_string(),
            neighbors: r.neighbor_count,
            genomes: r.genomes(),
            alter_function: r.alter_function_worst,
            rewire_connection: r.rewire_connection_worst,
        })
        .collect();
    write_csv_rows(path, &rows, &ROBUSTNESS_HEADER)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::experiment::{read_csv_rows, run_experiment};
    use crate::harness::manifest::ExperimentManifest;

    #[test]
    fn sweep_rows_and_determinism() {
        let a = attractor_sweep(12, &[1, 2, 3], 5, 50, 10_000, 9).unwrap();
        let b = attractor_sweep(12, &[1, 2, 3], 5, 50, 10_000, 9).unwrap();
        assert_eq!(a, b);
        // Each arity's stream is independent of which others are swept.
        let solo = attractor_sweep(12, &[2], 5, 50, 10_000, 9).unwrap();
        assert_eq!(solo[0], a[1]);

        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("fig1.csv");
        write_attractor_csv(&path, &a).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("B,runs,mean_cycle,min_cycle,max_cycle,censored,mean_distinct,min_distinct,max_distinct\n"));
        let rows: Vec<AttractorRow> = read_csv_rows(&path).unwrap();
        assert_eq!(rows.iter().map(|r| r.b).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert!(rows.iter().all(|r| r.min_cycle <= r.mean_cycle && r.mean_cycle <= r.max_cycle));
    }

    #[test]
    fn scan_counts_every_genome() {
        let tmp = tempfile::tempdir().unwrap();
        let m = ExperimentManifest::from_json(&format!(
            r#"{{
                "schema_version": 1,
                "name": "robust",
                "grid": {{ "arities": [2], "ks": [0, 2] }},
                "runs_per_landscape": 3,
                "landscapes_per_cell": 1,
                "generations": 5,
                "master_seed": 3,
                "output_dir": {:?}
            }}"#,
            tmp.path().to_str().unwrap()
        ))
        .unwrap();
        let results = run_experiment(&m).unwrap();
        let all = robustness_scan(&results, &[], 4, 1).unwrap();
        assert_eq!(all.len(), 2);
        assert!(all.iter().all(|(_, r)| r.genomes() == 3 && r.neighbor_count == 4));
        let one = robustness_scan(&results, &[all[1].0], 4, 1).unwrap();
        assert_eq!(one, vec![all[1]]);

        let path = tmp.path().join("robustness.csv");
        write_robustness_csv(&path, &all).unwrap();
        let rows: Vec<RobustnessRow> = read_csv_rows(&path).unwrap();
        assert_eq!(rows[1].cell, "B=2,K=2,V=0");
    }
}

//! `rbnk`: run experiment grids, attractor sweeps, robustness scans and
//! statistics from the command line.
//!
//! Exit status is 0 on success, 1 on usage errors (bad flags, invalid
//! manifests, unknown cells) and 2 when a run fails.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use rbnk_core::harness::{
    attractor_sweep, robustness_scan, run_experiment, write_attractor_csv, write_robustness_csv, ExperimentResults,
    StatsRow,
};
use rbnk_core::validate::run_validation;
use rbnk_core::{CellKey, ExperimentManifest, Metric};

const FIG3_DESK: &str = include_str!("../manifests/fig3_desk.json");
const FIG4_DESK: &str = include_str!("../manifests/fig4_desk.json");
const FIG5_DESK: &str = include_str!("../manifests/fig5_desk.json");

#[derive(Parser, Debug)]
#[command(name = "rbnk", version, about = "Random Boolean networks evolved on NK landscapes")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Master seed; overrides the manifest's.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the manifest's.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Experiment manifest (JSON). Defaults to the built-in desk-scale one.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Runs per landscape for experiments, networks per B for `fig1`.
    #[arg(long, global = true)]
    runs: Option<usize>,
    /// Hillclimber generations per run.
    #[arg(long, global = true)]
    generations: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// No progress messages on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Attractor cycle lengths of random networks for each B.
    Fig1 {
        /// Network size.
        #[arg(long = "R", default_value_t = 100)]
        nodes: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        arities: Vec<usize>,
        /// Updates run before the attractor search; distinct states are counted over these.
        #[arg(long, default_value_t = 100)]
        cycles: usize,
        /// Attractor search cap; longer cycles are reported at the cap.
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
    },
    /// Fixed-B grid.
    Evolve(GridArgs),
    /// Evolvable-B runs.
    EvolveB(GridArgs),
    /// Evolvable-B runs over varying environments.
    EvolveEnv(GridArgs),
    /// One-mutant robustness of the final genomes in a results directory.
    Robustness {
        #[arg(long)]
        dir: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        neighbors: usize,
        /// Restrict to these cells, e.g. `B=1,K=2`. Repeatable.
        #[arg(long)]
        cell: Vec<String>,
    },
    /// Welch t-tests between two cells of a results directory.
    Stats {
        #[arg(long)]
        dir: Option<PathBuf>,
        /// Exactly two cells, e.g. `--cell B=1,K=0 --cell B=5,K=0`.
        #[arg(long, num_args = 1)]
        cell: Vec<String>,
        /// fitness, R, or both.
        #[arg(long, default_value = "both")]
        metric: String,
    },
    /// Cross-check the fast code paths against independent reference implementations.
    Validate {
        /// Multiplies the number of random cases.
        #[arg(long, default_value_t = 1)]
        scale: usize,
    },
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Run only these cells, e.g. `B=1,K=0`. Repeatable.
    #[arg(long)]
    cell: Vec<String>,
}

enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

type CliResult<T> = Result<T, Failure>;

fn usage<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Usage(e.into())
}

fn runtime<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Runtime(e.into())
}

/// Errors rooted in bad user input map to usage; everything else is a runtime failure.
fn classify(e: rbnk_core::Error) -> Failure {
    use rbnk_core::Error::*;
    match e {
        InvalidParameter(_) | InvalidManifest(_) | DimensionMismatch { .. } | ScheduleInfeasible { .. } => usage(e),
        _ => runtime(e),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let g = &cli.global;
    if let Some(jobs) = g.jobs {
        if jobs == 0 {
            return Err(usage(anyhow!("--jobs must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(runtime)?;
    }
    match &cli.command {
        Command::Fig1 {
            nodes,
            arities,
            cycles,
            max_steps,
        } => fig1(g, *nodes, arities, *cycles, *max_steps),
        Command::Evolve(args) => evolve(g, args, Mode::FixedArity),
        Command::EvolveB(args) => evolve(g, args, Mode::EvolvableArity),
        Command::EvolveEnv(args) => evolve(g, args, Mode::Environments),
        Command::Robustness { dir, neighbors, cell } => robustness(g, dir.as_deref(), *neighbors, cell),
        Command::Stats { dir, cell, metric } => stats(g, dir.as_deref(), cell, metric),
        Command::Validate { scale } => validate(g, *scale),
    }
}

fn progress(g: &GlobalArgs, msg: impl AsRef<str>) {
    if !g.quiet {
        eprintln!("{}", msg.as_ref());
    }
}

fn reject_manifest(g: &GlobalArgs, command: &str) -> CliResult<()> {
    if g.manifest.is_some() {
        return Err(usage(anyhow!("`{command}` does not take --manifest")));
    }
    Ok(())
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(runtime)
}

fn fig1(g: &GlobalArgs, nodes: usize, arities: &[usize], cycles: usize, max_steps: usize) -> CliResult<()> {
    reject_manifest(g, "fig1")?;
    if g.generations.is_some() {
        return Err(usage(anyhow!("`fig1` does not take --generations")));
    }
    let runs = g.runs.unwrap_or(100);
    let seed = g.seed.unwrap_or(42);
    let out = g.out.clone().unwrap_or_else(|| PathBuf::from("results/fig1"));
    progress(g, format!("fig1: R={nodes}, B in {arities:?}, {runs} networks each"));
    let stats = attractor_sweep(nodes, arities, runs, cycles, max_steps, seed).map_err(classify)?;
    create_dir(&out)?;
    let path = out.join("fig1.csv");
    write_attractor_csv(&path, &stats).map_err(classify)?;
    for s in &stats {
        progress(
            g,
            format!(
                "  B={} mean cycle {:.1} [{}, {}], {} censored at {max_steps}",
                s.arity, s.cycle_length.mean, s.cycle_length.min, s.cycle_length.max, s.censored
            ),
        );
    }
    progress(g, format!("wrote {}", path.display()));
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    FixedArity,
    EvolvableArity,
    Environments,
}

impl Mode {
    fn command(self) -> &'static str {
        match self {
            Mode::FixedArity => "evolve",
            Mode::EvolvableArity => "evolve-b",
            Mode::Environments => "evolve-env",
        }
    }

    fn builtin(self) -> &'static str {
        match self {
            Mode::FixedArity => FIG3_DESK,
            Mode::EvolvableArity => FIG4_DESK,
            Mode::Environments => FIG5_DESK,
        }
    }

    fn of(manifest: &ExperimentManifest) -> Self {
        match (manifest.grid.evolvable_arity, manifest.grid.multi_environment) {
            (_, true) => Mode::Environments,
            (true, false) => Mode::EvolvableArity,
            (false, false) => Mode::FixedArity,
        }
    }
}

fn parse_cells(names: &[String]) -> CliResult<Vec<CellKey>> {
    names.iter().map(|n| n.parse::<CellKey>().map_err(usage)).collect()
}

/// The manifest named by `--manifest` (or `fallback`) with the global overrides applied.
fn load_manifest(g: &GlobalArgs, fallback: &str) -> CliResult<ExperimentManifest> {
    let mut m = match &g.manifest {
        Some(path) => ExperimentManifest::load(path).map_err(|e| match e {
            rbnk_core::Error::Io { .. } => runtime(e),
            _ => usage(e),
        })?,
        None => ExperimentManifest::from_json(fallback).map_err(runtime)?,
    };
    if let Some(seed) = g.seed {
        m.master_seed = seed;
    }
    if let Some(out) = &g.out {
        m.output_dir = out.clone();
    }
    if let Some(runs) = g.runs {
        m.runs_per_landscape = runs;
    }
    if let Some(generations) = g.generations {
        m.generations = generations;
    }
    m.validate().map_err(usage)?;
    Ok(m)
}

fn evolve(g: &GlobalArgs, args: &GridArgs, mode: Mode) -> CliResult<()> {
    let mut m = load_manifest(g, mode.builtin())?;
    if Mode::of(&m) != mode {
        return Err(usage(anyhow!(
            "manifest {:?} is a `{}` experiment, not `{}`",
            m.name,
            Mode::of(&m).command(),
            mode.command()
        )));
    }
    if !args.cell.is_empty() {
        m = m.restricted_to(&parse_cells(&args.cell)?).map_err(usage)?;
    }
    let cells = m.cells();
    progress(
        g,
        format!(
            "{}: {} cells x {} runs, {} generations -> {}",
            mode.command(),
            cells.len(),
            m.runs_per_cell(),
            m.generations,
            m.output_dir.display()
        ),
    );
    create_dir(&m.output_dir)?;
    let results = run_experiment(&m).map_err(runtime)?;
    if !g.quiet {
        for (cell, runs) in &results.cells {
            let n = runs.len() as f64;
            let fitness = runs.iter().map(|r| r.final_fitness).sum::<f64>() / n;
            let size = runs.iter().map(|r| r.final_size as f64).sum::<f64>() / n;
            eprintln!("  {cell}: fitness {fitness:.4}, R {size:.2}");
        }
    }
    progress(g, format!("wrote {}", m.output_dir.display()));
    Ok(())
}

/// Results directory from `--dir`, else the output directory of `--manifest`
/// or of the built-in fixed-B manifest.
fn results_dir(g: &GlobalArgs, dir: Option<&Path>) -> CliResult<PathBuf> {
    match dir {
        Some(d) => Ok(d.to_path_buf()),
        None => Ok(load_manifest(g, FIG3_DESK)?.output_dir),
    }
}

fn load_results(dir: &Path) -> CliResult<ExperimentResults> {
    ExperimentResults::load(dir)
        .with_context(|| format!("loading results from {}", dir.display()))
        .map_err(runtime)
}

fn robustness(g: &GlobalArgs, dir: Option<&Path>, neighbors: usize, cells: &[String]) -> CliResult<()> {
    if neighbors == 0 {
        return Err(usage(anyhow!("--neighbors must be at least 1")));
    }
    let dir = results_dir(g, dir)?;
    let cells = parse_cells(cells)?;
    let results = load_results(&dir)?;
    if let Some(missing) = cells.iter().find(|c| results.runs(c).is_none()) {
        return Err(usage(anyhow!("cell {missing} not found in {}", dir.display())));
    }
    let seed = g.seed.unwrap_or(results.manifest.master_seed);
    progress(g, format!("robustness: {neighbors} neighbors per genome in {}", dir.display()));
    let reports = robustness_scan(&results, &cells, neighbors, seed).map_err(classify)?;
    let out = g.out.clone().unwrap_or_else(|| dir.clone());
    create_dir(&out)?;
    let path = out.join("robustness.csv");
    write_robustness_csv(&path, &reports).map_err(classify)?;
    for (cell, r) in &reports {
        progress(
            g,
            format!(
                "  {cell}: alter_function {} vs rewire_connection {} over {} genomes",
                r.alter_function_worst,
                r.rewire_connection_worst,
                r.genomes()
            ),
        );
    }
    progress(g, format!("wrote {}", path.display()));
    Ok(())
}

fn stats(g: &GlobalArgs, dir: Option<&Path>, cells: &[String], metric: &str) -> CliResult<()> {
    let cells = parse_cells(cells)?;
    let [a, b] = cells.as_slice() else {
        return Err(usage(anyhow!("stats needs exactly two --cell arguments")));
    };
    let metrics = match metric {
        "both" => vec![Metric::Fitness, Metric::Size],
        m => vec![m.parse::<Metric>().map_err(usage)?],
    };
    let dir = results_dir(g, dir)?;
    let results = load_results(&dir)?;
    let rows = metrics
        .iter()
        .map(|&m| results.compare(a, b, m).map_err(classify))
        .collect::<CliResult<Vec<StatsRow>>>()?;

    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    for row in &rows {
        w.serialize(row).map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    drop(w);
    if let Some(out) = &g.out {
        create_dir(out)?;
        let path = out.join("stats.csv");
        rbnk_core::harness::experiment::write_csv_rows(&path, &rows, &rbnk_core::harness::experiment::STATS_HEADER)
            .map_err(classify)?;
        progress(g, format!("wrote {}", path.display()));
    }
    Ok(())
}

fn validate(g: &GlobalArgs, scale: usize) -> CliResult<()> {
    reject_manifest(g, "validate")?;
    let checks = run_validation(g.seed.unwrap_or(42), scale);
    let mut stdout = std::io::stdout().lock();
    for c in &checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        writeln!(stdout, "{status} {} ({})", c.name, c.detail).map_err(runtime)?;
    }
    if let Some(out) = &g.out {
        create_dir(out)?;
        let path = out.join("validate.json");
        let text = serde_json::to_string_pretty(&checks).map_err(runtime)?;
        std::fs::write(&path, text + "\n")
            .with_context(|| format!("writing {}", path.display()))
            .map_err(runtime)?;
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(runtime(anyhow!("{failed} validation checks failed")));
    }
    Ok(())
}

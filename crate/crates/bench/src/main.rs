use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use tsunami_bench::commands::{calibrated, run_ablate, run_bench_with, run_shift};
use tsunami_bench::runner::{BuildOptions, IndexKind, Mismatch};
use tsunami_bench::scenarios::Scenario;
use tsunami_core::optimizer::CostWeights;
use tsunami_core::workload::{generate_synthetic, generate_workload, DatasetSpec, WorkloadSpec};
use tsunami_core::{Dataset, Workload};

#[derive(Parser)]
#[command(name = "tsunami-bench", about = "Generate data and workloads, build indexes, verify and time them")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a synthetic dataset in the binary column format.
    GenData {
        #[command(flatten)]
        source: Source,
        /// Row count for a named scenario.
        #[arg(long, default_value_t = 1_000_000)]
        rows: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a workload as JSON, with query endpoints drawn from the dataset.
    GenWorkload {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 200)]
        queries: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build, verify and time indexes on one workload.
    Bench {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        workload: PathBuf,
        /// Comma-separated subset of tsunami, flood, kdtree, clustered,
        /// fullscan, gridtree-only, augmented-only.
        #[arg(long, default_value = "tsunami,flood,kdtree,clustered,fullscan")]
        indexes: String,
        /// Corrupt every index's answers to exercise verification.
        #[arg(long, hide = true)]
        inject_fault: bool,
        #[command(flatten)]
        build: BuildArgs,
    },
    /// Bench workload A, shift to B, rebuild, bench B.
    Shift {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        workload_a: PathBuf,
        #[arg(long)]
        workload_b: PathBuf,
        #[command(flatten)]
        build: BuildArgs,
    },
    /// Component lesion study and optimizer comparison.
    Ablate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        workload: PathBuf,
        /// Optimizer trace as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        build: BuildArgs,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// uniform, skewed or skewed_correlated.
    #[arg(long)]
    scenario: Option<String>,
    /// JSON spec file.
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cell budget per grid; defaults to one cell per 200 points.
    #[arg(long)]
    budget: Option<usize>,
    /// Cost weight per cell range in ns. Calibrated on the data when omitted.
    #[arg(long, requires = "w1")]
    w0: Option<f64>,
    /// Cost weight per scanned value in ns.
    #[arg(long, requires = "w0")]
    w1: Option<f64>,
    /// Try every kd-tree page size from 2^7 to 2^17 and keep the fastest.
    #[arg(long)]
    page_size_sweep: bool,
    #[arg(long, default_value_t = 3)]
    passes: usize,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a CSV flattening next to the report.
    #[arg(long)]
    csv: bool,
}

impl BuildArgs {
    fn options(&self, ds: &Dataset, w: &Workload) -> Result<BuildOptions> {
        if self.budget == Some(0) {
            bail!(ConfigError("--budget must be positive".into()));
        }
        let mut opts = BuildOptions { seed: self.seed, max_cells: self.budget, ..BuildOptions::default() };
        if self.page_size_sweep {
            opts = opts.with_sweep();
        }
        let given = self.w0.zip(self.w1).map(|(w0, w1)| CostWeights { w0, w1 });
        calibrated(ds, w, opts, given)
    }

    fn write(&self, json: &str) -> Result<()> {
        match &self.out {
            Some(p) => std::fs::write(p, json).with_context(|| format!("writing {}", p.display())),
            None => {
                println!("{json}");
                Ok(())
            }
        }
    }
}

#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn scenario(name: &str) -> Result<Scenario> {
    Scenario::parse(name).ok_or_else(|| ConfigError(format!("unknown scenario {name:?}")).into())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load(data: &Path, workload: &Path) -> Result<(Dataset, Workload)> {
    let ds = Dataset::load(data).with_context(|| format!("loading {}", data.display()))?;
    let w = Workload::load(workload).with_context(|| format!("loading {}", workload.display()))?;
    w.validate(ds.d())?;
    Ok((ds, w))
}

fn parse_indexes(s: &str) -> Result<Vec<IndexKind>> {
    s.split(',')
        .map(|x| IndexKind::parse(x.trim()).ok_or_else(|| ConfigError(format!("unknown index {x:?}")).into()))
        .collect()
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::GenData { source, rows, seed, out } => {
            let spec: DatasetSpec = match (&source.scenario, &source.spec) {
                (Some(s), _) => scenario(s)?.dataset(rows),
                (_, Some(p)) => read_json(p)?,
                _ => unreachable!("clap enforces one source"),
            };
            let ds = generate_synthetic(&spec, seed)?;
            ds.save(&out)?;
        }
        Cmd::GenWorkload { source, data, queries, seed, out } => {
            let spec: WorkloadSpec = match (&source.scenario, &source.spec) {
                (Some(s), _) => scenario(s)?.workload(queries),
                (_, Some(p)) => read_json(p)?,
                _ => unreachable!("clap enforces one source"),
            };
            let ds = Dataset::load(&data)?;
            generate_workload(&spec, &ds, seed)?.save(&out)?;
        }
        Cmd::Bench { data, workload, indexes, inject_fault, build } => {
            let kinds = parse_indexes(&indexes)?;
            let (ds, w) = load(&data, &workload)?;
            let report = run_bench_with(&ds, &w, &kinds, &build.options(&ds, &w)?, build.passes, inject_fault)?;
            if let (true, Some(out)) = (build.csv, &build.out) {
                std::fs::write(out.with_extension("csv"), report.to_csv())?;
            }
            build.write(&serde_json::to_string_pretty(&report)?)?;
        }
        Cmd::Shift { data, workload_a, workload_b, build } => {
            let (ds, wa) = load(&data, &workload_a)?;
            let wb = Workload::load(&workload_b)?;
            wb.validate(ds.d())?;
            let report = run_shift(&ds, &wa, &wb, &build.options(&ds, &wa)?, build.passes)?;
            build.write(&serde_json::to_string_pretty(&report)?)?;
        }
        Cmd::Ablate { data, workload, trace, build } => {
            let (ds, w) = load(&data, &workload)?;
            let report = run_ablate(&ds, &w, &build.options(&ds, &w)?, build.passes)?;
            if let Some(p) = trace {
                std::fs::write(p, report.trace_jsonl()?)?;
            }
            build.write(&serde_json::to_string_pretty(&report)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Mismatch>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

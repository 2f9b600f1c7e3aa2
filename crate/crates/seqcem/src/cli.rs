//! Command-line parsing and dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use seqcem_core::knn::KnnMeasure;

use crate::commands;
use crate::config::{RunConfig, Strategy};
use crate::csvio::NaPolicy;
use crate::output::fmt_opt;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "seqcem", version, about = "Individual discrimination scoring with repeated sequential CEM")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every unit with CEM and KNN and report parity gaps.
    Audit,
    /// Apply one removal or injection scenario and write the altered data.
    Simulate(SimulateArgs),
    /// Repair-then-classify comparison of CEM and KNN over a scenario grid.
    Compare(CompareArgs),
    /// QQ and scatter data (CSV and SVG) comparing CEM and KNN scores.
    PlotData,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML/JSON run config, or a provenance.json from an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    #[arg(long, global = true)]
    pub schema: Option<PathBuf>,
    #[arg(long, global = true, env = "SEQCEM_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Neighbours per group for the KNN scores.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Maximum number of CEM orderings averaged.
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Comma-separated feature subset.
    #[arg(long, global = true, value_delimiter = ',', num_args = 0..)]
    pub features: Option<Vec<String>>,
    #[arg(long, global = true)]
    pub subsample: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub na_policy: Option<NaPolicy>,
    /// Comma-separated conditioning variables for the parity report.
    #[arg(long, global = true, value_delimiter = ',')]
    pub conditioning: Option<Vec<String>>,
    /// KNN measure: `delta` or `delta-prime`.
    #[arg(long, global = true, value_parser = parse_measure)]
    pub measure: Option<KnnMeasure>,
    /// Average every ordering to the repetition cap, with no early stop.
    #[arg(long, global = true)]
    pub no_early_stop: bool,
    /// Count a unit as its own match.
    #[arg(long, global = true)]
    pub include_self: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub strategy: Option<Strategy>,
    /// Percent of protected positives flipped to 0.
    #[arg(long)]
    pub v1: Option<f64>,
    /// Percent of unprotected negatives flipped to 1.
    #[arg(long)]
    pub v2: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Probability window for strategy c, as `lo,hi`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub window: Option<Vec<f64>>,
    /// Name of the added correlated column.
    #[arg(long)]
    pub z_name: Option<String>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Repair thresholds in percent, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub qd_list: Option<Vec<f64>>,
    /// Injection scenarios as `v1:v2`, comma-separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_pair)]
    pub grid: Option<Vec<(f64, f64)>>,
    #[arg(long)]
    pub scenario_reps: Option<usize>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub stratify: bool,
    #[arg(long)]
    pub no_svg: bool,
}

fn parse_measure(s: &str) -> std::result::Result<KnnMeasure, String> {
    match s {
        "delta" => Ok(KnnMeasure::Delta),
        "delta-prime" | "delta_prime" => Ok(KnnMeasure::DeltaPrime),
        _ => Err(format!("unknown measure `{s}` (expected delta or delta-prime)")),
    }
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected v1:v2, got `{s}`"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok((num(a)?, num(b)?))
}

impl Cli {
    /// Defaults, then the config file, then flags (and `SEQCEM_OUT`).
    pub fn resolve(&self) -> Result<RunConfig> {
        let c = &self.common;
        let mut cfg = match &c.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($src:expr => $dst:expr) => {
                if let Some(v) = $src.clone() {
                    $dst = v;
                }
            };
        }
        if c.data.is_some() {
            cfg.data = c.data.clone();
        }
        if c.schema.is_some() {
            cfg.schema = c.schema.clone();
        }
        if c.out.is_some() {
            cfg.out = c.out.clone();
        }
        if c.features.is_some() {
            cfg.features = c.features.clone();
        }
        if c.subsample.is_some() {
            cfg.subsample = c.subsample;
        }
        set!(c.seed => cfg.seed);
        set!(c.k => cfg.k);
        set!(c.reps => cfg.reps);
        set!(c.na_policy => cfg.na_policy);
        set!(c.conditioning => cfg.conditioning);
        if let Some(m) = c.measure {
            cfg.knn_measures = vec![m];
        }
        if c.no_early_stop {
            cfg.early_stop = None;
        }
        if c.include_self {
            cfg.include_self = true;
        }
        cfg.workers = c.workers;
        match &self.command {
            Command::Simulate(a) => {
                if a.strategy.is_some() {
                    cfg.scenario.strategy = a.strategy;
                }
                set!(a.v1 => cfg.scenario.v1);
                set!(a.v2 => cfg.scenario.v2);
                set!(a.rho => cfg.scenario.rho);
                set!(a.z_name => cfg.scenario.z_name);
                if let Some(w) = &a.window {
                    cfg.scenario.quantile_window = (w[0], w[1]);
                }
            }
            Command::Compare(a) => {
                set!(a.qd_list => cfg.compare.qd_list);
                set!(a.grid => cfg.compare.grid);
                set!(a.scenario_reps => cfg.compare.scenario_reps);
                set!(a.train_fraction => cfg.compare.train_fraction);
                if a.stratify {
                    cfg.compare.stratify = true;
                }
                if a.no_svg {
                    cfg.compare.svg = false;
                }
            }
            Command::Audit | Command::PlotData => {}
        }
        if matches!(cfg.features.as_deref(), Some(f) if f.iter().all(|s| s.trim().is_empty())) {
            return Err(Error::Usage("--features names no features".into()));
        }
        Ok(cfg)
    }
}

fn dispatch(command: &Command, cfg: &RunConfig) -> Result<()> {
    let mut o = std::io::stdout().lock();
    match command {
        Command::Audit => {
            let s = commands::audit(cfg)?;
            let _ = writeln!(o, "units: {} ({} protected)", s.n, s.n_protected);
            let _ = writeln!(o, "CEM orderings averaged: {}", s.cem_repetitions);
            let _ = writeln!(o, "mean D over protected units: {}", fmt_opt(s.mean_d_protected));
            for (label, mean) in &s.knn_means {
                let _ = writeln!(o, "mean {label} over protected units: {}", fmt_opt(*mean));
            }
            let _ = writeln!(o, "demographic parity gap: {}", s.parity.unconditional_gap);
        }
        Command::Simulate(_) => {
            let r = commands::simulate(cfg)?;
            let _ = writeln!(o, "{}: {} of {} rows changed", r.record.kind, r.record.cells_changed, r.data.n());
        }
        Command::Compare(_) => {
            let report = commands::compare(cfg)?;
            let _ = writeln!(o, "{} cells over {} scenarios", report.cells.len(), report.config.grid.len());
        }
        Command::PlotData => {
            commands::plot_data(cfg)?;
        }
    }
    let _ = writeln!(o, "outputs in {}", cfg.out_dir().display());
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = cli.resolve()?;
    match cfg.workers {
        Some(0) => Err(Error::Usage("--workers must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Usage(format!("cannot start {n} workers: {e}")))?;
            pool.install(|| dispatch(&cli.command, &cfg))
        }
        None => dispatch(&cli.command, &cfg),
    }
}

/// Entry point: 0 on success, 1 on a runtime error, 2 on a usage error.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}

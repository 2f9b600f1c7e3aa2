//! The work behind each subcommand. Every function takes a fully resolved
//! [`RunConfig`] and writes its outputs plus `provenance.json` into the
//! configured output directory.

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use seqcem_core::cem::{CemConfig, CemScoreVector, OrderSampling, SequentialCem};
use seqcem_core::dataset::{Dataset, Group};
use seqcem_core::evaluation::{compare_cem_knn, qq_data, scatter_pairs, CompareConfig, EvalReport};
use seqcem_core::knn::{score_all_knn, GowerConfig, KnnMeasure, KnnScoreVector, Targets};
use seqcem_core::metrics::{parity_report, ParityReport};
use seqcem_core::scenario::{
    add_correlated_variable, inject_discrimination, remove_discrimination, RemovalStrategy, ScenarioRecord,
};
use seqcem_core::seed;
use seqcem_core::tree::{fit, TreeModel};

use crate::config::{Provenance, RunConfig, Strategy};
use crate::csvio::{load_csv_with_report, write_dataset, LoadReport};
use crate::output::{self, knn_label};
use crate::schema::SchemaFile;
use crate::svg;
use crate::{Error, Result};

/// Derivation paths under the run seed, one per randomized step.
pub mod stream {
    pub const SUBSAMPLE: u64 = 1;
    pub const CEM: u64 = 2;
    pub const TREE: u64 = 3;
    pub const SCENARIO: u64 = 4;
    pub const SPLIT: u64 = 5;
    pub const COMPARE: u64 = 6;
}

/// A loaded input plus what it took to get there.
pub struct Input {
    pub data: Dataset,
    pub schema: SchemaFile,
    pub load: LoadReport,
}

/// Reads data and schema, applies the feature restriction and subsample.
pub fn load_input(cfg: &RunConfig) -> Result<Input> {
    let mut schema = SchemaFile::load(cfg.schema_path()?)?;
    if let Some(keep) = &cfg.features {
        schema = schema.restrict_features(keep)?;
    }
    if schema.feature_names().is_empty() {
        return Err(Error::Usage("no feature attributes selected".into()));
    }
    let (mut data, load) = load_csv_with_report(cfg.data_path()?, &schema, cfg.na_policy)?;
    info!("loaded {} rows ({} dropped)", data.n(), load.rows_dropped);
    if let Some(size) = cfg.subsample {
        data = data.subsample(size, seed::derive(cfg.seed, &[stream::SUBSAMPLE]))?;
        info!("subsampled to {} rows", data.n());
    }
    Ok(Input { data, schema, load })
}

pub fn cem_config(cfg: &RunConfig) -> CemConfig {
    CemConfig {
        repetitions: cfg.reps,
        seed: seed::derive(cfg.seed, &[stream::CEM]),
        early_stop: cfg.early_stop,
        orders: OrderSampling::Random,
        include_self: cfg.include_self,
    }
}

pub fn cem_scores(ds: &Dataset, cfg: &RunConfig) -> Result<CemScoreVector> {
    let cem = SequentialCem::new(ds, &cfg.coarsening)?.include_self(cfg.include_self);
    Ok(cem.repeated(&cem_config(cfg))?)
}

pub fn knn_scores(ds: &Dataset, cfg: &RunConfig, measure: KnnMeasure) -> Result<KnnScoreVector> {
    let gower = GowerConfig::from_dataset(ds)?;
    Ok(score_all_knn(ds, cfg.k, measure, Targets::Protected, &gower))
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn create(cfg: &RunConfig) -> Result<Self> {
        let dir = cfg.out_dir();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self { dir, written: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.into());
        self.dir.join(name)
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, text).map_err(|e| Error::io(path, e))
    }

    fn finish(mut self, command: &str, cfg: &RunConfig, input: &Input) -> Result<PathBuf> {
        let mut recorded = cfg.clone();
        recorded.data = cfg.data.as_deref().map(absolute);
        recorded.schema = cfg.schema.as_deref().map(absolute);
        recorded.out = Some(absolute(&self.dir));
        let path = self.path("provenance.json");
        let prov = Provenance {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: recorded,
            rows: input.load,
            n_units: input.data.n(),
            outputs: self.written.clone(),
        };
        output::write_json(path, &prov)?;
        Ok(self.dir)
    }
}

fn absolute(p: &Path) -> PathBuf {
    fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf())
}

fn mean_over(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditSummary {
    pub n: usize,
    pub n_protected: usize,
    pub cem_repetitions: usize,
    pub mean_d_protected: Option<f64>,
    pub knn_means: Vec<(String, Option<f64>)>,
    pub parity: ParityReport,
}

pub fn audit(cfg: &RunConfig) -> Result<AuditSummary> {
    let input = load_input(cfg)?;
    let ds = &input.data;
    let mut out = Outputs::create(cfg)?;

    let cem = cem_scores(ds, cfg)?;
    info!("CEM: {} orderings averaged (converged: {})", cem.repetitions, cem.converged);
    output::write_cem_scores(out.path("cem_scores.csv"), &cem)?;
    out.written.push("cem_scores.json".into());
    let protected = |i: usize| ds.sensitive()[i] == 1;
    let mean_d_protected = mean_over((0..ds.n()).filter(|&i| protected(i)).map(|i| Some(cem.values[i])));

    let mut knn_means = Vec::new();
    for &measure in &cfg.knn_measures {
        let knn = knn_scores(ds, cfg, measure)?;
        let label = knn_label(measure, Targets::Protected);
        output::write_knn_scores(out.path(&format!("{label}.csv")), &knn)?;
        out.written.push(format!("{label}.json"));
        knn_means.push((label, mean_over(knn.values.iter().copied())));
    }

    let conditioning: Vec<&str> = cfg.conditioning.iter().map(String::as_str).collect();
    let parity = parity_report(ds, &conditioning, &cfg.coarsening, None)?;
    output::write_json(out.path("parity.json"), &parity)?;
    output::write_parity_csv(out.path("parity.csv"), &parity)?;

    let summary = AuditSummary {
        n: ds.n(),
        n_protected: ds.count(Group::Protected),
        cem_repetitions: cem.repetitions,
        mean_d_protected,
        knn_means,
        parity,
    };
    out.finish("audit", cfg, &input)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateOutput {
    pub data: Dataset,
    pub record: ScenarioRecord,
    pub tree: Option<TreeModel>,
}

/// Applies one scenario to the loaded data.
pub fn apply_scenario(ds: &Dataset, cfg: &RunConfig, strategy: Strategy) -> Result<SimulateOutput> {
    let sc = &cfg.scenario;
    let scenario_seed = seed::derive(cfg.seed, &[stream::SCENARIO]);
    let tree_seed = seed::derive(cfg.seed, &[stream::TREE]);
    let removal = match strategy {
        Strategy::A => Some(RemovalStrategy::A),
        Strategy::B => Some(RemovalStrategy::B),
        Strategy::C => Some(RemovalStrategy::C),
        Strategy::D => Some(RemovalStrategy::D),
        Strategy::Inject | Strategy::AddZ => None,
    };
    if let Some(r) = removal {
        let params = if r.wants_pruned_tree() { cfg.tree.pruned(tree_seed) } else { cfg.tree.unpruned() };
        let tree = fit(ds, &params)?;
        let (data, record) = remove_discrimination(ds, r, &tree, sc.quantile_window, scenario_seed)?;
        return Ok(SimulateOutput { data, record, tree: Some(tree) });
    }
    if strategy == Strategy::Inject {
        let tree = fit(ds, &cfg.tree.pruned(tree_seed))?;
        let (data, record) = inject_discrimination(ds, sc.v1, sc.v2, &tree, scenario_seed)?;
        return Ok(SimulateOutput { data, record, tree: Some(tree) });
    }
    let (data, record) = add_correlated_variable(ds, sc.rho, &sc.z_name, scenario_seed)?;
    Ok(SimulateOutput { data, record, tree: None })
}

pub fn simulate(cfg: &RunConfig) -> Result<SimulateOutput> {
    let strategy = cfg
        .scenario
        .strategy
        .ok_or_else(|| Error::Usage("simulate needs a strategy (--strategy a|b|c|d|inject|add-z)".into()))?;
    let input = load_input(cfg)?;
    let result = apply_scenario(&input.data, cfg, strategy)?;
    info!("scenario {}: {} cells changed", result.record.kind, result.record.cells_changed);
    let mut out = Outputs::create(cfg)?;
    write_dataset(out.path("scenario.csv"), &result.data, input.schema.delimiter)?;
    let schema = SchemaFile { attributes: result.data.schema(), ..input.schema.clone() };
    out.write_text("scenario.schema.toml", &schema.to_toml())?;
    output::write_json(out.path("scenario.json"), &result.record)?;
    if let Some(tree) = &result.tree {
        output::write_json(out.path("tree.json"), tree)?;
    }
    out.finish("simulate", cfg, &input)?;
    Ok(result)
}

pub fn compare_config(cfg: &RunConfig) -> CompareConfig {
    let tree = cfg.tree.pruned(seed::derive(cfg.seed, &[stream::TREE]));
    CompareConfig {
        grid: cfg.compare.grid.clone(),
        thresholds: cfg.compare.qd_list.clone(),
        replications: cfg.compare.scenario_reps,
        seed: seed::derive(cfg.seed, &[stream::COMPARE]),
        k: cfg.k,
        cem: CemConfig { seed: 0, ..cem_config(cfg) },
        coarsening: cfg.coarsening.clone(),
        classifier: tree,
        scenario_tree: tree,
        repair_target: 1,
    }
}

pub fn compare(cfg: &RunConfig) -> Result<EvalReport> {
    let input = load_input(cfg)?;
    let split = input.data.split(
        cfg.compare.train_fraction,
        seed::derive(cfg.seed, &[stream::SPLIT]),
        cfg.compare.stratify,
    )?;
    info!("split: {} train / {} test", split.train.n(), split.test.n());
    let report = compare_cem_knn(&split, &compare_config(cfg))?;
    let mut out = Outputs::create(cfg)?;
    output::write_report_csv(out.path("report.csv"), &report)?;
    output::write_json(out.path("report.json"), &report)?;
    output::write_summary_csv(out.path("summary.csv"), &report)?;
    if cfg.compare.svg {
        out.write_text("ratios.svg", &svg::ratio_panels(&report))?;
    }
    out.finish("compare", cfg, &input)?;
    Ok(report)
}

/// QQ and scatter data comparing `D` with the configured KNN measure over
/// the protected units.
pub fn plot_data(cfg: &RunConfig) -> Result<PathBuf> {
    let input = load_input(cfg)?;
    let ds = &input.data;
    let measure = cfg.knn_measures.first().copied().unwrap_or(KnnMeasure::DeltaPrime);
    let cem = cem_scores(ds, cfg)?.to_scores().masked(|i| ds.sensitive()[i] == 1);
    let knn = knn_scores(ds, cfg, measure)?.to_scores();
    let knn_name = match measure {
        KnnMeasure::Delta => "KNN Δ",
        KnnMeasure::DeltaPrime => "KNN δ",
    };
    let qq = qq_data(&cem.values, &knn.values, cfg.qq_grid)?;
    let scatter = scatter_pairs(&cem, &knn);
    let mut out = Outputs::create(cfg)?;
    output::write_qq_csv(out.path("qq.csv"), &qq)?;
    output::write_scatter_csv(out.path("scatter.csv"), &scatter)?;
    out.write_text("qq.svg", &svg::qq_panel(&qq, "QQ plot, protected units", "CEM D quantile", &format!("{knn_name} quantile")))?;
    out.write_text("scatter.svg", &svg::scatter_panel(&scatter, "Per-unit scores", "CEM D", knn_name))?;
    out.finish("plot-data", cfg, &input)
}

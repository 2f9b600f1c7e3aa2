//! Run configuration: everything a command needs, serializable so that a
//! run's provenance file can be fed back in to repeat it.
//!
//! Values are resolved in this order, later ones winning: built-in
//! defaults, the `--config` file, the `SEQCEM_OUT` environment variable
//! (output directory only), command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use seqcem_core::cem::{CoarseningSpec, EarlyStop};
use seqcem_core::evaluation::{DEFAULT_GRID, DEFAULT_REPLICATIONS, DEFAULT_THRESHOLDS};
use seqcem_core::knn::{KnnMeasure, DEFAULT_K};
use seqcem_core::scenario::DEFAULT_QUANTILE_WINDOW;
use seqcem_core::tree::{Pruning, TreeParams};

use crate::csvio::{LoadReport, NaPolicy};
use crate::{Error, Result};

/// Train fraction reproducing a 30162 / 15060 split of 45222 rows.
pub const ADULT_TRAIN_FRACTION: f64 = 30162.0 / 45222.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    A,
    B,
    C,
    D,
    Inject,
    AddZ,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Cross-validation folds used to pick the pruning level.
    pub cv_folds: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        let d = TreeParams::default();
        Self { max_depth: d.max_depth, min_leaf: d.min_leaf, cv_folds: 5 }
    }
}

impl TreeConfig {
    pub fn pruned(&self, seed: u64) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
            pruning: Pruning::CrossValidated { folds: self.cv_folds, seed },
        }
    }

    pub fn unpruned(&self) -> TreeParams {
        TreeParams { max_depth: self.max_depth, min_leaf: self.min_leaf, pruning: Pruning::None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub strategy: Option<Strategy>,
    pub v1: f64,
    pub v2: f64,
    pub rho: f64,
    pub quantile_window: (f64, f64),
    pub z_name: String,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            strategy: None,
            v1: 0.0,
            v2: 0.0,
            rho: 0.5,
            quantile_window: DEFAULT_QUANTILE_WINDOW,
            z_name: "Z".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    pub grid: Vec<(f64, f64)>,
    pub qd_list: Vec<f64>,
    pub scenario_reps: usize,
    pub train_fraction: f64,
    pub stratify: bool,
    pub svg: bool,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            grid: DEFAULT_GRID.to_vec(),
            qd_list: DEFAULT_THRESHOLDS.to_vec(),
            scenario_reps: DEFAULT_REPLICATIONS,
            train_fraction: ADULT_TRAIN_FRACTION,
            stratify: false,
            svg: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub na_policy: NaPolicy,
    /// Feature subset; every feature attribute of the schema when absent.
    pub features: Option<Vec<String>>,
    /// Score a uniform random subsample of this many rows.
    pub subsample: Option<usize>,
    pub k: usize,
    pub knn_measures: Vec<KnnMeasure>,
    /// Upper bound on CEM orderings averaged.
    pub reps: usize,
    pub early_stop: Option<EarlyStop>,
    pub include_self: bool,
    pub coarsening: CoarseningSpec,
    /// Variables the parity report conditions on.
    pub conditioning: Vec<String>,
    pub tree: TreeConfig,
    pub scenario: ScenarioConfig,
    pub compare: CompareSection,
    pub qq_grid: usize,
    /// Thread count; does not affect any output.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            schema: None,
            out: None,
            seed: 0,
            na_policy: NaPolicy::DropRow,
            features: None,
            subsample: None,
            k: DEFAULT_K,
            knn_measures: vec![KnnMeasure::DeltaPrime],
            reps: 100,
            early_stop: Some(EarlyStop::default()),
            include_self: false,
            coarsening: CoarseningSpec::default(),
            conditioning: Vec::new(),
            tree: TreeConfig::default(),
            scenario: ScenarioConfig::default(),
            compare: CompareSection::default(),
            qq_grid: 101,
            workers: None,
        }
    }
}

impl RunConfig {
    /// Reads a TOML or JSON config. A provenance file is accepted too; its
    /// `config` member is used.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let bad = |message: String| Error::Config { path: path.into(), message };
        if path.extension().is_some_and(|e| e == "json") {
            let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
            let inner = match value.get("config") {
                Some(c) if value.get("command").is_some() => c.clone(),
                _ => value,
            };
            serde_json::from_value(inner).map_err(|e| bad(e.to_string()))
        } else {
            toml::from_str(&text).map_err(|e| bad(e.to_string()))
        }
    }

    pub fn data_path(&self) -> Result<&Path> {
        self.data.as_deref().ok_or_else(|| Error::Usage("no data file given (use --data or the config `data` key)".into()))
    }

    pub fn schema_path(&self) -> Result<&Path> {
        self.schema
            .as_deref()
            .ok_or_else(|| Error::Usage("no schema file given (use --schema or the config `schema` key)".into()))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("seqcem-out"))
    }
}

/// Written as `provenance.json` into every output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub rows: LoadReport,
    pub n_units: usize,
    pub outputs: Vec<String>,
}

//! Score-threshold repair, downstream classifier rates, and the CEM-vs-KNN
//! comparison harness. Also the paired-quantile and scatter data used to
//! compare score distributions.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cem::{CemConfig, CoarseningSpec, SequentialCem};
use crate::dataset::{Dataset, SplitPair};
use crate::knn::{score_all_knn, GowerConfig, KnnMeasure, Targets, DEFAULT_K};
use crate::scenario::inject_discrimination;
use crate::score::{ScoreMethod, ScoreVector};
use crate::tree::{fit, TreeModel, TreeParams};
use crate::{par, seed, stats, Error, Result};

/// Injection grid `(v1, v2)` used for the comparison.
pub const DEFAULT_GRID: [(f64, f64); 6] = [(2.5, 0.0), (5.0, 0.0), (10.0, 0.0), (2.5, 2.5), (5.0, 5.0), (10.0, 10.0)];
/// Repair thresholds, in percent of the score distribution.
pub const DEFAULT_THRESHOLDS: [f64; 5] = [5.0, 10.0, 15.0, 20.0, 25.0];
/// Simulated scenarios per grid cell.
pub const DEFAULT_REPLICATIONS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairRecord {
    pub threshold: Option<f64>,
    pub flagged: usize,
    /// Flagged units whose outcome actually changed.
    pub flipped: usize,
}

/// Sets `Y = target` for the units flagged at `q_d` percent. For CEM scores
/// (low = discriminated) a unit is flagged when its score is at most the
/// `q_d`-th percentile of the defined scores; for k-NN scores when it is at
/// least the `(100 − q_d)`-th percentile. `q_d = 0` flags nothing.
pub fn repair(
    ds: &Dataset,
    scores: &[Option<f64>],
    q_d: f64,
    method: ScoreMethod,
    target: u8,
) -> Result<(Dataset, RepairRecord)> {
    if scores.len() != ds.n() {
        return Err(Error::InvalidArgument(format!("{} scores for {} rows", scores.len(), ds.n())));
    }
    if !(0.0..=100.0).contains(&q_d) {
        return Err(Error::InvalidArgument(format!("q_D = {q_d} outside [0, 100]")));
    }
    let defined: Vec<f64> = scores.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::AllUndefined);
    }
    if q_d == 0.0 {
        return Ok((ds.clone(), RepairRecord { threshold: None, flagged: 0, flipped: 0 }));
    }
    let low = method.low_is_discriminated();
    let threshold = stats::percentile(&defined, if low { q_d } else { 100.0 - q_d }).expect("non-empty");
    let mut y = ds.outcome().to_vec();
    let (mut flagged, mut flipped) = (0, 0);
    for (i, score) in scores.iter().enumerate() {
        let Some(v) = *score else { continue };
        if (low && v <= threshold) || (!low && v >= threshold) {
            flagged += 1;
            if y[i] != target {
                y[i] = target;
                flipped += 1;
            }
        }
    }
    Ok((ds.with_outcome(y)?, RepairRecord { threshold: Some(threshold), flagged, flipped }))
}

/// Correct prediction ratio, true positive ratio, false negative ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub cpr: f64,
    pub tpr: Option<f64>,
    pub fnr: Option<f64>,
}

/// Rates of `predictions` against the outcomes of `test`.
pub fn rates_from_predictions(test: &Dataset, predictions: &[u8]) -> Result<Rates> {
    if test.n() == 0 || predictions.len() != test.n() {
        return Err(Error::InvalidArgument("predictions must align with a non-empty test set".into()));
    }
    let (mut correct, mut tp, mut fneg) = (0usize, 0usize, 0usize);
    for (&y, &p) in test.outcome().iter().zip(predictions) {
        correct += usize::from(y == p);
        if y == 1 {
            if p == 1 {
                tp += 1;
            } else {
                fneg += 1;
            }
        }
    }
    let positives = tp + fneg;
    let share = |k: usize| (positives > 0).then(|| k as f64 / positives as f64);
    Ok(Rates { cpr: correct as f64 / test.n() as f64, tpr: share(tp), fnr: share(fneg) })
}

/// Rates of `tree` (labels at probability ≥ 0.5) on `test`.
pub fn classification_rates(tree: &TreeModel, test: &Dataset) -> Result<Rates> {
    rates_from_predictions(test, &tree.predict_labels(test, 0.5)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratios {
    pub cpr: Option<f64>,
    pub tpr: Option<f64>,
    pub fnr: Option<f64>,
}

fn ratio(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) if b != 0.0 => Some(a / b),
        _ => None,
    }
}

impl Ratios {
    pub fn of(cem: &Rates, knn: &Rates) -> Self {
        Self { cpr: ratio(Some(cem.cpr), Some(knn.cpr)), tpr: ratio(cem.tpr, knn.tpr), fnr: ratio(cem.fnr, knn.fnr) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub grid: Vec<(f64, f64)>,
    pub thresholds: Vec<f64>,
    pub replications: usize,
    pub seed: u64,
    pub k: usize,
    pub cem: CemConfig,
    pub coarsening: CoarseningSpec,
    /// Classifier refitted on every repaired training set.
    pub classifier: TreeParams,
    /// Tree whose probabilities choose the units to inject.
    pub scenario_tree: TreeParams,
    /// Outcome given to flagged units.
    pub repair_target: u8,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            grid: DEFAULT_GRID.to_vec(),
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            replications: DEFAULT_REPLICATIONS,
            seed: 0,
            k: DEFAULT_K,
            cem: CemConfig::default(),
            coarsening: CoarseningSpec::default(),
            classifier: TreeParams::pruned(0),
            scenario_tree: TreeParams::pruned(0),
            repair_target: 1,
        }
    }
}

/// One (scenario, threshold, replication) result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationCell {
    pub v1: f64,
    pub v2: f64,
    pub q_d: f64,
    pub replication: usize,
    pub cem: Rates,
    pub knn: Rates,
    /// Classifier fitted on the injected, unrepaired training set.
    pub baseline: Rates,
    pub ratios: Ratios,
    pub flipped_cem: usize,
    pub flipped_knn: usize,
}

/// Mean and sample standard deviation over replications; `n` counts the
/// replications where the value was defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub n: usize,
}

impl Spread {
    fn of(values: impl Iterator<Item = Option<f64>>) -> Self {
        let v: Vec<f64> = values.flatten().collect();
        Self { mean: stats::mean(&v), std: stats::sample_std(&v), n: v.len() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub v1: f64,
    pub v2: f64,
    pub q_d: f64,
    pub metrics: BTreeMap<String, Spread>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: CompareConfig,
    pub n_train: usize,
    pub n_test: usize,
    pub cells: Vec<ReplicationCell>,
    pub summary: Vec<CellSummary>,
}

/// For every replication and `(v1, v2)`: inject into the training split,
/// score with repeated CEM and with `δ`, repair at each threshold under each
/// method, refit the classifier, and evaluate on the untouched test split.
/// Both methods repair protected units only.
pub fn compare_cem_knn(base: &SplitPair, cfg: &CompareConfig) -> Result<EvalReport> {
    if cfg.replications == 0 || cfg.grid.is_empty() || cfg.thresholds.is_empty() {
        return Err(Error::InvalidArgument("empty replication count, grid or threshold list".into()));
    }
    let scenario_tree = fit(&base.train, &cfg.scenario_tree)?;
    let n_jobs = cfg.replications * cfg.grid.len();
    let results = par::map_indexed(n_jobs, |job| {
        let (rep, cell) = (job / cfg.grid.len(), job % cfg.grid.len());
        run_job(base, cfg, &scenario_tree, rep, cell)
    });
    let mut cells = Vec::with_capacity(n_jobs * cfg.thresholds.len());
    for r in results {
        cells.extend(r?);
    }
    let summary = summarize(cfg, &cells);
    Ok(EvalReport { config: cfg.clone(), n_train: base.train.n(), n_test: base.test.n(), cells, summary })
}

fn run_job(
    base: &SplitPair,
    cfg: &CompareConfig,
    scenario_tree: &TreeModel,
    rep: usize,
    cell: usize,
) -> Result<Vec<ReplicationCell>> {
    let (v1, v2) = cfg.grid[cell];
    let job_seed = seed::derive(cfg.seed, &[rep as u64, cell as u64]);
    let (train, _) = inject_discrimination(&base.train, v1, v2, scenario_tree, seed::derive(job_seed, &[0]))?;
    let protected: Vec<bool> = train.sensitive().iter().map(|&s| s == 1).collect();

    let cem_cfg = CemConfig { seed: seed::derive(job_seed, &[1]), ..cfg.cem };
    let cem = SequentialCem::new(&train, &cfg.coarsening)?.include_self(cem_cfg.include_self).repeated(&cem_cfg)?;
    let cem_scores = cem.to_scores().masked(|i| protected[i]);
    let gower = GowerConfig::from_dataset(&train)?;
    let knn_scores = score_all_knn(&train, cfg.k, KnnMeasure::DeltaPrime, Targets::Protected, &gower).to_scores();

    let baseline = classification_rates(&fit(&train, &cfg.classifier)?, &base.test)?;
    let mut out = Vec::with_capacity(cfg.thresholds.len());
    for &q_d in &cfg.thresholds {
        let (cem_rates, flipped_cem) = repaired_rates(&train, &cem_scores, q_d, base, cfg)?;
        let (knn_rates, flipped_knn) = repaired_rates(&train, &knn_scores, q_d, base, cfg)?;
        out.push(ReplicationCell {
            v1,
            v2,
            q_d,
            replication: rep,
            ratios: Ratios::of(&cem_rates, &knn_rates),
            cem: cem_rates,
            knn: knn_rates,
            baseline,
            flipped_cem,
            flipped_knn,
        });
    }
    Ok(out)
}

fn repaired_rates(
    train: &Dataset,
    scores: &ScoreVector,
    q_d: f64,
    base: &SplitPair,
    cfg: &CompareConfig,
) -> Result<(Rates, usize)> {
    let (repaired, rec) = repair(train, &scores.values, q_d, scores.method, cfg.repair_target)?;
    let tree = fit(&repaired, &cfg.classifier)?;
    Ok((classification_rates(&tree, &base.test)?, rec.flipped))
}

fn summarize(cfg: &CompareConfig, cells: &[ReplicationCell]) -> Vec<CellSummary> {
    let mut out = Vec::new();
    for &(v1, v2) in &cfg.grid {
        for &q_d in &cfg.thresholds {
            let group: Vec<&ReplicationCell> =
                cells.iter().filter(|c| c.v1 == v1 && c.v2 == v2 && c.q_d == q_d).collect();
            let mut metrics = BTreeMap::new();
            let mut put = |name: &str, f: &dyn Fn(&ReplicationCell) -> Option<f64>| {
                metrics.insert(name.into(), Spread::of(group.iter().map(|c| f(c))));
            };
            put("cpr_cem", &|c| Some(c.cem.cpr));
            put("tpr_cem", &|c| c.cem.tpr);
            put("fnr_cem", &|c| c.cem.fnr);
            put("cpr_knn", &|c| Some(c.knn.cpr));
            put("tpr_knn", &|c| c.knn.tpr);
            put("fnr_knn", &|c| c.knn.fnr);
            put("cpr_ratio", &|c| c.ratios.cpr);
            put("tpr_ratio", &|c| c.ratios.tpr);
            put("fnr_ratio", &|c| c.ratios.fnr);
            out.push(CellSummary { v1, v2, q_d, metrics });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqData {
    pub probabilities: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// Empirical quantiles of the defined entries of `a` and `b` at `grid_size`
/// evenly spaced probabilities from 0 to 1 (just 0.5 when `grid_size` is 1).
pub fn qq_data(a: &[Option<f64>], b: &[Option<f64>], grid_size: usize) -> Result<QqData> {
    let sorted = |v: &[Option<f64>]| -> Result<Vec<f64>> {
        let mut d: Vec<f64> = v.iter().flatten().copied().collect();
        if d.is_empty() {
            return Err(Error::AllUndefined);
        }
        d.sort_by(f64::total_cmp);
        Ok(d)
    };
    let (sa, sb) = (sorted(a)?, sorted(b)?);
    if grid_size == 0 {
        return Err(Error::InvalidArgument("grid size must be positive".into()));
    }
    let probabilities: Vec<f64> = if grid_size == 1 {
        vec![0.5]
    } else {
        (0..grid_size).map(|j| j as f64 / (grid_size - 1) as f64).collect()
    };
    let q = |s: &[f64]| probabilities.iter().map(|&p| stats::quantile_sorted(s, p).expect("non-empty")).collect();
    Ok(QqData { a: q(&sa), b: q(&sb), probabilities })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterData {
    /// `(unit id, a, b)` for units defined in both, ordered as in `a`.
    pub points: Vec<(u64, f64, f64)>,
    /// Units of `a` missing or undefined on either side.
    pub undefined: Vec<u64>,
}

/// Pairs two score vectors by unit id.
pub fn scatter_pairs(a: &ScoreVector, b: &ScoreVector) -> ScatterData {
    let lookup: BTreeMap<u64, Option<f64>> = b.unit_ids.iter().copied().zip(b.values.iter().copied()).collect();
    let mut data = ScatterData { points: Vec::new(), undefined: Vec::new() };
    for (&id, &va) in a.unit_ids.iter().zip(&a.values) {
        match (va, lookup.get(&id).copied().flatten()) {
            (Some(x), Some(y)) => data.points.push((id, x, y)),
            _ => data.undefined.push(id),
        }
    }
    data
}

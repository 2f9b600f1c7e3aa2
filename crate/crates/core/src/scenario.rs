//! Scenario generators: discrimination-free datasets, injected
//! discrimination, and a nuisance variable correlated with `S`.
//!
//! Each generator changes only the column it is documented to change; every
//! other cell of the dataset is left bit-identical.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Column, Dataset, Feature};
use crate::tree::TreeModel;
use crate::{seed, stats, Error, Result};

/// Ways of building a discrimination-free copy of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalStrategy {
    /// Redraw `Y` from the (pruned) tree's probabilities.
    A,
    /// Redraw `Y` from an unpruned tree's probabilities.
    B,
    /// Permute `S` among units whose predicted probability lies in a quantile window.
    C,
    /// Permute `S` across all units.
    D,
}

impl RemovalStrategy {
    /// Whether the strategy is meant to run on a pruned tree.
    pub fn wants_pruned_tree(self) -> bool {
        !matches!(self, RemovalStrategy::B)
    }
}

/// Default probability window for strategy (c): the interquartile band.
pub const DEFAULT_QUANTILE_WINDOW: (f64, f64) = (0.25, 0.75);

/// What a scenario changed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub kind: String,
    pub seed: u64,
    /// Rows whose changed column took a different value.
    pub cells_changed: usize,
    /// Rows eligible for the change (the permuted subset for (c)/(d)).
    pub rows_considered: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probability_window: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flipped_protected: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flipped_unprotected: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_variance: Option<f64>,
}

impl ScenarioRecord {
    fn new(kind: &str, seed: u64) -> Self {
        Self {
            kind: kind.into(),
            seed,
            cells_changed: 0,
            rows_considered: 0,
            probability_window: None,
            flipped_protected: None,
            flipped_unprotected: None,
            noise_variance: None,
        }
    }
}

/// Removes discrimination from `ds` with `strategy`. `tree` must be fitted on
/// `ds` (its features only); `quantile_window` applies to strategy (c).
pub fn remove_discrimination(
    ds: &Dataset,
    strategy: RemovalStrategy,
    tree: &TreeModel,
    quantile_window: (f64, f64),
    seed: u64,
) -> Result<(Dataset, ScenarioRecord)> {
    let proba = tree.predict_proba_all(ds)?;
    let mut rng = seed::rng(seed);
    match strategy {
        RemovalStrategy::A | RemovalStrategy::B => {
            let y: Vec<u8> = proba.iter().map(|&p| u8::from(rng.random::<f64>() < p)).collect();
            let mut rec = ScenarioRecord::new(if strategy == RemovalStrategy::A { "remove_a" } else { "remove_b" }, seed);
            rec.rows_considered = ds.n();
            rec.cells_changed = y.iter().zip(ds.outcome()).filter(|(a, b)| a != b).count();
            Ok((ds.with_outcome(y)?, rec))
        }
        RemovalStrategy::C | RemovalStrategy::D => {
            let (lo_q, hi_q) = if strategy == RemovalStrategy::D { (0.0, 1.0) } else { quantile_window };
            if !(0.0..=1.0).contains(&lo_q) || !(0.0..=1.0).contains(&hi_q) || lo_q > hi_q {
                return Err(Error::InvalidArgument(format!("bad quantile window ({lo_q}, {hi_q})")));
            }
            let mut sorted = proba.clone();
            sorted.sort_by(f64::total_cmp);
            let lo = stats::quantile_sorted(&sorted, lo_q).expect("non-empty dataset");
            let hi = stats::quantile_sorted(&sorted, hi_q).expect("non-empty dataset");
            let subset: Vec<usize> = (0..ds.n()).filter(|&i| proba[i] >= lo && proba[i] <= hi).collect();
            if subset.is_empty() {
                return Err(Error::EmptyGroup(format!("no unit with predicted probability in [{lo}, {hi}]")));
            }
            let mut values: Vec<u8> = subset.iter().map(|&i| ds.sensitive()[i]).collect();
            values.shuffle(&mut rng);
            let mut s = ds.sensitive().to_vec();
            for (&i, v) in subset.iter().zip(values) {
                s[i] = v;
            }
            let mut rec = ScenarioRecord::new(if strategy == RemovalStrategy::C { "remove_c" } else { "remove_d" }, seed);
            rec.rows_considered = subset.len();
            rec.cells_changed = s.iter().zip(ds.sensitive()).filter(|(a, b)| a != b).count();
            rec.probability_window = Some((lo, hi));
            Ok((ds.with_sensitive(s)?, rec))
        }
    }
}

/// Number of units changed for a percentage `v` of a group of `size`.
pub fn flip_count(v: f64, size: usize) -> usize {
    libm::round(v * size as f64 / 100.0) as usize
}

/// Injects discrimination: `Y` goes 1→0 for `v1`% of the protected units and
/// 0→1 for `v2`% of the unprotected units. Within each group the changed
/// units are the eligible ones whose predicted probability is closest to
/// 0.5, ties broken by a seeded shuffle.
pub fn inject_discrimination(
    ds: &Dataset,
    v1: f64,
    v2: f64,
    tree: &TreeModel,
    seed: u64,
) -> Result<(Dataset, ScenarioRecord)> {
    if !(v1 >= 0.0 && v2 >= 0.0 && v1 <= 100.0 && v2 <= 100.0) {
        return Err(Error::InvalidArgument(format!("percentages ({v1}, {v2}) outside [0, 100]")));
    }
    let proba = tree.predict_proba_all(ds)?;
    let (s, y) = (ds.sensitive(), ds.outcome());
    let mut rng = seed::rng(seed);
    let mut new_y = y.to_vec();
    let mut changed = [0usize; 2];
    // (group, from, to, percentage)
    for (group, from, to, v) in [(1u8, 1u8, 0u8, v1), (0, 0, 1, v2)] {
        let size = s.iter().filter(|&&x| x == group).count();
        let needed = flip_count(v, size);
        if needed == 0 {
            continue;
        }
        let mut eligible: Vec<usize> = (0..ds.n()).filter(|&i| s[i] == group && y[i] == from).collect();
        if eligible.len() < needed {
            return Err(Error::InsufficientUnits {
                what: format!("S={group}, Y={from} units to flip"),
                needed,
                available: eligible.len(),
            });
        }
        eligible.shuffle(&mut rng);
        eligible.sort_by(|&a, &b| (proba[a] - 0.5).abs().total_cmp(&(proba[b] - 0.5).abs()));
        for &i in &eligible[..needed] {
            new_y[i] = to;
        }
        changed[group as usize] = needed;
    }
    let mut rec = ScenarioRecord::new("inject", seed);
    rec.flipped_protected = Some(changed[1]);
    rec.flipped_unprotected = Some(changed[0]);
    rec.cells_changed = changed[0] + changed[1];
    rec.rows_considered = ds.n();
    Ok((ds.with_outcome(new_y)?, rec))
}

/// Noise variance giving `Z = S + ε` a point-biserial correlation of `rho`
/// with `S` when `P(S = 1) = p`: `p(1 − p)(1/ρ² − 1)`.
pub fn noise_variance(p: f64, rho: f64) -> f64 {
    p * (1.0 - p) * (1.0 / (rho * rho) - 1.0)
}

/// Appends a numeric column `name` with `Z = S + ε`, `ε ~ N(0, σ²)` i.i.d.,
/// where σ² is [`noise_variance`] for the observed share of protected units.
pub fn add_correlated_variable(ds: &Dataset, rho: f64, name: &str, seed: u64) -> Result<(Dataset, ScenarioRecord)> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!("rho = {rho} outside (0, 1)")));
    }
    let s = ds.sensitive();
    let p = s.iter().map(|&x| x as f64).sum::<f64>() / s.len() as f64;
    if p == 0.0 || p == 1.0 {
        return Err(Error::InvalidArgument("sensitive attribute has a single class".into()));
    }
    let var = noise_variance(p, rho);
    let normal = Normal::new(0.0, libm::sqrt(var)).map_err(|e| Error::InvalidArgument(format!("{e}")))?;
    let mut rng = seed::rng(seed);
    let z: Vec<f64> = s.iter().map(|&x| x as f64 + normal.sample(&mut rng)).collect();
    let out = ds.with_feature(Feature { name: name.into(), column: Column::Numeric(z) })?;
    let mut rec = ScenarioRecord::new("add_z", seed);
    rec.rows_considered = ds.n();
    rec.cells_changed = ds.n();
    rec.noise_variance = Some(var);
    Ok((out, rec))
}

//! Gower distance and the k-nearest-neighbour discrimination measures.
//!
//! For a protected unit `i`, `U⁽ᵏ'ˢ⁾ᵢ` is the set of its `k` nearest units
//! (excluding `i`) among those with `S = s`. Two measures compare the
//! outcome frequencies in the protected and the unprotected neighbourhoods:
//!
//! * `Δᵢ = #{j ∈ U¹ : yⱼ = yᵢ}/k − #{j ∈ U⁰ : yⱼ = yᵢ}/k`
//! * `δᵢ = #{j ∈ U¹ : yⱼ = 0}/k − #{j ∈ U⁰ : yⱼ = 0}/k`
//!
//! `δ > 0` means negative outcomes are more frequent among similar protected
//! units than among similar unprotected ones.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::dataset::{Column, Dataset};
use crate::score::{ScoreMethod, ScoreVector};
use crate::{par, Error, Result};

/// Default neighbourhood size.
pub const DEFAULT_K: usize = 32;

/// Variables compared by the Gower distance, with numeric ranges fixed on
/// one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GowerConfig {
    /// Included feature indices.
    pub vars: Vec<usize>,
    /// `(min, max)` for numeric variables, `None` for categorical ones;
    /// aligned with `vars`.
    pub ranges: Vec<Option<(f64, f64)>>,
}

impl GowerConfig {
    /// All features of `ds`, ranges computed over every row of `ds`.
    pub fn from_dataset(ds: &Dataset) -> Result<Self> {
        Self::for_vars(ds, &(0..ds.features().len()).collect::<Vec<_>>())
    }

    pub fn for_names(ds: &Dataset, names: &[&str]) -> Result<Self> {
        let vars = names.iter().map(|n| ds.feature_index(n)).collect::<Result<Vec<_>>>()?;
        Self::for_vars(ds, &vars)
    }

    pub fn for_vars(ds: &Dataset, vars: &[usize]) -> Result<Self> {
        if vars.is_empty() {
            return Err(Error::InvalidArgument("Gower distance needs at least one variable".into()));
        }
        let ranges = vars
            .iter()
            .map(|&v| match &ds.feature(v).column {
                Column::Numeric(x) => {
                    Some(x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| (lo.min(a), hi.max(a))))
                }
                Column::Categorical { .. } => None,
            })
            .collect();
        Ok(Self { vars: vars.to_vec(), ranges })
    }
}

/// Unweighted mean of per-variable dissimilarities between rows `u` and `v`
/// of `ds`: `|a − b| / range` for numeric variables (0 when the range is 0)
/// and a 0/1 mismatch for categorical ones.
pub fn gower_distance(ds: &Dataset, u: usize, v: usize, cfg: &GowerConfig) -> f64 {
    let mut sum = 0.0;
    for (&var, range) in cfg.vars.iter().zip(&cfg.ranges) {
        sum += match (&ds.feature(var).column, range) {
            (Column::Numeric(x), Some((lo, hi))) => numeric_term(x[u], x[v], hi - lo),
            (Column::Categorical { codes, .. }, _) => f64::from(u8::from(codes[u] != codes[v])),
            (Column::Numeric(x), None) => f64::from(u8::from(x[u] != x[v])),
        };
    }
    sum / cfg.vars.len() as f64
}

#[inline]
fn numeric_term(a: f64, b: f64, range: f64) -> f64 {
    if range == 0.0 {
        0.0
    } else {
        (a - b).abs() / range
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnMeasure {
    /// `Δ`: neighbours sharing the unit's own outcome.
    Delta,
    /// `δ`: neighbours with the negative outcome.
    DeltaPrime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Targets {
    Protected,
    All,
}

/// Dataset view specialised for repeated neighbour queries.
pub struct KnnIndex<'a> {
    ds: &'a Dataset,
    cfg: &'a GowerConfig,
    groups: [Vec<usize>; 2],
}

impl<'a> KnnIndex<'a> {
    pub fn new(ds: &'a Dataset, cfg: &'a GowerConfig) -> Self {
        let mut groups: [Vec<usize>; 2] = Default::default();
        for (i, &s) in ds.sensitive().iter().enumerate() {
            groups[s as usize].push(i);
        }
        Self { ds, cfg, groups }
    }

    /// The `k` units `j ≠ i` with `S = s` closest to `i`, nearest first.
    /// Ties at equal distance go to the smaller unit id. `None` when the
    /// group holds fewer than `k` such units.
    pub fn neighbours(&self, i: usize, k: usize, s: u8) -> Option<Vec<usize>> {
        let ids = self.ds.ids();
        let mut cand: Vec<(f64, u64, usize)> = self.groups[s as usize]
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| (gower_distance(self.ds, i, j, self.cfg), ids[j], j))
            .collect();
        if k == 0 || cand.len() < k {
            return None;
        }
        let by_rank = |a: &(f64, u64, usize), b: &(f64, u64, usize)| -> Ordering {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
        };
        if cand.len() > k {
            cand.select_nth_unstable_by(k - 1, by_rank);
            cand.truncate(k);
        }
        cand.sort_unstable_by(by_rank);
        Some(cand.into_iter().map(|c| c.2).collect())
    }

    /// Score of unit `i`; `None` when either neighbourhood is undefined.
    pub fn score(&self, i: usize, k: usize, measure: KnnMeasure) -> Option<f64> {
        let y = self.ds.outcome();
        let wanted = match measure {
            KnnMeasure::Delta => y[i],
            KnnMeasure::DeltaPrime => 0,
        };
        let protected = self.neighbours(i, k, 1)?;
        let unprotected = self.neighbours(i, k, 0)?;
        let hits = |set: &[usize]| set.iter().filter(|&&j| y[j] == wanted).count() as f64;
        Some(hits(&protected) / k as f64 - hits(&unprotected) / k as f64)
    }
}

/// Free-function form of [`KnnIndex::neighbours`].
pub fn knn_within_group(ds: &Dataset, i: usize, k: usize, s: u8, cfg: &GowerConfig) -> Option<Vec<usize>> {
    KnnIndex::new(ds, cfg).neighbours(i, k, s)
}

fn protected_unit(ds: &Dataset, i: usize) -> Result<()> {
    if ds.sensitive()[i] != 1 {
        return Err(Error::InvalidArgument(format!("unit {i} is not in the protected group")));
    }
    Ok(())
}

/// `Δᵢ` for a protected unit; `Ok(None)` when a neighbourhood is undefined.
pub fn delta_eq1(ds: &Dataset, i: usize, k: usize, cfg: &GowerConfig) -> Result<Option<f64>> {
    protected_unit(ds, i)?;
    Ok(KnnIndex::new(ds, cfg).score(i, k, KnnMeasure::Delta))
}

/// `δᵢ` for a protected unit; `Ok(None)` when a neighbourhood is undefined.
pub fn delta_prime_eq2(ds: &Dataset, i: usize, k: usize, cfg: &GowerConfig) -> Result<Option<f64>> {
    protected_unit(ds, i)?;
    Ok(KnnIndex::new(ds, cfg).score(i, k, KnnMeasure::DeltaPrime))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnScoreVector {
    pub values: Vec<Option<f64>>,
    pub unit_ids: Vec<u64>,
    pub k: usize,
    pub measure: KnnMeasure,
    pub targets: Targets,
}

impl KnnScoreVector {
    pub fn to_scores(&self) -> ScoreVector {
        ScoreVector {
            method: match self.measure {
                KnnMeasure::Delta => ScoreMethod::KnnDelta,
                KnnMeasure::DeltaPrime => ScoreMethod::KnnDeltaPrime,
            },
            unit_ids: self.unit_ids.clone(),
            values: self.values.clone(),
            note: format!("k={}", self.k),
        }
    }
}

/// Scores every target unit. Non-target units and units with an undefined
/// neighbourhood are `None`.
pub fn score_all_knn(ds: &Dataset, k: usize, measure: KnnMeasure, targets: Targets, cfg: &GowerConfig) -> KnnScoreVector {
    let index = KnnIndex::new(ds, cfg);
    let s = ds.sensitive();
    let values = par::map_indexed(ds.n(), |i| {
        if targets == Targets::Protected && s[i] != 1 {
            None
        } else {
            index.score(i, k, measure)
        }
    });
    KnnScoreVector { values, unit_ids: ds.ids().to_vec(), k, measure, targets }
}

/// Rows whose defined score is at least `tau`.
pub fn flag_discriminated(scores: &[Option<f64>], tau: f64) -> Vec<usize> {
    scores
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.filter(|&x| x >= tau).map(|_| i))
        .collect()
}

/// Describes a [`GowerConfig`] for metadata output.
pub fn describe(ds: &Dataset, cfg: &GowerConfig) -> Vec<(String, Option<(f64, f64)>)> {
    cfg.vars.iter().zip(&cfg.ranges).map(|(&v, r)| (ds.feature(v).name.clone(), *r)).collect()
}

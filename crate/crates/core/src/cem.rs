//! Coarsened exact matching and the repeated sequential CEM score `D`.
//!
//! For one ordering of the `K` feature variables, every unit starts from
//! `D⁽⁰⁾ = y − ȳ` where `ȳ` is the positive rate among all unprotected
//! (`S = 0`) units. At step `k` the units are stratified on the coarsened
//! values of the first `k` variables of the ordering; a unit whose cell holds
//! at least one unprotected unit other than itself is *matched* and gets
//! `D⁽ᵏ⁾ = y − ȳ_cell`, the others keep `D⁽ᵏ⁻¹⁾`. The score after `K` steps is
//! averaged over many random orderings.
//!
//! All scores lie in `[-1, 1]`; negative values mean the unit received a worse
//! outcome than comparable unprotected units.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{Column, Dataset};
use crate::score::{ScoreMethod, ScoreVector};
use crate::{par, seed, Error, Result};

/// Binning rule for one numeric variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum NumericRule {
    /// Equal-width bins, `ceil(log2 n) + 1` of them, over the observed range.
    Sturges,
    /// Equal-width bins over the observed range.
    EqualWidth { bins: usize },
    /// Interior break points: `c.len() + 1` bins, unbounded at both ends.
    /// A value equal to a cut point falls in the upper bin.
    Cutpoints { cutpoints: Vec<f64> },
    /// Full bin edges `e0 < e1 < … < em`: `m` bins, left-closed, the last
    /// one closed on both sides. Values outside `[e0, em]` are clamped to the
    /// boundary bin and counted as warnings.
    Edges { edges: Vec<f64> },
}

/// How features are coarsened before exact matching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarseningSpec {
    /// Rule for numeric variables without an explicit entry in `numeric`.
    #[serde(default = "default_rule")]
    pub default_numeric: NumericRule,
    #[serde(default)]
    pub numeric: BTreeMap<String, NumericRule>,
    /// Optional level grouping for categorical variables: level → group.
    /// Levels missing from a variable's map keep their own value.
    #[serde(default)]
    pub groups: BTreeMap<String, BTreeMap<String, String>>,
}

fn default_rule() -> NumericRule {
    NumericRule::Sturges
}

impl Default for CoarseningSpec {
    fn default() -> Self {
        Self { default_numeric: NumericRule::Sturges, numeric: BTreeMap::new(), groups: BTreeMap::new() }
    }
}

impl CoarseningSpec {
    pub fn with_rule(mut self, var: &str, rule: NumericRule) -> Self {
        self.numeric.insert(var.into(), rule);
        self
    }

    /// Replaces data-dependent rules by explicit edges computed on `ds`.
    /// Coarsening `ds` with the result gives the same table as with `self`.
    pub fn resolve(&self, ds: &Dataset) -> Result<CoarseningSpec> {
        for name in self.numeric.keys().chain(self.groups.keys()) {
            ds.feature_index(name)?;
        }
        let mut numeric = BTreeMap::new();
        for f in ds.features() {
            if let Column::Numeric(values) = &f.column {
                let rule = self.numeric.get(&f.name).unwrap_or(&self.default_numeric);
                numeric.insert(f.name.clone(), resolve_rule(rule, values)?);
            }
        }
        Ok(CoarseningSpec { default_numeric: self.default_numeric.clone(), numeric, groups: self.groups.clone() })
    }
}

/// Sturges bin count for `n` observations.
pub fn sturges_bins(n: usize) -> usize {
    if n <= 1 {
        return 1;
    }
    libm::ceil(libm::log2(n as f64)) as usize + 1
}

fn resolve_rule(rule: &NumericRule, values: &[f64]) -> Result<NumericRule> {
    let bins = match rule {
        NumericRule::Sturges => sturges_bins(values.len()),
        NumericRule::EqualWidth { bins } => *bins,
        NumericRule::Cutpoints { cutpoints } => {
            check_increasing(cutpoints, false)?;
            return Ok(rule.clone());
        }
        NumericRule::Edges { edges } => {
            check_increasing(edges, true)?;
            return Ok(rule.clone());
        }
    };
    if bins == 0 {
        return Err(Error::InvalidArgument("bin count must be positive".into()));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lo == hi || bins == 1 {
        return Ok(NumericRule::Edges { edges: vec![lo, hi] });
    }
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|j| lo + j as f64 * width).collect();
    edges.push(hi);
    Ok(NumericRule::Edges { edges })
}

fn check_increasing(points: &[f64], edges: bool) -> Result<()> {
    if edges && points.len() < 2 {
        return Err(Error::InvalidArgument("edges need at least two values".into()));
    }
    // A single-edge pair [v, v] is how a constant column is represented.
    let single_point = edges && points.len() == 2 && points[0] == points[1];
    if points.iter().any(|p| !p.is_finite()) || (!single_point && points.windows(2).any(|w| w[0] >= w[1])) {
        return Err(Error::InvalidArgument("cut points must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Features after coarsening: one small-integer code per unit and variable.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarsenedTable {
    pub names: Vec<String>,
    /// `codes[var][unit]`.
    pub codes: Vec<Vec<u32>>,
    /// Number of distinct codes available for each variable.
    pub cardinality: Vec<u32>,
    /// Human-readable label of each code.
    pub labels: Vec<Vec<String>>,
    /// Values clamped into a boundary bin, per variable name.
    pub clamped: Vec<(String, usize)>,
}

impl CoarsenedTable {
    pub fn n_units(&self) -> usize {
        self.codes.first().map_or(0, Vec::len)
    }

    pub fn n_vars(&self) -> usize {
        self.codes.len()
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        self.names.iter().position(|n| n == name).ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// Coarsened values of `unit` on `vars`.
    pub fn signature(&self, unit: usize, vars: &[usize]) -> Vec<u32> {
        vars.iter().map(|&v| self.codes[v][unit]).collect()
    }
}

/// Coarsens every feature of `ds`: numeric values become bin indices,
/// categorical values pass through (optionally grouped).
pub fn coarsen(ds: &Dataset, spec: &CoarseningSpec) -> Result<CoarsenedTable> {
    let resolved = spec.resolve(ds)?;
    let mut table = CoarsenedTable {
        names: Vec::new(),
        codes: Vec::new(),
        cardinality: Vec::new(),
        labels: Vec::new(),
        clamped: Vec::new(),
    };
    for f in ds.features() {
        table.names.push(f.name.clone());
        match &f.column {
            Column::Numeric(values) => {
                let rule = &resolved.numeric[&f.name];
                let (codes, labels, clamped) = bin_numeric(values, rule);
                if clamped > 0 {
                    table.clamped.push((f.name.clone(), clamped));
                }
                table.cardinality.push(labels.len() as u32);
                table.codes.push(codes);
                table.labels.push(labels);
            }
            Column::Categorical { levels, codes } => {
                let grouping = resolved.groups.get(&f.name);
                let mut labels: Vec<String> = Vec::new();
                let remap: Vec<u32> = levels
                    .iter()
                    .map(|level| {
                        let label = grouping.and_then(|g| g.get(level)).unwrap_or(level);
                        match labels.iter().position(|l| l == label) {
                            Some(p) => p as u32,
                            None => {
                                labels.push(label.clone());
                                (labels.len() - 1) as u32
                            }
                        }
                    })
                    .collect();
                table.cardinality.push(labels.len().max(1) as u32);
                table.codes.push(codes.iter().map(|&c| remap[c as usize]).collect());
                table.labels.push(labels);
            }
        }
    }
    Ok(table)
}

/// Bin index of `v` under a resolved rule, and whether it was clamped.
pub fn bin_of(v: f64, rule: &NumericRule) -> (u32, bool) {
    match rule {
        NumericRule::Cutpoints { cutpoints } => (cutpoints.partition_point(|&c| c <= v) as u32, false),
        NumericRule::Edges { edges } => {
            let m = edges.len() - 1;
            let first = edges[0];
            let last = edges[m];
            if v < first {
                return (0, true);
            }
            if v > last {
                return ((m - 1) as u32, true);
            }
            let interior = &edges[1..m];
            (interior.partition_point(|&e| e <= v) as u32, false)
        }
        NumericRule::Sturges | NumericRule::EqualWidth { .. } => {
            unreachable!("data-dependent rules are resolved before binning")
        }
    }
}

fn bin_numeric(values: &[f64], rule: &NumericRule) -> (Vec<u32>, Vec<String>, usize) {
    let mut clamped = 0;
    let codes = values
        .iter()
        .map(|&v| {
            let (b, c) = bin_of(v, rule);
            clamped += c as usize;
            b
        })
        .collect();
    let labels = match rule {
        NumericRule::Cutpoints { cutpoints } => {
            let mut labels = Vec::with_capacity(cutpoints.len() + 1);
            let mut lo = String::from("-inf");
            for c in cutpoints {
                labels.push(format!("[{lo}, {c})"));
                lo = format!("{c}");
            }
            labels.push(format!("[{lo}, inf)"));
            labels
        }
        NumericRule::Edges { edges } => {
            let m = edges.len() - 1;
            (0..m)
                .map(|b| {
                    let close = if b + 1 == m { ']' } else { ')' };
                    format!("[{}, {}{close}", edges[b], edges[b + 1])
                })
                .collect()
        }
        _ => unreachable!("resolved rule"),
    };
    (codes, labels, clamped)
}

/// Units grouped by their coarsened signature on an ordered variable subset.
#[derive(Debug, Clone, PartialEq)]
pub struct Stratification {
    pub vars: Vec<usize>,
    /// Cell index of every unit.
    pub cell_of: Vec<u32>,
    /// Members of every cell, ascending; cells are numbered by first member.
    pub cells: Vec<Vec<usize>>,
}

impl Stratification {
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell(&self, unit: usize) -> &[usize] {
        &self.cells[self.cell_of[unit] as usize]
    }
}

/// Reusable scratch space for refining a partition by one more variable.
#[derive(Default)]
struct Refiner {
    slots: Vec<u32>,
    touched: Vec<usize>,
}

impl Refiner {
    /// Splits every cell by `codes`; new cells are numbered by first member.
    /// Returns the new cell count.
    fn refine(&mut self, cell_of: &mut [u32], n_cells: usize, codes: &[u32], cardinality: u32) -> usize {
        let size = n_cells * cardinality as usize;
        if self.slots.len() < size {
            self.slots.resize(size, u32::MAX);
        }
        let mut next = 0u32;
        for (c, &code) in cell_of.iter_mut().zip(codes) {
            let key = *c as usize * cardinality as usize + code as usize;
            let slot = &mut self.slots[key];
            if *slot == u32::MAX {
                *slot = next;
                next += 1;
                self.touched.push(key);
            }
            *c = *slot;
        }
        for key in self.touched.drain(..) {
            self.slots[key] = u32::MAX;
        }
        next as usize
    }
}

/// Exact grouping of all units on `vars`. With no variables there is one
/// cell holding every unit.
pub fn stratify(table: &CoarsenedTable, vars: &[usize]) -> Stratification {
    let n = table.n_units();
    let mut cell_of = vec![0u32; n];
    let mut n_cells = usize::from(n > 0);
    let mut refiner = Refiner::default();
    for &v in vars {
        n_cells = refiner.refine(&mut cell_of, n_cells, &table.codes[v], table.cardinality[v]);
    }
    let mut cells = vec![Vec::new(); n_cells];
    for (i, &c) in cell_of.iter().enumerate() {
        cells[c as usize].push(i);
    }
    Stratification { vars: vars.to_vec(), cell_of, cells }
}

/// Units whose cell contains at least one unprotected unit other than
/// themselves (or including themselves when `include_self`).
pub fn matched_units(strat: &Stratification, sensitive: &[u8], include_self: bool) -> Vec<usize> {
    let mut unprotected = vec![0usize; strat.n_cells()];
    for (i, &c) in strat.cell_of.iter().enumerate() {
        unprotected[c as usize] += usize::from(sensitive[i] == 0);
    }
    (0..strat.cell_of.len())
        .filter(|&i| {
            let own = usize::from(!include_self && sensitive[i] == 0);
            unprotected[strat.cell_of[i] as usize] > own
        })
        .collect()
}

/// Coarsened data prepared for sequential passes.
#[derive(Debug, Clone)]
pub struct SequentialCem {
    table: CoarsenedTable,
    sensitive: Vec<u8>,
    outcome: Vec<u8>,
    unit_ids: Vec<u64>,
    global_rate: f64,
    include_self: bool,
    coarsening: CoarseningSpec,
}

impl SequentialCem {
    /// Coarsens `ds` with `spec`. Fails without features or without any
    /// unprotected unit.
    pub fn new(ds: &Dataset, spec: &CoarseningSpec) -> Result<Self> {
        if ds.features().is_empty() {
            return Err(Error::InvalidArgument("sequential CEM needs at least one feature".into()));
        }
        let coarsening = spec.resolve(ds)?;
        let table = coarsen(ds, &coarsening)?;
        let (mut ref_n, mut ref_pos) = (0usize, 0usize);
        for (&s, &y) in ds.sensitive().iter().zip(ds.outcome()) {
            if s == 0 {
                ref_n += 1;
                ref_pos += y as usize;
            }
        }
        if ref_n == 0 {
            return Err(Error::NoReferenceGroup);
        }
        Ok(Self {
            table,
            sensitive: ds.sensitive().to_vec(),
            outcome: ds.outcome().to_vec(),
            unit_ids: ds.ids().to_vec(),
            global_rate: ref_pos as f64 / ref_n as f64,
            include_self: false,
            coarsening,
        })
    }

    /// Count a unit with `S = 0` in its own reference frequency.
    pub fn include_self(mut self, yes: bool) -> Self {
        self.include_self = yes;
        self
    }

    pub fn table(&self) -> &CoarsenedTable {
        &self.table
    }

    /// The coarsening actually used, with data-dependent rules made explicit.
    pub fn coarsening(&self) -> &CoarseningSpec {
        &self.coarsening
    }

    pub fn n_vars(&self) -> usize {
        self.table.n_vars()
    }

    /// Step-0 score: `y − P̂(Y=1 | S=0)` for every unit.
    pub fn initial_scores(&self) -> Vec<f64> {
        self.outcome.iter().map(|&y| y as f64 - self.global_rate).collect()
    }

    /// One sequential pass over `order` (a permutation of the variables).
    pub fn pass(&self, order: &[usize]) -> Result<Vec<f64>> {
        let k = self.n_vars();
        let mut seen = vec![false; k];
        if order.len() != k || order.iter().any(|&v| v >= k || core::mem::replace(&mut seen[v], true)) {
            return Err(Error::InvalidArgument(format!("{order:?} is not a permutation of 0..{k}")));
        }
        Ok(self.pass_unchecked(order, &mut Refiner::default()))
    }

    fn pass_unchecked(&self, order: &[usize], refiner: &mut Refiner) -> Vec<f64> {
        let n = self.outcome.len();
        let mut scores = self.initial_scores();
        let mut cell_of = vec![0u32; n];
        let mut n_cells = 1;
        let mut ref_n: Vec<u32> = Vec::new();
        let mut ref_pos: Vec<u32> = Vec::new();
        for &var in order {
            n_cells = refiner.refine(&mut cell_of, n_cells, &self.table.codes[var], self.table.cardinality[var]);
            ref_n.clear();
            ref_n.resize(n_cells, 0);
            ref_pos.clear();
            ref_pos.resize(n_cells, 0);
            for ((&c, &s), &y) in cell_of.iter().zip(&self.sensitive).zip(&self.outcome) {
                if s == 0 {
                    ref_n[c as usize] += 1;
                    ref_pos[c as usize] += y as u32;
                }
            }
            for i in 0..n {
                let c = cell_of[i] as usize;
                let (mut rn, mut rp) = (ref_n[c], ref_pos[c]);
                if !self.include_self && self.sensitive[i] == 0 {
                    rn -= 1;
                    rp -= self.outcome[i] as u32;
                }
                if rn > 0 {
                    scores[i] = self.outcome[i] as f64 - rp as f64 / rn as f64;
                }
            }
        }
        scores
    }

    /// Averages passes over orderings drawn per `cfg`.
    pub fn repeated(&self, cfg: &CemConfig) -> Result<CemScoreVector> {
        let k = self.n_vars();
        let (orders, early_stop): (Vec<Vec<usize>>, _) = match cfg.orders {
            OrderSampling::Random => {
                if cfg.repetitions == 0 {
                    return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
                }
                ((0..cfg.repetitions).map(|r| permutation(cfg.seed, r, k)).collect(), cfg.early_stop)
            }
            OrderSampling::Exhaustive => {
                if k > MAX_EXHAUSTIVE_VARS {
                    return Err(Error::InvalidArgument(format!(
                        "exhaustive enumeration is limited to {MAX_EXHAUSTIVE_VARS} variables, got {k}"
                    )));
                }
                (all_permutations(k), None)
            }
        };
        let n = self.outcome.len();
        let batch = match early_stop {
            Some(es) => (es.patience.max(1) * 2).max(16),
            None => orders.len(),
        };
        let mut means = vec![0.0f64; n];
        let mut trace = Vec::new();
        let mut used = 0usize;
        let mut below = 0usize;
        let mut converged = false;
        'outer: for chunk in orders.chunks(batch) {
            let passes = par::map_indexed(chunk.len(), |j| self.pass_unchecked(&chunk[j], &mut Refiner::default()));
            for pass in passes {
                used += 1;
                let mut change = 0.0f64;
                for (m, x) in means.iter_mut().zip(pass) {
                    let next = *m + (x - *m) / used as f64;
                    change = change.max((next - *m).abs());
                    *m = next;
                }
                if used > 1 {
                    trace.push(change);
                    if let Some(es) = early_stop {
                        below = if change < es.tolerance { below + 1 } else { 0 };
                        if below >= es.patience {
                            converged = true;
                            break 'outer;
                        }
                    }
                }
            }
        }
        Ok(CemScoreVector {
            values: means,
            unit_ids: self.unit_ids.clone(),
            repetitions: used,
            seed: cfg.seed,
            trace,
            converged,
            include_self: self.include_self,
            coarsening: self.coarsening.clone(),
        })
    }
}

/// Largest variable count accepted for exhaustive ordering enumeration.
pub const MAX_EXHAUSTIVE_VARS: usize = 8;

/// The ordering used by repetition `rep` under `seed`.
pub fn permutation(seed: u64, rep: usize, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(&mut seed::stream_rng(seed, rep as u64));
    order
}

/// All orderings of `0..k` in lexicographic order.
pub fn all_permutations(k: usize) -> Vec<Vec<usize>> {
    let mut current: Vec<usize> = (0..k).collect();
    let mut out = vec![current.clone()];
    loop {
        let Some(i) = (1..k).rev().find(|&i| current[i - 1] < current[i]) else {
            return out;
        };
        let j = (i..k).rev().find(|&j| current[j] > current[i - 1]).expect("successor exists");
        current.swap(i - 1, j);
        current[i..].reverse();
        out.push(current.clone());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStop {
    /// Stop once the largest per-unit change of the running mean stays below this …
    pub tolerance: f64,
    /// … for this many consecutive repetitions.
    pub patience: usize,
}

impl Default for EarlyStop {
    fn default() -> Self {
        Self { tolerance: 1e-3, patience: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderSampling {
    /// Uniform random orderings, drawn independently per repetition.
    Random,
    /// Every ordering exactly once (small `K` only); ignores `repetitions`.
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CemConfig {
    /// Upper bound on the number of orderings averaged.
    pub repetitions: usize,
    pub seed: u64,
    pub early_stop: Option<EarlyStop>,
    pub orders: OrderSampling,
    pub include_self: bool,
}

impl Default for CemConfig {
    fn default() -> Self {
        Self {
            repetitions: 100,
            seed: 0,
            early_stop: Some(EarlyStop::default()),
            orders: OrderSampling::Random,
            include_self: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CemScoreVector {
    pub values: Vec<f64>,
    pub unit_ids: Vec<u64>,
    /// Orderings actually averaged.
    pub repetitions: usize,
    pub seed: u64,
    /// Largest per-unit change of the running mean after each repetition
    /// from the second on.
    pub trace: Vec<f64>,
    pub converged: bool,
    pub include_self: bool,
    /// Resolved coarsening (explicit bin edges).
    pub coarsening: CoarseningSpec,
}

impl CemScoreVector {
    pub fn to_scores(&self) -> ScoreVector {
        ScoreVector {
            method: ScoreMethod::Cem,
            unit_ids: self.unit_ids.clone(),
            values: self.values.iter().map(|&v| Some(v)).collect(),
            note: format!("repetitions={} seed={}", self.repetitions, self.seed),
        }
    }
}

/// Score vector of a single pass over `order`.
pub fn sequential_pass(ds: &Dataset, spec: &CoarseningSpec, order: &[usize]) -> Result<Vec<f64>> {
    SequentialCem::new(ds, spec)?.pass(order)
}

/// Repeated sequential CEM with the default (self-excluding) matching rule
/// unless `cfg.include_self` is set.
pub fn repeated_cem(ds: &Dataset, spec: &CoarseningSpec, cfg: &CemConfig) -> Result<CemScoreVector> {
    SequentialCem::new(ds, spec)?.include_self(cfg.include_self).repeated(cfg)
}

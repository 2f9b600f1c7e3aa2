//! Binary classification tree (CART, Gini impurity) with weakest-link
//! cost-complexity pruning.
//!
//! The tree only ever sees the dataset's feature columns, so the sensitive
//! attribute can never be a split variable. Numeric splits send `x ≤ t` left;
//! categorical splits are one level against the rest, the level going left.
//!
//! Split quality is compared exactly in integer arithmetic, so fitting is
//! reproducible bit for bit and ties are broken by (lower feature index,
//! lower threshold or level index).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{Column, Dataset};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Pruning {
    None,
    Alpha { alpha: f64 },
    /// Pick α by k-fold cross-validated misclassification.
    CrossValidated { folds: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub pruning: Pruning,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { max_depth: 10, min_leaf: 20, pruning: Pruning::None }
    }
}

impl TreeParams {
    /// Default growth with α chosen by 5-fold cross-validation.
    pub fn pruned(seed: u64) -> Self {
        Self { pruning: Pruning::CrossValidated { folds: 5, seed }, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitRule {
    /// Left when `x <= threshold`.
    Threshold(f64),
    /// Left when the value equals this level.
    Level(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NodeKind {
    Leaf,
    Split {
        feature: usize,
        rule: SplitRule,
        left: usize,
        right: usize,
        /// Direction for categorical levels never seen in training.
        majority_left: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// Training units reaching this node.
    pub n: usize,
    pub positives: usize,
    pub depth: usize,
    #[serde(flatten)]
    pub kind: NodeKind,
}

impl Node {
    pub fn probability(&self) -> f64 {
        self.positives as f64 / self.n as f64
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf)
    }

    /// Training units this node would misclassify as a leaf.
    fn errors(&self) -> usize {
        self.positives.min(self.n - self.positives)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    /// Node arena; the root is `nodes[0]`.
    pub nodes: Vec<Node>,
    pub feature_names: Vec<String>,
    /// Training levels of categorical features (`None` for numeric ones).
    pub feature_levels: Vec<Option<Vec<String>>>,
    pub params: TreeParams,
    /// Complexity parameter applied after growth (0 when unpruned).
    pub alpha: f64,
}

enum FitColumn<'a> {
    Numeric(&'a [f64]),
    Categorical { codes: &'a [u32], levels: usize },
}

struct Candidate {
    feature: usize,
    rule: RawRule,
    /// Weighted child impurity as an exact fraction.
    num: u128,
    den: u128,
}

#[derive(Clone, Copy)]
enum RawRule {
    Threshold(f64),
    Level(u32),
}

/// `a/b < c/d` for non-negative fractions with positive denominators.
fn frac_lt(a: u128, b: u128, c: u128, d: u128) -> bool {
    a * d < c * b
}

/// Half the Gini impurity times the node size, `pos·neg/n`, as a fraction
/// summed over both children: `(pl·ql·nr + pr·qr·nl) / (nl·nr)`.
fn child_score(pl: usize, nl: usize, pr: usize, nr: usize) -> (u128, u128) {
    let (pl, nl, pr, nr) = (pl as u128, nl as u128, pr as u128, nr as u128);
    (pl * (nl - pl) * nr + pr * (nr - pr) * nl, nl * nr)
}

struct Grower<'a> {
    cols: Vec<FitColumn<'a>>,
    y: &'a [u8],
    params: TreeParams,
    nodes: Vec<Node>,
    levels: Vec<Option<Vec<String>>>,
}

impl Grower<'_> {
    fn grow(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let n = rows.len();
        let positives = rows.iter().filter(|&&i| self.y[i] == 1).count();
        let id = self.nodes.len();
        self.nodes.push(Node { n, positives, depth, kind: NodeKind::Leaf });
        if depth >= self.params.max_depth || positives == 0 || positives == n {
            return id;
        }
        let Some(best) = self.best_split(rows, positives) else {
            return id;
        };
        let goes_left = |i: usize| match (&self.cols[best.feature], best.rule) {
            (FitColumn::Numeric(x), RawRule::Threshold(t)) => x[i] <= t,
            (FitColumn::Categorical { codes, .. }, RawRule::Level(l)) => codes[i] == l,
            _ => unreachable!("rule matches column type"),
        };
        // Stable partition keeps row order inside children.
        let (mut left, mut right): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| goes_left(i));
        let majority_left = left.len() >= right.len();
        let rule = match best.rule {
            RawRule::Threshold(t) => SplitRule::Threshold(t),
            RawRule::Level(l) => SplitRule::Level(
                self.levels[best.feature].as_ref().expect("categorical levels")[l as usize].clone(),
            ),
        };
        let l = self.grow(&mut left, depth + 1);
        let r = self.grow(&mut right, depth + 1);
        self.nodes[id].kind = NodeKind::Split { feature: best.feature, rule, left: l, right: r, majority_left };
        id
    }

    fn best_split(&self, rows: &mut [usize], positives: usize) -> Option<Candidate> {
        let n = rows.len();
        let min_leaf = self.params.min_leaf.max(1);
        if n < 2 * min_leaf {
            return None;
        }
        // Parent score pos·neg/n; a split must strictly improve on it.
        let mut best: Option<Candidate> = None;
        let (parent_num, parent_den) = ((positives * (n - positives)) as u128, n as u128);
        let consider = |c: Candidate, best: &mut Option<Candidate>| {
            let beats_parent = frac_lt(c.num, c.den, parent_num, parent_den);
            let beats_best = best.as_ref().map_or(true, |b| frac_lt(c.num, c.den, b.num, b.den));
            if beats_parent && beats_best {
                *best = Some(c);
            }
        };
        for (f, col) in self.cols.iter().enumerate() {
            match col {
                FitColumn::Numeric(x) => {
                    rows.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
                    let mut pl = 0;
                    for k in 0..n - 1 {
                        pl += self.y[rows[k]] as usize;
                        let nl = k + 1;
                        let (a, b) = (x[rows[k]], x[rows[k + 1]]);
                        if a == b || nl < min_leaf || n - nl < min_leaf {
                            continue;
                        }
                        let mut t = a + (b - a) / 2.0;
                        if t >= b {
                            t = a;
                        }
                        let (num, den) = child_score(pl, nl, positives - pl, n - nl);
                        consider(Candidate { feature: f, rule: RawRule::Threshold(t), num, den }, &mut best);
                    }
                }
                FitColumn::Categorical { codes, levels } => {
                    let mut counts = vec![(0usize, 0usize); *levels];
                    for &i in rows.iter() {
                        let c = &mut counts[codes[i] as usize];
                        c.0 += 1;
                        c.1 += self.y[i] as usize;
                    }
                    for (level, &(nl, pl)) in counts.iter().enumerate() {
                        if nl < min_leaf || n - nl < min_leaf {
                            continue;
                        }
                        let (num, den) = child_score(pl, nl, positives - pl, n - nl);
                        consider(Candidate { feature: f, rule: RawRule::Level(level as u32), num, den }, &mut best);
                    }
                }
            }
        }
        best
    }
}

/// Grows a tree on all features of `train` and applies `params.pruning`.
pub fn fit(train: &Dataset, params: &TreeParams) -> Result<TreeModel> {
    let rows: Vec<usize> = (0..train.n()).collect();
    fit_rows(train, &rows, params)
}

fn fit_rows(train: &Dataset, rows: &[usize], params: &TreeParams) -> Result<TreeModel> {
    if rows.is_empty() {
        return Err(Error::Empty);
    }
    if train.features().is_empty() {
        return Err(Error::InvalidArgument("a tree needs at least one feature".into()));
    }
    let cols = train
        .features()
        .iter()
        .map(|f| match &f.column {
            Column::Numeric(x) => FitColumn::Numeric(x),
            Column::Categorical { codes, levels } => FitColumn::Categorical { codes, levels: levels.len() },
        })
        .collect();
    let levels: Vec<Option<Vec<String>>> = train
        .features()
        .iter()
        .map(|f| match &f.column {
            Column::Numeric(_) => None,
            Column::Categorical { levels, .. } => Some(levels.clone()),
        })
        .collect();
    let mut grower = Grower { cols, y: train.outcome(), params: *params, nodes: Vec::new(), levels: levels.clone() };
    let mut work = rows.to_vec();
    grower.grow(&mut work, 0);
    let full = TreeModel {
        nodes: grower.nodes,
        feature_names: train.features().iter().map(|f| f.name.clone()).collect(),
        feature_levels: levels,
        params: *params,
        alpha: 0.0,
    };
    match params.pruning {
        Pruning::None => Ok(full),
        Pruning::Alpha { alpha } => Ok(full.prune(alpha)),
        Pruning::CrossValidated { folds, seed } => {
            let alpha = cross_validate_alpha(train, rows, params, &full, folds, seed)?;
            Ok(full.prune(alpha))
        }
    }
}

fn cross_validate_alpha(
    train: &Dataset,
    rows: &[usize],
    params: &TreeParams,
    full: &TreeModel,
    folds: usize,
    seed: u64,
) -> Result<f64> {
    let candidates = alpha_candidates(&full.pruning_sequence());
    if candidates.len() == 1 || folds < 2 || rows.len() < folds {
        return Ok(candidates[0]);
    }
    let mut order = rows.to_vec();
    order.shuffle(&mut seed::rng(seed));
    let unpruned = TreeParams { pruning: Pruning::None, ..*params };
    let mut errors = vec![0usize; candidates.len()];
    for fold in 0..folds {
        let (mut fit_part, mut held): (Vec<usize>, Vec<usize>) = (Vec::new(), Vec::new());
        for (pos, &r) in order.iter().enumerate() {
            if pos % folds == fold {
                held.push(r);
            } else {
                fit_part.push(r);
            }
        }
        fit_part.sort_unstable();
        let tree = fit_rows(train, &fit_part, &unpruned)?;
        for (c, &alpha) in candidates.iter().enumerate() {
            let pruned = tree.prune(alpha);
            let router = pruned.router(train)?;
            errors[c] += held.iter().filter(|&&i| u8::from(router.proba(train, i) >= 0.5) != train.outcome()[i]).count();
        }
    }
    // Lowest error; ties go to the larger α (smaller tree).
    let best = (0..candidates.len())
        .min_by(|&a, &b| errors[a].cmp(&errors[b]).then(b.cmp(&a)))
        .expect("at least one candidate");
    Ok(candidates[best])
}

/// One α inside each interval of the weakest-link sequence, plus 0.
fn alpha_candidates(sequence: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0];
    for (j, &a) in sequence.iter().enumerate() {
        let next = sequence.get(j + 1).copied().unwrap_or(a + 1.0);
        out.push(a + (next - a) / 2.0);
    }
    out
}

impl TreeModel {
    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn n_leaves(&self) -> usize {
        self.reachable().into_iter().filter(|&i| self.nodes[i].is_leaf()).count()
    }

    pub fn depth(&self) -> usize {
        self.reachable().into_iter().map(|i| self.nodes[i].depth).max().unwrap_or(0)
    }

    fn reachable(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![0];
        while let Some(i) = stack.pop() {
            out.push(i);
            if let NodeKind::Split { left, right, .. } = self.nodes[i].kind {
                stack.push(right);
                stack.push(left);
            }
        }
        out
    }

    /// Per internal node: (leaf count, leaf errors) of its subtree.
    fn subtree_stats(&self) -> Vec<(usize, usize)> {
        let mut stats = vec![(0, 0); self.nodes.len()];
        for i in self.reachable().into_iter().rev() {
            stats[i] = match self.nodes[i].kind {
                NodeKind::Leaf => (1, self.nodes[i].errors()),
                NodeKind::Split { left, right, .. } => (stats[left].0 + stats[right].0, stats[left].1 + stats[right].1),
            };
        }
        stats
    }

    /// Link strength `g(t) = (R(t) − R(T_t)) / (|leaves(T_t)| − 1)` of every
    /// reachable internal node, with `R` the resubstitution error rate over
    /// the root's training units.
    pub fn link_strengths(&self) -> Vec<(usize, f64)> {
        let stats = self.subtree_stats();
        let total = self.nodes[0].n as f64;
        self.reachable()
            .into_iter()
            .filter(|&i| !self.nodes[i].is_leaf())
            .map(|i| {
                let (leaves, leaf_err) = stats[i];
                let gain = (self.nodes[i].errors() - leaf_err) as f64;
                (i, gain / (total * (leaves - 1) as f64))
            })
            .collect()
    }

    /// Weakest-link pruning: repeatedly collapses the internal nodes with the
    /// smallest link strength while that strength is strictly below `alpha`.
    /// `prune(0.0)` returns the tree unchanged, `prune(f64::INFINITY)` the root leaf.
    pub fn prune(&self, alpha: f64) -> TreeModel {
        let mut tree = self.clone();
        loop {
            let links = tree.link_strengths();
            let Some(weakest) = links.iter().map(|l| l.1).min_by(f64::total_cmp) else {
                break;
            };
            if weakest >= alpha {
                break;
            }
            for (i, g) in links {
                if g == weakest {
                    tree.nodes[i].kind = NodeKind::Leaf;
                }
            }
        }
        let mut out = tree.compact();
        if alpha > 0.0 {
            out.alpha = alpha;
        }
        out
    }

    /// α values at which successive weakest links are cut, ascending.
    pub fn pruning_sequence(&self) -> Vec<f64> {
        let mut tree = self.clone();
        let mut seq = Vec::new();
        loop {
            let links = tree.link_strengths();
            let Some(weakest) = links.iter().map(|l| l.1).min_by(f64::total_cmp) else {
                return seq;
            };
            seq.push(weakest);
            for (i, g) in links {
                if g == weakest {
                    tree.nodes[i].kind = NodeKind::Leaf;
                }
            }
        }
    }

    /// Drops unreachable nodes, renumbering in depth-first order.
    fn compact(&self) -> TreeModel {
        let mut nodes = Vec::new();
        self.copy_subtree(0, &mut nodes);
        TreeModel { nodes, ..self.clone() }
    }

    fn copy_subtree(&self, i: usize, out: &mut Vec<Node>) -> usize {
        let id = out.len();
        out.push(Node { kind: NodeKind::Leaf, ..self.nodes[i].clone() });
        if let NodeKind::Split { feature, ref rule, left, right, majority_left } = self.nodes[i].kind {
            let l = self.copy_subtree(left, out);
            let r = self.copy_subtree(right, out);
            out[id].kind = NodeKind::Split { feature, rule: rule.clone(), left: l, right: r, majority_left };
        }
        id
    }

    /// Resolves this tree's features against `ds` (by name) for fast routing.
    pub fn router<'a>(&'a self, ds: &Dataset) -> Result<Router<'a>> {
        let mut features = Vec::with_capacity(self.feature_names.len());
        for (name, levels) in self.feature_names.iter().zip(&self.feature_levels) {
            let idx = ds.feature_index(name)?;
            let mapping = match (&ds.feature(idx).column, levels) {
                (Column::Numeric(_), None) => None,
                (Column::Categorical { levels: ds_levels, .. }, Some(train_levels)) => {
                    // Dataset code -> training level index, if seen in training.
                    Some(ds_levels.iter().map(|l| train_levels.iter().position(|t| t == l)).collect())
                }
                _ => return Err(Error::Schema(format!("feature `{name}` changed type"))),
            };
            features.push((idx, mapping));
        }
        let level_codes = self
            .nodes
            .iter()
            .map(|node| match &node.kind {
                NodeKind::Split { feature, rule: SplitRule::Level(l), .. } => self.feature_levels[*feature]
                    .as_ref()
                    .and_then(|levels| levels.iter().position(|x| x == l)),
                _ => None,
            })
            .collect();
        Ok(Router { tree: self, features, level_codes })
    }

    /// Leaf probability for row `row` of `ds`.
    pub fn predict_proba(&self, ds: &Dataset, row: usize) -> Result<f64> {
        Ok(self.router(ds)?.proba(ds, row))
    }

    pub fn predict_label(&self, ds: &Dataset, row: usize, threshold: f64) -> Result<u8> {
        Ok(label(self.predict_proba(ds, row)?, threshold))
    }

    pub fn predict_proba_all(&self, ds: &Dataset) -> Result<Vec<f64>> {
        let router = self.router(ds)?;
        Ok((0..ds.n()).map(|i| router.proba(ds, i)).collect())
    }

    pub fn predict_labels(&self, ds: &Dataset, threshold: f64) -> Result<Vec<u8>> {
        Ok(self.predict_proba_all(ds)?.into_iter().map(|p| label(p, threshold)).collect())
    }

    /// Sum over leaves of `n · gini`, used to compare trees of different depth.
    pub fn weighted_leaf_impurity(&self) -> f64 {
        self.reachable()
            .into_iter()
            .filter(|&i| self.nodes[i].is_leaf())
            .map(|i| {
                let p = self.nodes[i].probability();
                self.nodes[i].n as f64 * 2.0 * p * (1.0 - p)
            })
            .sum()
    }

    /// Indices of the features used by any reachable split.
    pub fn split_features(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .reachable()
            .into_iter()
            .filter_map(|i| match self.nodes[i].kind {
                NodeKind::Split { feature, .. } => Some(feature),
                NodeKind::Leaf => None,
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// 1 iff `proba >= threshold`.
pub fn label(proba: f64, threshold: f64) -> u8 {
    u8::from(proba >= threshold)
}

/// A tree bound to one dataset's column layout.
pub struct Router<'a> {
    tree: &'a TreeModel,
    features: Vec<(usize, Option<Vec<Option<usize>>>)>,
    level_codes: Vec<Option<usize>>,
}

impl Router<'_> {
    pub fn leaf(&self, ds: &Dataset, row: usize) -> usize {
        let mut i = 0;
        loop {
            match &self.tree.nodes[i].kind {
                NodeKind::Leaf => return i,
                NodeKind::Split { feature, rule, left, right, majority_left } => {
                    let (col, mapping) = &self.features[*feature];
                    let go_left = match (&ds.feature(*col).column, rule) {
                        (Column::Numeric(x), SplitRule::Threshold(t)) => x[row].partial_cmp(t) != Some(Ordering::Greater),
                        (Column::Categorical { codes, .. }, SplitRule::Level(_)) => {
                            let mapping = mapping.as_ref().expect("categorical mapping");
                            match mapping[codes[row] as usize] {
                                Some(train_level) => Some(train_level) == self.level_codes[i],
                                None => *majority_left,
                            }
                        }
                        _ => unreachable!("router checked column types"),
                    };
                    i = if go_left { *left } else { *right };
                }
            }
        }
    }

    pub fn proba(&self, ds: &Dataset, row: usize) -> f64 {
        self.tree.nodes[self.leaf(ds, row)].probability()
    }
}

//! Brute-force reference implementations the library is checked against.

use seqcem_core::dataset::{Column, Dataset};
use seqcem_core::tree::{NodeKind, SplitRule, TreeModel};

type Predicate = Box<dyn Fn(usize) -> bool>;
type Labelled = (usize, u8);

// Direct transcription of the algorithm over explicit unit sets, one step at
// a time, with coarsening done here from the cut points.
pub fn oracle_codes(ds: &Dataset, cuts: &[f64]) -> Vec<Vec<u32>> {
    ds.features()
        .iter()
        .map(|f| match &f.column {
            Column::Numeric(x) => x.iter().map(|&v| cuts.iter().filter(|&&c| v >= c).count() as u32).collect(),
            Column::Categorical { codes, .. } => codes.clone(),
        })
        .collect()
}

pub fn oracle_pass(ds: &Dataset, codes: &[Vec<u32>], order: &[usize], include_self: bool) -> Vec<f64> {
    let (s, y) = (ds.sensitive(), ds.outcome());
    let n = ds.n();
    let ref_units: Vec<usize> = (0..n).filter(|&j| s[j] == 0).collect();
    let pos = ref_units.iter().filter(|&&j| y[j] == 1).count();
    let mut d: Vec<f64> = (0..n).map(|i| y[i] as f64 - pos as f64 / ref_units.len() as f64).collect();
    for h in 1..=order.len() {
        let vars = &order[..h];
        let prev = d.clone();
        for i in 0..n {
            let reference: Vec<usize> = (0..n)
                .filter(|&j| vars.iter().all(|&v| codes[v][j] == codes[v][i]))
                .filter(|&j| s[j] == 0 && (include_self || j != i))
                .collect();
            d[i] = if reference.is_empty() {
                prev[i]
            } else {
                let p = reference.iter().filter(|&&j| y[j] == 1).count();
                y[i] as f64 - p as f64 / reference.len() as f64
            };
        }
    }
    d
}

// Gower distance recomputed from the raw columns, ranges over all rows.
pub fn oracle_distance(ds: &Dataset, u: usize, v: usize) -> f64 {
    let mut sum = 0.0;
    for f in ds.features() {
        sum += match &f.column {
            Column::Numeric(x) => {
                let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if hi == lo {
                    0.0
                } else {
                    (x[u] - x[v]).abs() / (hi - lo)
                }
            }
            Column::Categorical { codes, .. } => {
                if codes[u] == codes[v] {
                    0.0
                } else {
                    1.0
                }
            }
        };
    }
    sum / ds.features().len() as f64
}

// Full sort of every candidate by (distance, id).
pub fn oracle_neighbours(ds: &Dataset, i: usize, k: usize, s: u8) -> Option<Vec<usize>> {
    let mut cand: Vec<usize> = (0..ds.n()).filter(|&j| j != i && ds.sensitive()[j] == s).collect();
    if cand.len() < k {
        return None;
    }
    cand.sort_by(|&a, &b| {
        oracle_distance(ds, i, a)
            .partial_cmp(&oracle_distance(ds, i, b))
            .unwrap()
            .then(ds.ids()[a].cmp(&ds.ids()[b]))
    });
    cand.truncate(k);
    Some(cand)
}

pub fn oracle_score(ds: &Dataset, i: usize, k: usize, prime: bool) -> Option<f64> {
    let y = ds.outcome();
    let wanted = if prime { 0 } else { y[i] };
    let count = |set: Vec<usize>| set.into_iter().filter(|&j| y[j] == wanted).count() as f64;
    let c1 = count(oracle_neighbours(ds, i, k, 1)?);
    let c0 = count(oracle_neighbours(ds, i, k, 0)?);
    Some(c1 / k as f64 - c0 / k as f64)
}

#[derive(Debug, PartialEq)]
pub enum Oracle {
    Leaf { n: usize, pos: usize },
    Split { n: usize, pos: usize, feature: usize, rule: SplitRule, left: Box<Oracle>, right: Box<Oracle> },
}

// Weighted Gini impurity up to the common factor 1/n, as an exact fraction:
// sum over children of (n_c² − p_c² − q_c²) / n_c.
pub fn gini_parts(rows: &[(usize, u8)]) -> (i128, i128) {
    let n = rows.len() as i128;
    let p = rows.iter().filter(|r| r.1 == 1).count() as i128;
    let q = n - p;
    (n * n - p * p - q * q, n)
}

pub fn split_impurity(left: &[(usize, u8)], right: &[(usize, u8)]) -> (i128, i128) {
    let (a, nl) = gini_parts(left);
    let (b, nr) = gini_parts(right);
    (a * nr + b * nl, nl * nr)
}

pub fn less(a: (i128, i128), b: (i128, i128)) -> bool {
    a.0 * b.1 < b.0 * a.1
}

pub fn oracle_grow(ds: &Dataset, rows: &[usize], depth: usize, max_depth: usize, min_leaf: usize) -> Oracle {
    let y = ds.outcome();
    let n = rows.len();
    let pos = rows.iter().filter(|&&i| y[i] == 1).count();
    let leaf = Oracle::Leaf { n, pos };
    if depth >= max_depth || pos == 0 || pos == n {
        return leaf;
    }
    let labelled: Vec<(usize, u8)> = rows.iter().map(|&i| (i, y[i])).collect();
    let parent = gini_parts(&labelled);
    let mut best: Option<((i128, i128), usize, SplitRule)> = None;
    for (f, feat) in ds.features().iter().enumerate() {
        let mut candidates: Vec<(SplitRule, Predicate)> = Vec::new();
        match &feat.column {
            Column::Numeric(x) => {
                let mut vals: Vec<f64> = rows.iter().map(|&i| x[i]).collect();
                vals.sort_by(f64::total_cmp);
                vals.dedup();
                for w in vals.windows(2) {
                    let t = (w[0] + w[1]) / 2.0;
                    let x = x.clone();
                    candidates.push((SplitRule::Threshold(t), Box::new(move |i| x[i] <= t)));
                }
            }
            Column::Categorical { levels, codes } => {
                for (l, name) in levels.iter().enumerate() {
                    let codes = codes.clone();
                    candidates.push((SplitRule::Level(name.clone()), Box::new(move |i| codes[i] == l as u32)));
                }
            }
        }
        for (rule, goes_left) in candidates {
            let (left, right): (Vec<Labelled>, Vec<Labelled>) = labelled.iter().partition(|r| goes_left(r.0));
            if left.len() < min_leaf || right.len() < min_leaf || left.is_empty() || right.is_empty() {
                continue;
            }
            let score = split_impurity(&left, &right);
            if !less(score, parent) {
                continue;
            }
            if best.as_ref().map_or(true, |b| less(score, b.0)) {
                best = Some((score, f, rule));
            }
        }
    }
    let Some((_, feature, rule)) = best else {
        return leaf;
    };
    let goes_left = |i: usize| match (&ds.feature(feature).column, &rule) {
        (Column::Numeric(x), SplitRule::Threshold(t)) => x[i] <= *t,
        (Column::Categorical { levels, codes }, SplitRule::Level(l)) => &levels[codes[i] as usize] == l,
        _ => unreachable!(),
    };
    let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| goes_left(i));
    Oracle::Split {
        n,
        pos,
        feature,
        rule: rule.clone(),
        left: Box::new(oracle_grow(ds, &l, depth + 1, max_depth, min_leaf)),
        right: Box::new(oracle_grow(ds, &r, depth + 1, max_depth, min_leaf)),
    }
}

pub fn to_oracle(tree: &TreeModel, i: usize) -> Oracle {
    let node = &tree.nodes[i];
    match &node.kind {
        NodeKind::Leaf => Oracle::Leaf { n: node.n, pos: node.positives },
        NodeKind::Split { feature, rule, left, right, .. } => Oracle::Split {
            n: node.n,
            pos: node.positives,
            feature: *feature,
            rule: rule.clone(),
            left: Box::new(to_oracle(tree, *left)),
            right: Box::new(to_oracle(tree, *right)),
        },
    }
}

pub fn root_split(o: &Oracle) -> Option<(usize, &SplitRule)> {
    match o {
        Oracle::Leaf { .. } => None,
        Oracle::Split { feature, rule, .. } => Some((*feature, rule)),
    }
}

//! Dataset-level parity gaps: demographic parity, conditional parity within
//! coarsened strata, and equalized odds for a set of predictions.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cem::{coarsen, stratify, CoarseningSpec};
use crate::dataset::{Dataset, Group};
use crate::{Error, Result};

/// `P̂(Y=1 | S=1) − P̂(Y=1 | S=0)`.
pub fn demographic_parity_gap(ds: &Dataset) -> Result<f64> {
    Ok(ds.positive_rate(Group::Protected)? - ds.positive_rate(Group::Unprotected)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumGap {
    /// Coarsened value of each conditioning variable.
    pub descriptor: Vec<String>,
    pub n_protected: usize,
    pub n_unprotected: usize,
    /// `None` when the stratum lacks one of the two groups.
    pub gap: Option<f64>,
}

/// Per-stratum `P̂(Y=1 | S=1, x) − P̂(Y=1 | S=0, x)` over the strata formed by
/// the coarsened `conditioning` variables, in order of first appearance.
pub fn conditional_parity_gaps(
    ds: &Dataset,
    conditioning: &[&str],
    coarsening: &CoarseningSpec,
) -> Result<Vec<StratumGap>> {
    let vars = conditioning.iter().map(|n| ds.feature_index(n)).collect::<Result<Vec<_>>>()?;
    let table = coarsen(ds, coarsening)?;
    let strat = stratify(&table, &vars);
    let (s, y) = (ds.sensitive(), ds.outcome());
    Ok(strat
        .cells
        .iter()
        .map(|cell| {
            let first = cell[0];
            let descriptor = vars.iter().map(|&v| table.labels[v][table.codes[v][first] as usize].clone()).collect();
            let mut n = [0usize; 2];
            let mut pos = [0usize; 2];
            for &i in cell {
                n[s[i] as usize] += 1;
                pos[s[i] as usize] += y[i] as usize;
            }
            let gap = (n[0] > 0 && n[1] > 0).then(|| pos[1] as f64 / n[1] as f64 - pos[0] as f64 / n[0] as f64);
            StratumGap { descriptor, n_protected: n[1], n_unprotected: n[0], gap }
        })
        .collect())
}

/// For `y = 0` and `y = 1`: `P̂(Ŷ=1 | S=0, Y=y) − P̂(Ŷ=1 | S=1, Y=y)`, `None`
/// when an (S, Y) cell is empty.
pub fn equalized_odds_gaps(ds: &Dataset, predictions: &[u8]) -> Result<(Option<f64>, Option<f64>)> {
    if predictions.len() != ds.n() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} rows",
            predictions.len(),
            ds.n()
        )));
    }
    // [s][y] -> (count, predicted positive)
    let mut cells = [[(0usize, 0usize); 2]; 2];
    for ((&s, &y), &p) in ds.sensitive().iter().zip(ds.outcome()).zip(predictions) {
        let c = &mut cells[s as usize][y as usize];
        c.0 += 1;
        c.1 += usize::from(p == 1);
    }
    let rate = |(n, p): (usize, usize)| (n > 0).then(|| p as f64 / n as f64);
    let gap = |y: usize| Some(rate(cells[0][y])? - rate(cells[1][y])?);
    Ok((gap(0), gap(1)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityReport {
    pub unconditional_gap: f64,
    pub conditioning: Vec<String>,
    pub conditional_gaps: Vec<StratumGap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equalized_odds_gaps: Option<(Option<f64>, Option<f64>)>,
}

pub fn parity_report(
    ds: &Dataset,
    conditioning: &[&str],
    coarsening: &CoarseningSpec,
    predictions: Option<&[u8]>,
) -> Result<ParityReport> {
    Ok(ParityReport {
        unconditional_gap: demographic_parity_gap(ds)?,
        conditioning: conditioning.iter().map(|s| String::from(*s)).collect(),
        conditional_gaps: conditional_parity_gaps(ds, conditioning, coarsening)?,
        equalized_odds_gaps: predictions.map(|p| equalized_odds_gaps(ds, p)).transpose()?,
    })
}

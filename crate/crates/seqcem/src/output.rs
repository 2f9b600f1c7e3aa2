//! File formats for scores, reports and plot data. Undefined values are
//! written as `NA` in CSV and `null` in JSON.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use seqcem_core::cem::{CemScoreVector, CoarseningSpec};
use seqcem_core::evaluation::{EvalReport, QqData, ScatterData};
use seqcem_core::knn::{KnnMeasure, KnnScoreVector, Targets};
use seqcem_core::metrics::ParityReport;
use seqcem_core::score::{ScoreMethod, ScoreVector};

use crate::{Error, Result};

pub const NA: &str = "NA";

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_owned(), |x| x.to_string())
}

fn parse_opt(s: &str) -> Option<f64> {
    if s == NA || s.is_empty() {
        None
    } else {
        s.parse().ok()
    }
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config { path: path.into(), message: e.to_string() })
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let csv_err = |source| Error::Csv { path: path.into(), source };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// JSON sidecar of a CEM score file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CemMeta {
    pub method: String,
    pub n: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub converged: bool,
    pub include_self: bool,
    pub coarsening: CoarseningSpec,
    pub trace: Vec<f64>,
}

/// `unit_id,D,repetitions,seed` plus `<stem>.json` metadata next to it.
pub fn write_cem_scores(csv_path: impl AsRef<Path>, scores: &CemScoreVector) -> Result<()> {
    let csv_path = csv_path.as_ref();
    let (reps, seed) = (scores.repetitions.to_string(), scores.seed.to_string());
    write_rows(
        csv_path,
        &["unit_id", "D", "repetitions", "seed"],
        scores.unit_ids.iter().zip(&scores.values).map(|(id, v)| [id.to_string(), v.to_string(), reps.clone(), seed.clone()]),
    )?;
    let meta = CemMeta {
        method: "sequential_cem".into(),
        n: scores.values.len(),
        repetitions: scores.repetitions,
        seed: scores.seed,
        converged: scores.converged,
        include_self: scores.include_self,
        coarsening: scores.coarsening.clone(),
        trace: scores.trace.clone(),
    };
    write_json(csv_path.with_extension("json"), &meta)
}

/// `unit_id,score,defined` plus the full vector as `<stem>.json`.
pub fn write_knn_scores(csv_path: impl AsRef<Path>, scores: &KnnScoreVector) -> Result<()> {
    let csv_path = csv_path.as_ref();
    write_rows(
        csv_path,
        &["unit_id", "score", "defined"],
        scores.unit_ids.iter().zip(&scores.values).map(|(id, v)| [id.to_string(), fmt_opt(*v), v.is_some().to_string()]),
    )?;
    write_json(csv_path.with_extension("json"), scores)
}

/// Reads a score CSV written by [`write_cem_scores`] or [`write_knn_scores`].
pub fn read_scores(path: impl AsRef<Path>) -> Result<ScoreVector> {
    let path = path.as_ref();
    let csv_err = |source| Error::Csv { path: path.into(), source };
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = rdr.headers().map_err(csv_err)?.clone();
    let value_col = header.iter().position(|h| h == "D" || h == "score").ok_or_else(|| Error::Config {
        path: path.into(),
        message: "no `D` or `score` column".into(),
    })?;
    let method = if &header[value_col] == "D" { ScoreMethod::Cem } else { ScoreMethod::KnnDeltaPrime };
    let (mut unit_ids, mut values) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let id = rec[0].parse().map_err(|_| Error::Config { path: path.into(), message: format!("bad unit id `{}`", &rec[0]) })?;
        unit_ids.push(id);
        values.push(parse_opt(&rec[value_col]));
    }
    Ok(ScoreVector { method, unit_ids, values, note: path.display().to_string() })
}

/// One row for the whole dataset (`stratum = all`) then one per stratum
/// when the report conditions on something.
pub fn write_parity_csv(path: impl AsRef<Path>, report: &ParityReport) -> Result<()> {
    let n1: usize = report.conditional_gaps.iter().map(|s| s.n_protected).sum();
    let n0: usize = report.conditional_gaps.iter().map(|s| s.n_unprotected).sum();
    let mut rows = vec![vec!["all".to_owned(), n1.to_string(), n0.to_string(), report.unconditional_gap.to_string()]];
    if !report.conditioning.is_empty() {
        for s in &report.conditional_gaps {
            rows.push(vec![s.descriptor.join("|"), s.n_protected.to_string(), s.n_unprotected.to_string(), fmt_opt(s.gap)]);
        }
    }
    write_rows(path.as_ref(), &["stratum", "n_protected", "n_unprotected", "gap"], rows)
}

/// Long format: one row per (scenario, threshold, metric, method, replication).
pub fn write_report_csv(path: impl AsRef<Path>, report: &EvalReport) -> Result<()> {
    let mut rows = Vec::with_capacity(report.cells.len() * 12);
    for c in &report.cells {
        let scenario = format!("{}/{}", c.v1, c.v2);
        let mut push = |metric: &str, method: &str, v: Option<f64>| {
            rows.push([
                scenario.clone(),
                c.v1.to_string(),
                c.v2.to_string(),
                c.q_d.to_string(),
                metric.to_owned(),
                method.to_owned(),
                c.replication.to_string(),
                fmt_opt(v),
            ]);
        };
        for (metric, cem, knn, base, ratio) in [
            ("cpr", Some(c.cem.cpr), Some(c.knn.cpr), Some(c.baseline.cpr), c.ratios.cpr),
            ("tpr", c.cem.tpr, c.knn.tpr, c.baseline.tpr, c.ratios.tpr),
            ("fnr", c.cem.fnr, c.knn.fnr, c.baseline.fnr, c.ratios.fnr),
        ] {
            push(metric, "cem", cem);
            push(metric, "knn", knn);
            push(metric, "baseline", base);
            push(metric, "ratio", ratio);
        }
    }
    write_rows(path.as_ref(), &["scenario", "v1", "v2", "q_D", "metric", "method", "replication", "value"], rows)
}

/// Across-replication mean and standard deviation per cell and metric.
pub fn write_summary_csv(path: impl AsRef<Path>, report: &EvalReport) -> Result<()> {
    let mut rows = Vec::new();
    for s in &report.summary {
        for (metric, spread) in &s.metrics {
            rows.push([
                format!("{}/{}", s.v1, s.v2),
                s.q_d.to_string(),
                metric.clone(),
                fmt_opt(spread.mean),
                fmt_opt(spread.std),
                spread.n.to_string(),
            ]);
        }
    }
    write_rows(path.as_ref(), &["scenario", "q_D", "metric", "mean", "std", "n"], rows)
}

pub fn write_qq_csv(path: impl AsRef<Path>, qq: &QqData) -> Result<()> {
    write_rows(
        path.as_ref(),
        &["probability", "a", "b"],
        qq.probabilities.iter().zip(&qq.a).zip(&qq.b).map(|((p, a), b)| [p.to_string(), a.to_string(), b.to_string()]),
    )
}

/// Paired points, then the units undefined on either side with `NA` values.
pub fn write_scatter_csv(path: impl AsRef<Path>, data: &ScatterData) -> Result<()> {
    let points = data.points.iter().map(|(id, a, b)| [id.to_string(), a.to_string(), b.to_string()]);
    let undefined = data.undefined.iter().map(|id| [id.to_string(), NA.to_owned(), NA.to_owned()]);
    write_rows(path.as_ref(), &["unit_id", "a", "b"], points.chain(undefined))
}

pub fn knn_label(measure: KnnMeasure, targets: Targets) -> String {
    let m = match measure {
        KnnMeasure::Delta => "delta",
        KnnMeasure::DeltaPrime => "delta_prime",
    };
    match targets {
        Targets::Protected => m.to_owned(),
        Targets::All => format!("{m}_all"),
    }
}

//! Method-agnostic score vectors, aligned with dataset rows.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMethod {
    /// Repeated sequential CEM score `D` (negative = discriminated against).
    Cem,
    /// k-NN `Δ`, same-outcome frequency difference.
    KnnDelta,
    /// k-NN `δ`, negative-outcome frequency difference (positive = discriminated against).
    KnnDeltaPrime,
}

impl ScoreMethod {
    /// Whether low scores (rather than high ones) indicate discrimination
    /// against the protected group.
    pub fn low_is_discriminated(self) -> bool {
        matches!(self, ScoreMethod::Cem)
    }

    pub fn label(self) -> &'static str {
        match self {
            ScoreMethod::Cem => "cem",
            ScoreMethod::KnnDelta => "knn_delta",
            ScoreMethod::KnnDeltaPrime => "knn_delta_prime",
        }
    }
}

/// Per-unit scores; `None` marks units the method could not score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub method: ScoreMethod,
    pub unit_ids: Vec<u64>,
    pub values: Vec<Option<f64>>,
    /// Free-form provenance (seed, repetitions, k, ...).
    #[serde(default)]
    pub note: String,
}

impl ScoreVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn defined(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    /// Copy keeping only rows where `keep` is true; others become undefined.
    pub fn masked(&self, keep: impl Fn(usize) -> bool) -> ScoreVector {
        let values = self.values.iter().enumerate().map(|(i, v)| if keep(i) { *v } else { None }).collect();
        ScoreVector { values, ..self.clone() }
    }
}

//! Individual fairness: similar individuals should receive similar outputs.
//!
//! Checks the Lipschitz condition `|out_i - out_j| <= L * d(i, j)` over all
//! record pairs in a slice. This is the engine's only quadratic path, so the
//! record count is capped.

use serde::{Deserialize, Serialize};

use super::dataset::{LabeledDataset, LabeledRecord};
use super::slice::SliceFilter;
use super::{EngineError, Result};
use crate::ExtendedReal;

pub const DEFAULT_PAIR_CAP: usize = 5000;

/// Absolute tolerance when comparing a pair's ratio against the bound.
const RATIO_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    /// Euclidean distance after scaling each feature to `[0, 1]` by its
    /// observed range (constant features contribute nothing).
    #[default]
    MinMaxL2,
    /// Euclidean distance on raw feature values.
    L2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AwarenessConfig {
    pub lipschitz: f64,
    pub distance: DistanceKind,
    /// Numeric feature columns; defaults to the dataset's declared features.
    pub features: Option<Vec<String>>,
    pub pair_cap: usize,
}

impl Default for AwarenessConfig {
    fn default() -> Self {
        Self {
            lipschitz: 1.0,
            distance: DistanceKind::MinMaxL2,
            features: None,
            pair_cap: DEFAULT_PAIR_CAP,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Score,
    Prediction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzCheckResult {
    pub lipschitz_bound: f64,
    pub violations: u64,
    /// Largest `|out_i - out_j| / d(i, j)`; infinite when two identical
    /// individuals received different outputs.
    pub max_ratio: ExtendedReal,
    pub pairs_checked: u64,
    pub output: OutputKind,
    pub distance: DistanceKind,
    pub features: Vec<String>,
}

pub fn awareness_check(
    dataset: &LabeledDataset,
    slice: &SliceFilter,
    config: &AwarenessConfig,
) -> Result<LipschitzCheckResult> {
    if !(config.lipschitz >= 0.0 && config.lipschitz.is_finite()) {
        return Err(EngineError::Validation(format!(
            "lipschitz bound {} must be finite and >= 0",
            config.lipschitz
        )));
    }
    let records: Vec<&LabeledRecord> = dataset.records().iter().filter(|r| slice.matches(r)).collect();
    if records.len() > config.pair_cap {
        return Err(EngineError::Capacity {
            n: records.len(),
            cap: config.pair_cap,
        });
    }
    let features: Vec<String> = config
        .features
        .clone()
        .unwrap_or_else(|| dataset.declared_features().to_vec());
    if features.is_empty() {
        return Err(EngineError::Config("awareness check needs at least one numeric feature".into()));
    }

    let mut vectors = records
        .iter()
        .map(|r| feature_vector(r, &features))
        .collect::<Result<Vec<_>>>()?;
    if config.distance == DistanceKind::MinMaxL2 {
        min_max_scale(&mut vectors, features.len());
    }

    let (outputs, output) = if records.iter().all(|r| r.y_score.is_some()) {
        (records.iter().filter_map(|r| r.y_score).collect::<Vec<_>>(), OutputKind::Score)
    } else {
        let preds = records
            .iter()
            .map(|r| r.prediction().map(|p| if p { 1.0 } else { 0.0 }))
            .collect::<Result<Vec<_>>>()?;
        (preds, OutputKind::Prediction)
    };

    let mut violations = 0u64;
    let mut pairs_checked = 0u64;
    let mut max_ratio = ExtendedReal::Finite(0.0);
    for i in 0..vectors.len() {
        for j in (i + 1)..vectors.len() {
            pairs_checked += 1;
            let d = euclidean(&vectors[i], &vectors[j]);
            let out = (outputs[i] - outputs[j]).abs();
            if d == 0.0 {
                if out > 0.0 {
                    violations += 1;
                    max_ratio = ExtendedReal::Infinite;
                }
                continue;
            }
            let ratio = out / d;
            max_ratio = max_ratio.max(ExtendedReal::Finite(ratio));
            if ratio > config.lipschitz + RATIO_TOLERANCE {
                violations += 1;
            }
        }
    }

    Ok(LipschitzCheckResult {
        lipschitz_bound: config.lipschitz,
        violations,
        max_ratio,
        pairs_checked,
        output,
        distance: config.distance,
        features,
    })
}

fn feature_vector(record: &LabeledRecord, features: &[String]) -> Result<Vec<f64>> {
    features
        .iter()
        .map(|name| {
            let raw = record
                .attribute(name)
                .ok_or_else(|| EngineError::malformed(&record.record_id, format!("missing feature {name:?}")))?;
            raw.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    EngineError::malformed(&record.record_id, format!("feature {name:?} is not numeric: {raw:?}"))
                })
        })
        .collect()
}

fn min_max_scale(vectors: &mut [Vec<f64>], width: usize) {
    for k in 0..width {
        let (lo, hi) = vectors
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v[k]), hi.max(v[k])));
        let range = hi - lo;
        for v in vectors.iter_mut() {
            v[k] = if range > 0.0 { (v[k] - lo) / range } else { 0.0 };
        }
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

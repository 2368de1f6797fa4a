//! Loading datasets from CSV plus a TOML sidecar describing how to audit them.
//!
//! CSV columns `record_id` and `y_true` are required; `y_score` and `y_pred`
//! are optional and may be blank per row. Every other column is a record
//! attribute.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::awareness::AwarenessConfig;
use super::confusion::DEFAULT_MIN_SUPPORT;
use super::criteria::Criterion;
use super::dataset::{LabeledDataset, LabeledRecord, DEFAULT_THRESHOLD};
use super::report::{ReportConfig, SampleConfig, DEFAULT_SLICE_DEPTH};
use super::slice::SliceFilter;
use super::{EngineError, Result};
use crate::{Digest32, Timestamp};

const RESERVED: [&str; 4] = ["record_id", "y_true", "y_score", "y_pred"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub name: String,
    pub protected_attributes: Vec<String>,
    #[serde(default)]
    pub declared_features: Vec<String>,
    #[serde(default)]
    pub created_at: Option<Timestamp>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub criteria: Vec<Criterion>,
    /// Defaults to all protected attributes.
    #[serde(default)]
    pub attributes: Option<Vec<String>>,
    #[serde(default)]
    pub slice: SliceFilter,
    #[serde(default = "default_min_support")]
    pub min_support: u64,
    #[serde(default)]
    pub gap_threshold: Option<f64>,
    #[serde(default = "default_slice_depth")]
    pub slice_depth: usize,
    #[serde(default)]
    pub awareness: AwarenessConfig,
    #[serde(default)]
    pub sample: Option<SampleConfig>,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

fn default_min_support() -> u64 {
    DEFAULT_MIN_SUPPORT
}

fn default_slice_depth() -> usize {
    DEFAULT_SLICE_DEPTH
}

impl DatasetConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| EngineError::Config(format!("dataset config: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EngineError::Config(format!("reading {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Report configuration; `criteria` overrides the configured list when
    /// non-empty.
    pub fn report_config(&self, criteria: &[Criterion]) -> ReportConfig {
        ReportConfig {
            criteria: if criteria.is_empty() { self.criteria.clone() } else { criteria.to_vec() },
            attributes: self.attributes.clone().unwrap_or_else(|| self.protected_attributes.clone()),
            slice: self.slice.clone(),
            threshold: self.threshold,
            min_support: self.min_support,
            gap_threshold: self.gap_threshold,
            slice_depth: self.slice_depth,
            awareness: self.awareness.clone(),
            sample: self.sample,
        }
    }
}

/// A dataset together with the SHA-256 of the bytes it was parsed from.
#[derive(Clone, Debug)]
pub struct LoadedDataset {
    pub dataset: LabeledDataset,
    pub digest: Digest32,
}

pub fn parse_csv(bytes: &[u8], config: &DatasetConfig, fallback_created_at: Timestamp) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| EngineError::MalformedDataset { record_id: None, reason: format!("header: {e}") })?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let id_col = column("record_id").ok_or_else(|| missing_column("record_id"))?;
    let y_col = column("y_true").ok_or_else(|| missing_column("y_true"))?;
    let score_col = column("y_score");
    let pred_col = column("y_pred");
    if score_col.is_none() && pred_col.is_none() {
        return Err(EngineError::MalformedDataset {
            record_id: None,
            reason: "need a y_score or y_pred column".into(),
        });
    }
    let attribute_cols: Vec<(usize, &str)> =
        headers.iter().enumerate().filter(|(_, h)| !RESERVED.contains(h)).collect();

    let mut records = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| EngineError::MalformedDataset {
            record_id: None,
            reason: format!("row {}: {e}", line + 1),
        })?;
        let id = row.get(id_col).unwrap_or_default().to_string();
        let y_true = parse_bool(row.get(y_col).unwrap_or_default())
            .ok_or_else(|| EngineError::malformed(&id, "y_true must be 0/1 or true/false"))?;
        let mut record = LabeledRecord::new(id.clone(), y_true);
        if let Some(raw) = score_col.and_then(|c| row.get(c)).filter(|s| !s.is_empty()) {
            let score: f64 = raw
                .parse()
                .map_err(|_| EngineError::malformed(&id, format!("y_score {raw:?} is not a number")))?;
            record = record.with_score(score);
        }
        if let Some(raw) = pred_col.and_then(|c| row.get(c)).filter(|s| !s.is_empty()) {
            let pred = parse_bool(raw).ok_or_else(|| EngineError::malformed(&id, "y_pred must be 0/1 or true/false"))?;
            record = record.with_pred(pred);
        }
        for &(col, name) in &attribute_cols {
            record = record.with_attr(name, row.get(col).unwrap_or_default());
        }
        records.push(record);
    }
    if records.is_empty() {
        return Err(EngineError::MalformedDataset { record_id: None, reason: "no records".into() });
    }
    for attr in &config.protected_attributes {
        if !attribute_cols.iter().any(|(_, h)| h == attr) {
            return Err(EngineError::Config(format!("protected attribute {attr:?} is not a CSV column")));
        }
    }
    LabeledDataset::new(
        config.name.clone(),
        records,
        config.protected_attributes.clone(),
        config.declared_features.clone(),
        config.created_at.unwrap_or(fallback_created_at),
    )
}

pub fn load_csv_file(path: &Path, config: &DatasetConfig, fallback_created_at: Timestamp) -> Result<LoadedDataset> {
    let bytes = std::fs::read(path).map_err(|e| EngineError::Config(format!("reading {}: {e}", path.display())))?;
    Ok(LoadedDataset {
        dataset: parse_csv(&bytes, config, fallback_created_at)?,
        digest: Digest32::of(&bytes),
    })
}

fn missing_column(name: &str) -> EngineError {
    EngineError::MalformedDataset {
        record_id: None,
        reason: format!("missing required column {name:?}"),
    }
}

fn parse_bool(raw: &str) -> Option<bool> {
    match raw.to_ascii_lowercase().as_str() {
        "1" | "true" => Some(true),
        "0" | "false" => Some(false),
        _ => None,
    }
}

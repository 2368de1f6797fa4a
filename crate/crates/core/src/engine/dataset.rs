use std::collections::{BTreeMap, HashSet};

use crate::rng::SeededRng;
use crate::timestamp::Timestamp;

use super::{EngineError, Result};

/// Reserved category for missing protected-attribute values.
pub const UNSPECIFIED: &str = "unspecified";

/// Default decision threshold: `y_pred = 1` iff `y_score >= 0.5`.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledRecord {
    pub record_id: String,
    pub y_true: bool,
    pub y_score: Option<f64>,
    pub y_pred: Option<bool>,
    /// Every non-label column, keyed by column name. Protected attributes
    /// are normalized to [`UNSPECIFIED`] when absent or empty.
    pub attributes: BTreeMap<String, String>,
}

impl LabeledRecord {
    pub fn new(record_id: impl Into<String>, y_true: bool) -> Self {
        Self {
            record_id: record_id.into(),
            y_true,
            y_score: None,
            y_pred: None,
            attributes: BTreeMap::new(),
        }
    }

    pub fn with_pred(mut self, y_pred: bool) -> Self {
        self.y_pred = Some(y_pred);
        self
    }

    pub fn with_score(mut self, y_score: f64) -> Self {
        self.y_score = Some(y_score);
        self
    }

    pub fn with_attr(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.attributes.insert(name.into(), value.into());
        self
    }

    pub fn attribute(&self, name: &str) -> Option<&str> {
        self.attributes.get(name).map(String::as_str)
    }

    /// Resolved prediction; errors when thresholding has not happened yet.
    pub fn prediction(&self) -> Result<bool> {
        self.y_pred.ok_or_else(|| {
            EngineError::malformed(&self.record_id, "prediction not resolved; apply a threshold to y_score first")
        })
    }
}

/// An immutable, validated set of labeled predictions.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    name: String,
    records: Vec<LabeledRecord>,
    protected_attributes: Vec<String>,
    declared_features: Vec<String>,
    created_at: Timestamp,
}

impl LabeledDataset {
    /// Validates records and materializes missing protected attributes as
    /// [`UNSPECIFIED`].
    pub fn new(
        name: impl Into<String>,
        mut records: Vec<LabeledRecord>,
        protected_attributes: Vec<String>,
        declared_features: Vec<String>,
        created_at: Timestamp,
    ) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for record in &mut records {
            if record.record_id.is_empty() {
                return Err(EngineError::MalformedDataset {
                    record_id: None,
                    reason: "empty record_id".into(),
                });
            }
            if !seen.insert(record.record_id.clone()) {
                return Err(EngineError::malformed(&record.record_id, "duplicate record_id"));
            }
            if let Some(score) = record.y_score {
                if !(0.0..=1.0).contains(&score) {
                    return Err(EngineError::malformed(
                        &record.record_id,
                        format!("y_score {score} outside [0, 1]"),
                    ));
                }
            }
            for attr in &protected_attributes {
                let value = record.attributes.entry(attr.clone()).or_default();
                if value.trim().is_empty() {
                    *value = UNSPECIFIED.to_string();
                }
            }
        }
        Ok(Self {
            name: name.into(),
            records,
            protected_attributes,
            declared_features,
            created_at,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn records(&self) -> &[LabeledRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn protected_attributes(&self) -> &[String] {
        &self.protected_attributes
    }

    pub fn declared_features(&self) -> &[String] {
        &self.declared_features
    }

    pub fn created_at(&self) -> Timestamp {
        self.created_at
    }

    pub fn is_protected(&self, attribute: &str) -> bool {
        self.protected_attributes.iter().any(|a| a == attribute)
    }

    pub(crate) fn require_protected(&self, attribute: &str) -> Result<()> {
        if self.is_protected(attribute) {
            Ok(())
        } else {
            Err(EngineError::Config(format!(
                "unknown attribute {attribute:?}; protected attributes are {:?}",
                self.protected_attributes
            )))
        }
    }

    fn with_records(&self, name: String, records: Vec<LabeledRecord>) -> Self {
        Self {
            name,
            records,
            protected_attributes: self.protected_attributes.clone(),
            declared_features: self.declared_features.clone(),
            created_at: self.created_at,
        }
    }
}

/// Resolves `y_pred` from `y_score` where no explicit prediction exists.
pub fn threshold_predictions(dataset: &LabeledDataset, threshold: f64) -> Result<LabeledDataset> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(EngineError::Validation(format!("threshold {threshold} outside [0, 1]")));
    }
    let records = dataset
        .records
        .iter()
        .map(|r| {
            let mut r = r.clone();
            if r.y_pred.is_none() {
                let score = r.y_score.ok_or_else(|| {
                    EngineError::malformed(&r.record_id, "record has neither y_pred nor y_score")
                })?;
                r.y_pred = Some(score >= threshold);
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(dataset.with_records(dataset.name.clone(), records))
}

/// Draws `floor(fraction * n)` records without replacement.
///
/// Candidates are ordered by `record_id` before shuffling so the selected
/// set does not depend on input order; the output keeps input order.
pub fn subsample(dataset: &LabeledDataset, fraction: f64, seed: u64) -> Result<LabeledDataset> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(EngineError::Validation(format!("sample fraction {fraction} outside (0, 1]")));
    }
    let n = dataset.records.len();
    // The epsilon absorbs products like 0.29 * 100 = 28.999999999999996.
    let take = ((fraction * n as f64) + 1e-9).floor().min(n as f64) as usize;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dataset.records[a].record_id.cmp(&dataset.records[b].record_id));
    let mut rng = SeededRng::new(seed);
    rng.shuffle(&mut order);
    let mut chosen = order[..take].to_vec();
    chosen.sort_unstable();

    let records = chosen.into_iter().map(|i| dataset.records[i].clone()).collect();
    let name = format!("{}#sample(fraction={fraction},seed={seed})", dataset.name);
    Ok(dataset.with_records(name, records))
}

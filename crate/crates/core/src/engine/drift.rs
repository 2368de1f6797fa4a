//! Change in fairness metrics between two reports of the same configuration.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::criteria::{Criterion, MetricResult};
use super::report::FairnessReport;
use super::{EngineError, Result};
use crate::Digest32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeKind {
    Added,
    Removed,
    BecameDefined,
    BecameUndefined,
}

/// A change in which groups (or values) exist at all; always alerts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralChange {
    /// Group label, `"gap"`, or `"result"` for a whole metric.
    pub subject: String,
    pub change: ChangeKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricDrift {
    pub criterion: Criterion,
    pub attribute: String,
    /// `current - previous` for groups defined in both reports.
    pub group_deltas: BTreeMap<String, f64>,
    pub gap_delta: Option<f64>,
    pub structural: Vec<StructuralChange>,
    pub alert: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftResult {
    pub drift_threshold: f64,
    pub metrics: Vec<MetricDrift>,
    pub alert: bool,
    /// `[previous, current]`.
    pub compared_report_digests: [Digest32; 2],
}

pub fn drift(previous: &FairnessReport, current: &FairnessReport, drift_threshold: f64) -> Result<DriftResult> {
    if !(drift_threshold >= 0.0 && drift_threshold.is_finite()) {
        return Err(EngineError::Validation(format!("drift threshold {drift_threshold} must be >= 0")));
    }
    let prev_criteria: BTreeSet<_> = previous.config.criteria.iter().collect();
    let cur_criteria: BTreeSet<_> = current.config.criteria.iter().collect();
    if prev_criteria != cur_criteria {
        let differing: Vec<String> = prev_criteria
            .symmetric_difference(&cur_criteria)
            .map(|c| c.to_string())
            .collect();
        return Err(EngineError::Comparability(format!("criteria differ: {}", differing.join(", "))));
    }
    let prev_attrs: BTreeSet<_> = previous.config.attributes.iter().collect();
    let cur_attrs: BTreeSet<_> = current.config.attributes.iter().collect();
    if prev_attrs != cur_attrs {
        let differing: Vec<&str> = prev_attrs.symmetric_difference(&cur_attrs).map(|a| a.as_str()).collect();
        return Err(EngineError::Comparability(format!("grouping attributes differ: {}", differing.join(", "))));
    }

    let digest = |r: &FairnessReport| {
        r.digest()
            .map_err(|e| EngineError::Validation(format!("report cannot be digested: {e}")))
    };
    let compared_report_digests = [digest(previous)?, digest(current)?];

    let index = |r: &FairnessReport| -> BTreeMap<(Criterion, String), MetricResult> {
        r.metric_results()
            .map(|m| ((m.criterion, m.attribute.clone()), m.clone()))
            .collect()
    };
    let prev = index(previous);
    let cur = index(current);
    let keys: BTreeSet<_> = prev.keys().chain(cur.keys()).cloned().collect();

    let mut metrics = Vec::with_capacity(keys.len());
    for key in keys {
        let entry = match (prev.get(&key), cur.get(&key)) {
            (Some(p), Some(c)) => compare(p, c, drift_threshold),
            (p, _) => MetricDrift {
                criterion: key.0,
                attribute: key.1.clone(),
                group_deltas: BTreeMap::new(),
                gap_delta: None,
                structural: vec![StructuralChange {
                    subject: "result".into(),
                    change: if p.is_some() { ChangeKind::Removed } else { ChangeKind::Added },
                }],
                alert: true,
            },
        };
        metrics.push(entry);
    }

    Ok(DriftResult {
        drift_threshold,
        alert: metrics.iter().any(|m| m.alert),
        metrics,
        compared_report_digests,
    })
}

fn compare(prev: &MetricResult, cur: &MetricResult, threshold: f64) -> MetricDrift {
    let mut group_deltas = BTreeMap::new();
    let mut structural = Vec::new();
    let groups: BTreeSet<&String> = prev.group_values.keys().chain(cur.group_values.keys()).collect();
    for group in groups {
        match (prev.group_values.get(group), cur.group_values.get(group)) {
            (Some(p), Some(c)) => {
                if let Some(change) = definedness_change(*p, *c) {
                    structural.push(StructuralChange {
                        subject: group.clone(),
                        change,
                    });
                } else if let (Some(p), Some(c)) = (p, c) {
                    group_deltas.insert(group.clone(), c - p);
                }
            }
            (p, _) => structural.push(StructuralChange {
                subject: group.clone(),
                change: if p.is_some() { ChangeKind::Removed } else { ChangeKind::Added },
            }),
        }
    }
    let gap_delta = match (prev.gap, cur.gap) {
        (Some(p), Some(c)) => Some(c - p),
        (p, c) => {
            if let Some(change) = definedness_change(p, c) {
                structural.push(StructuralChange {
                    subject: "gap".into(),
                    change,
                });
            }
            None
        }
    };
    let exceeds = |d: &f64| d.abs() > threshold;
    let alert = !structural.is_empty() || group_deltas.values().any(exceeds) || gap_delta.as_ref().is_some_and(exceeds);
    MetricDrift {
        criterion: cur.criterion,
        attribute: cur.attribute.clone(),
        group_deltas,
        gap_delta,
        structural,
        alert,
    }
}

fn definedness_change(prev: Option<f64>, cur: Option<f64>) -> Option<ChangeKind> {
    match (prev, cur) {
        (None, Some(_)) => Some(ChangeKind::BecameDefined),
        (Some(_), None) => Some(ChangeKind::BecameUndefined),
        _ => None,
    }
}

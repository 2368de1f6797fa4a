//! Full fairness report: every selected criterion over every grouping
//! attribute, plus precomputed intersectional slices for filtered lookups.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::awareness::{awareness_check, AwarenessConfig, LipschitzCheckResult};
use super::confusion::{group_metrics, ConfusionCounts, GroupMetrics, RateKind, DEFAULT_MIN_SUPPORT};
use super::criteria::{criterion_result, group_counts, unawareness_check, Criterion, MetricOptions, MetricResult, UnawarenessResult};
use super::dataset::{subsample, threshold_predictions, LabeledDataset, DEFAULT_THRESHOLD};
use super::divergence::LOG_BASE;
use super::enumerate::enumerate_slices;
use super::slice::SliceFilter;
use super::{EngineError, Result};
use crate::canonical::{canonical_digest_of, CanonicalError};
use crate::rng::RNG_ALGORITHM;
use crate::{Digest32, Timestamp};

/// Default depth of precomputed intersectional slices.
pub const DEFAULT_SLICE_DEPTH: usize = 2;

const CONSISTENCY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub fraction: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub criteria: Vec<Criterion>,
    /// Grouping attributes; each must be protected.
    pub attributes: Vec<String>,
    /// Base population the whole report is restricted to.
    pub slice: SliceFilter,
    pub threshold: f64,
    pub min_support: u64,
    pub gap_threshold: Option<f64>,
    /// Maximum number of attributes combined in a precomputed slice.
    pub slice_depth: usize,
    pub awareness: AwarenessConfig,
    pub sample: Option<SampleConfig>,
}

impl ReportConfig {
    pub fn new(criteria: Vec<Criterion>, attributes: Vec<String>) -> Self {
        Self {
            criteria,
            attributes,
            slice: SliceFilter::all(),
            threshold: DEFAULT_THRESHOLD,
            min_support: DEFAULT_MIN_SUPPORT,
            gap_threshold: None,
            slice_depth: DEFAULT_SLICE_DEPTH,
            awareness: AwarenessConfig::default(),
            sample: None,
        }
    }

    fn metric_options(&self) -> MetricOptions {
        MetricOptions {
            min_support: self.min_support,
            gap_threshold: self.gap_threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ItemOutcome {
    Metric(MetricResult),
    Unawareness(UnawarenessResult),
    Awareness(LipschitzCheckResult),
    Error(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportItem {
    pub criterion: Criterion,
    pub attribute: Option<String>,
    pub outcome: ItemOutcome,
}

impl ReportItem {
    pub fn metric(&self) -> Option<&MetricResult> {
        match &self.outcome {
            ItemOutcome::Metric(m) => Some(m),
            _ => None,
        }
    }
}

/// Precomputed results for one intersectional slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceResult {
    pub key: String,
    pub filter: SliceFilter,
    /// Records in the slice: the number of users the filter covers.
    pub user_count: u64,
    pub metrics: GroupMetrics,
    /// Group criteria within the slice, grouped by each attribute the slice
    /// does not already fix.
    pub results: Vec<MetricResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub engine_version: String,
    pub dataset_name: String,
    pub dataset_digest: Option<Digest32>,
    /// Records in the base slice after sampling.
    pub record_count: u64,
    pub created_at: Timestamp,
    pub config: ReportConfig,
    pub rng_algorithm: String,
    pub log_base: String,
    pub items: Vec<ReportItem>,
    pub slices: Vec<SliceResult>,
}

impl FairnessReport {
    pub fn digest(&self) -> Result<Digest32, CanonicalError> {
        canonical_digest_of(self)
    }

    pub fn metric_results(&self) -> impl Iterator<Item = &MetricResult> {
        self.items.iter().filter_map(ReportItem::metric)
    }

    pub fn slice(&self, filter: &SliceFilter) -> Option<&SliceResult> {
        let key = filter.key();
        self.slices.iter().find(|s| s.key == key)
    }

    /// Structural and arithmetic sanity checks; returns one message per problem.
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.engine_version.trim().is_empty() {
            problems.push("engine_version is empty".to_string());
        }
        if self.dataset_name.trim().is_empty() {
            problems.push("dataset_name is empty".to_string());
        }
        if self.record_count == 0 {
            problems.push("record_count is 0".to_string());
        }
        if self.config.criteria.is_empty() {
            problems.push("config.criteria is empty".to_string());
        }
        let results = self
            .metric_results()
            .map(|m| ("items".to_string(), m))
            .chain(self.slices.iter().flat_map(|s| s.results.iter().map(move |m| (format!("slices[{}]", s.key), m))));
        for (location, m) in results {
            if let Some(p) = check_metric(m) {
                problems.push(format!("{location}: {} by {}: {p}", m.criterion, m.attribute));
            }
        }
        problems
    }
}

fn check_metric(m: &MetricResult) -> Option<String> {
    let in_unit = |v: Option<f64>| v.is_none_or(|x| (0.0..=1.0).contains(&x));
    if !m.group_values.values().all(|v| in_unit(*v)) {
        return Some("group value outside [0, 1]".into());
    }
    if !in_unit(m.gap) || !in_unit(m.ratio) {
        return Some("gap or ratio outside [0, 1]".into());
    }
    let expected = if m.components.is_empty() {
        spread(m.group_values.values())
    } else {
        m.components.values().filter(|c| c.rate != RateKind::Fnr).filter_map(|c| spread(c.group_values.values())).reduce(f64::max)
    };
    match (m.gap, expected) {
        (Some(g), Some(e)) if (g - e).abs() <= CONSISTENCY_TOLERANCE => None,
        (None, None) => None,
        (g, e) => Some(format!("gap {g:?} inconsistent with group values (expected {e:?})")),
    }
}

fn spread<'a>(values: impl Iterator<Item = &'a Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().copied().collect();
    if defined.len() < 2 {
        return None;
    }
    let max = defined.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = defined.iter().copied().fold(f64::INFINITY, f64::min);
    Some(max - min)
}

/// Computes a report over the caller-selected criteria.
///
/// Predictions are resolved with `config.threshold`, then the optional
/// sample is drawn, then everything is restricted to `config.slice`.
/// Per-item failures are recorded in the item instead of failing the report.
pub fn compute_report(dataset: &LabeledDataset, config: &ReportConfig, created_at: Timestamp) -> Result<FairnessReport> {
    if config.criteria.is_empty() {
        return Err(EngineError::Validation("at least one fairness criterion must be selected".into()));
    }
    let unique: BTreeSet<_> = config.criteria.iter().collect();
    if unique.len() != config.criteria.len() {
        return Err(EngineError::Validation("criteria must not repeat".into()));
    }
    let needs_groups = config.criteria.iter().any(Criterion::is_group_criterion);
    if needs_groups && config.attributes.is_empty() {
        return Err(EngineError::Validation("group criteria need at least one grouping attribute".into()));
    }

    let resolved = threshold_predictions(dataset, config.threshold)?;
    let sampled = match config.sample {
        Some(s) => subsample(&resolved, s.fraction, s.seed)?,
        None => resolved,
    };
    let base = &config.slice;
    let record_count = sampled.records().iter().filter(|r| base.matches(r)).count() as u64;
    if record_count == 0 {
        return Err(EngineError::Validation(format!("no records in slice {base}")));
    }
    let opts = config.metric_options();

    let mut items = Vec::new();
    for &criterion in &config.criteria {
        match criterion {
            Criterion::Unawareness => items.push(ReportItem {
                criterion,
                attribute: None,
                outcome: ItemOutcome::Unawareness(unawareness_check(&sampled)),
            }),
            Criterion::Awareness => items.push(ReportItem {
                criterion,
                attribute: None,
                outcome: match awareness_check(&sampled, base, &config.awareness) {
                    Ok(r) => ItemOutcome::Awareness(r),
                    Err(e) => ItemOutcome::Error(e.to_string()),
                },
            }),
            _ => {
                for attribute in &config.attributes {
                    let outcome = group_counts(&sampled, attribute, base)
                        .and_then(|groups| criterion_result(criterion, attribute, &groups, &opts));
                    items.push(ReportItem {
                        criterion,
                        attribute: Some(attribute.clone()),
                        outcome: match outcome {
                            Ok(m) => ItemOutcome::Metric(m),
                            Err(e) => ItemOutcome::Error(e.to_string()),
                        },
                    });
                }
            }
        }
    }

    let slices = precompute_slices(&sampled, config, &opts)?;

    Ok(FairnessReport {
        engine_version: crate::ENGINE_VERSION.to_string(),
        dataset_name: sampled.name().to_string(),
        dataset_digest: None,
        record_count,
        created_at,
        config: config.clone(),
        rng_algorithm: RNG_ALGORITHM.to_string(),
        log_base: LOG_BASE.to_string(),
        items,
        slices,
    })
}

fn precompute_slices(dataset: &LabeledDataset, config: &ReportConfig, opts: &MetricOptions) -> Result<Vec<SliceResult>> {
    let base = &config.slice;
    let attributes: Vec<&String> = config
        .attributes
        .iter()
        .filter(|a| dataset.is_protected(a) && !base.constrains(a))
        .collect();
    let group_criteria: Vec<Criterion> = config.criteria.iter().copied().filter(Criterion::is_group_criterion).collect();

    let mut filters = vec![SliceFilter::all()];
    if config.slice_depth > 0 && !attributes.is_empty() {
        let domain: Vec<(String, Vec<String>)> = attributes
            .iter()
            .map(|a| {
                let values: BTreeSet<&str> = dataset
                    .records()
                    .iter()
                    .filter(|r| base.matches(r))
                    .filter_map(|r| r.attribute(a))
                    .collect();
                ((*a).clone(), values.into_iter().map(str::to_string).collect())
            })
            .collect();
        let enumeration = enumerate_slices(&domain)?;
        filters.extend(enumeration.slices_up_to(config.slice_depth));
    }

    let mut out = Vec::with_capacity(filters.len());
    for filter in filters {
        let scope = base.and(&filter).expect("slice attributes exclude base-slice attributes");
        let counts = ConfusionCounts::tally(dataset.records().iter().filter(|r| scope.matches(r)))?;
        let mut results = Vec::new();
        for &criterion in &group_criteria {
            for attribute in attributes.iter().filter(|a| !filter.constrains(a)) {
                let groups = group_counts(dataset, attribute, &scope)?;
                results.push(criterion_result(criterion, attribute, &groups, opts)?);
            }
        }
        out.push(SliceResult {
            key: filter.key(),
            user_count: counts.support,
            metrics: group_metrics(&counts, config.min_support),
            filter,
            results,
        });
    }
    Ok(out)
}

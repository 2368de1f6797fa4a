//! Group fairness criteria: demographic parity, equalized opportunity,
//! equalized odds, rate parity for custom rates, and the unawareness check.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::confusion::{ConfusionCounts, RateKind, DEFAULT_MIN_SUPPORT};
use super::dataset::LabeledDataset;
use super::fraction::Fraction;
use super::slice::SliceFilter;
use super::{EngineError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Criterion {
    DemographicParity,
    EqualizedOpportunity,
    EqualizedOdds,
    Unawareness,
    Awareness,
    /// Parity of an arbitrary per-group rate, written `custom:<rate>`.
    Custom(RateKind),
}

impl Criterion {
    /// Whether the criterion is evaluated per grouping attribute.
    pub fn is_group_criterion(&self) -> bool {
        !matches!(self, Self::Unawareness | Self::Awareness)
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DemographicParity => f.write_str("demographic_parity"),
            Self::EqualizedOpportunity => f.write_str("equalized_opportunity"),
            Self::EqualizedOdds => f.write_str("equalized_odds"),
            Self::Unawareness => f.write_str("unawareness"),
            Self::Awareness => f.write_str("awareness"),
            Self::Custom(rate) => write!(f, "custom:{rate}"),
        }
    }
}

impl FromStr for Criterion {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "demographic_parity" => Self::DemographicParity,
            "equalized_opportunity" => Self::EqualizedOpportunity,
            "equalized_odds" => Self::EqualizedOdds,
            "unawareness" => Self::Unawareness,
            "awareness" => Self::Awareness,
            other => match other.strip_prefix("custom:") {
                Some(rate) => Self::Custom(rate.parse()?),
                None => return Err(EngineError::Config(format!("unknown criterion {other:?}"))),
            },
        })
    }
}

impl TryFrom<String> for Criterion {
    type Error = EngineError;

    fn try_from(value: String) -> Result<Self> {
        value.parse()
    }
}

impl From<Criterion> for String {
    fn from(value: Criterion) -> Self {
        value.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricOptions {
    pub min_support: u64,
    /// When set, `passed = gap <= gap_threshold`.
    pub gap_threshold: Option<f64>,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            min_support: DEFAULT_MIN_SUPPORT,
            gap_threshold: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UndefinedGroup {
    pub group: String,
    pub reason: String,
}

/// One rate compared across groups.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentResult {
    pub rate: RateKind,
    pub group_values: BTreeMap<String, Option<f64>>,
    pub gap: Option<f64>,
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub criterion: Criterion,
    /// The grouping attribute.
    pub attribute: String,
    /// Headline per-group value. For equalized odds this is the TPR; every
    /// compared rate is listed under `components`.
    pub group_values: BTreeMap<String, Option<f64>>,
    pub group_support: BTreeMap<String, u64>,
    pub low_support_groups: Vec<String>,
    /// `max - min` over groups with a defined value.
    pub gap: Option<f64>,
    /// `min / max` over groups with a defined value.
    pub ratio: Option<f64>,
    pub undefined_groups: Vec<UndefinedGroup>,
    pub passed: Option<bool>,
    pub components: BTreeMap<String, ComponentResult>,
    pub notes: Vec<String>,
}

const FEWER_THAN_TWO: &str = "fewer than 2 groups with a defined value; gap and ratio undefined";

/// Confusion counts per observed category of `attribute` within `slice`.
pub(crate) fn group_counts(
    dataset: &LabeledDataset,
    attribute: &str,
    slice: &SliceFilter,
) -> Result<BTreeMap<String, ConfusionCounts>> {
    dataset.require_protected(attribute)?;
    let mut groups: BTreeMap<String, ConfusionCounts> = BTreeMap::new();
    for record in dataset.records().iter().filter(|r| slice.matches(r)) {
        let value = record.attribute(attribute).unwrap_or(super::UNSPECIFIED);
        groups
            .entry(value.to_string())
            .or_default()
            .add(record.y_true, record.prediction()?);
    }
    Ok(groups)
}

pub(crate) fn component(groups: &BTreeMap<String, ConfusionCounts>, rate: RateKind) -> ComponentResult {
    let mut group_values = BTreeMap::new();
    let mut defined: Vec<Fraction> = Vec::with_capacity(groups.len());
    for (group, counts) in groups {
        let fraction = counts.fraction(rate);
        group_values.insert(group.clone(), fraction.map(Fraction::value));
        defined.extend(fraction);
    }
    let (gap, ratio) = match (defined.iter().min(), defined.iter().max()) {
        (Some(&min), Some(&max)) if defined.len() >= 2 => (Some(max.abs_diff(min)), min.divide(max)),
        _ => (None, None),
    };
    ComponentResult {
        rate,
        group_values,
        gap,
        ratio,
    }
}

fn undefined_in(component: &ComponentResult, prefix: bool) -> Vec<UndefinedGroup> {
    component
        .group_values
        .iter()
        .filter(|(_, v)| v.is_none())
        .map(|(group, _)| UndefinedGroup {
            group: group.clone(),
            reason: if prefix {
                format!("{}: {}", component.rate, component.rate.undefined_reason())
            } else {
                component.rate.undefined_reason().to_string()
            },
        })
        .collect()
}

fn base_result(
    criterion: Criterion,
    attribute: &str,
    groups: &BTreeMap<String, ConfusionCounts>,
    opts: &MetricOptions,
) -> MetricResult {
    MetricResult {
        criterion,
        attribute: attribute.to_string(),
        group_values: BTreeMap::new(),
        group_support: groups.iter().map(|(g, c)| (g.clone(), c.support)).collect(),
        low_support_groups: groups
            .iter()
            .filter(|(_, c)| c.support < opts.min_support)
            .map(|(g, _)| g.clone())
            .collect(),
        gap: None,
        ratio: None,
        undefined_groups: Vec::new(),
        passed: None,
        components: BTreeMap::new(),
        notes: Vec::new(),
    }
}

fn finish(mut result: MetricResult, opts: &MetricOptions) -> MetricResult {
    if result.gap.is_none() {
        result.notes.push(FEWER_THAN_TWO.to_string());
    }
    result.passed = match (opts.gap_threshold, result.gap) {
        (Some(threshold), Some(gap)) => Some(gap <= threshold),
        _ => None,
    };
    result
}

pub(crate) fn single_rate_result(
    criterion: Criterion,
    attribute: &str,
    groups: &BTreeMap<String, ConfusionCounts>,
    rate: RateKind,
    opts: &MetricOptions,
) -> MetricResult {
    let comp = component(groups, rate);
    let mut result = base_result(criterion, attribute, groups, opts);
    result.undefined_groups = undefined_in(&comp, false);
    result.group_values = comp.group_values;
    result.gap = comp.gap;
    result.ratio = comp.ratio;
    finish(result, opts)
}

pub(crate) fn equalized_odds_result(
    attribute: &str,
    groups: &BTreeMap<String, ConfusionCounts>,
    opts: &MetricOptions,
) -> MetricResult {
    let tpr = component(groups, RateKind::Tpr);
    let fpr = component(groups, RateKind::Fpr);
    let fnr = component(groups, RateKind::Fnr);

    let mut result = base_result(Criterion::EqualizedOdds, attribute, groups, opts);
    result.undefined_groups = undefined_in(&tpr, true);
    result.undefined_groups.extend(undefined_in(&fpr, true));
    result.group_values = tpr.group_values.clone();
    result.gap = [tpr.gap, fpr.gap].into_iter().flatten().reduce(f64::max);
    result.ratio = [tpr.ratio, fpr.ratio].into_iter().flatten().reduce(f64::min);
    for comp in [tpr, fpr, fnr] {
        result.components.insert(comp.rate.to_string(), comp);
    }
    finish(result, opts)
}

pub(crate) fn criterion_result(
    criterion: Criterion,
    attribute: &str,
    groups: &BTreeMap<String, ConfusionCounts>,
    opts: &MetricOptions,
) -> Result<MetricResult> {
    Ok(match criterion {
        Criterion::DemographicParity => single_rate_result(criterion, attribute, groups, RateKind::PositiveRate, opts),
        Criterion::EqualizedOpportunity => single_rate_result(criterion, attribute, groups, RateKind::Tpr, opts),
        Criterion::EqualizedOdds => equalized_odds_result(attribute, groups, opts),
        Criterion::Custom(rate) => single_rate_result(criterion, attribute, groups, rate, opts),
        Criterion::Unawareness | Criterion::Awareness => {
            return Err(EngineError::Config(format!("{criterion} is not a group criterion")))
        }
    })
}

/// Positive-prediction rate per group.
pub fn demographic_parity(
    dataset: &LabeledDataset,
    attribute: &str,
    slice: &SliceFilter,
    opts: &MetricOptions,
) -> Result<MetricResult> {
    let groups = group_counts(dataset, attribute, slice)?;
    criterion_result(Criterion::DemographicParity, attribute, &groups, opts)
}

/// True positive rate per group; groups without actual positives are undefined.
pub fn equalized_opportunity(
    dataset: &LabeledDataset,
    attribute: &str,
    slice: &SliceFilter,
    opts: &MetricOptions,
) -> Result<MetricResult> {
    let groups = group_counts(dataset, attribute, slice)?;
    criterion_result(Criterion::EqualizedOpportunity, attribute, &groups, opts)
}

/// TPR and FPR per group; the gap is the larger of the two rate gaps. The
/// FNR comparison is emitted as well and always equals the TPR gap.
pub fn equalized_odds(
    dataset: &LabeledDataset,
    attribute: &str,
    slice: &SliceFilter,
    opts: &MetricOptions,
) -> Result<MetricResult> {
    let groups = group_counts(dataset, attribute, slice)?;
    criterion_result(Criterion::EqualizedOdds, attribute, &groups, opts)
}

pub fn custom_parity(
    dataset: &LabeledDataset,
    rate: RateKind,
    attribute: &str,
    slice: &SliceFilter,
    opts: &MetricOptions,
) -> Result<MetricResult> {
    let groups = group_counts(dataset, attribute, slice)?;
    criterion_result(Criterion::Custom(rate), attribute, &groups, opts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnawarenessStatus {
    Compliant,
    NonCompliant,
    /// No declared features, so nothing can be said either way.
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnawarenessResult {
    pub status: UnawarenessStatus,
    pub offending_features: Vec<String>,
}

impl UnawarenessResult {
    pub fn compliant(&self) -> Option<bool> {
        match self.status {
            UnawarenessStatus::Compliant => Some(true),
            UnawarenessStatus::NonCompliant => Some(false),
            UnawarenessStatus::Indeterminate => None,
        }
    }
}

/// Flags declared model features that coincide with protected attributes
/// (case-insensitive, whitespace-trimmed).
pub fn unawareness_check(dataset: &LabeledDataset) -> UnawarenessResult {
    let normalize = |s: &str| s.trim().to_lowercase();
    if dataset.declared_features().is_empty() {
        return UnawarenessResult {
            status: UnawarenessStatus::Indeterminate,
            offending_features: Vec::new(),
        };
    }
    let protected: Vec<String> = dataset.protected_attributes().iter().map(|a| normalize(a)).collect();
    let offending: Vec<String> = dataset
        .declared_features()
        .iter()
        .filter(|f| protected.contains(&normalize(f)))
        .cloned()
        .collect();
    UnawarenessResult {
        status: if offending.is_empty() {
            UnawarenessStatus::Compliant
        } else {
            UnawarenessStatus::NonCompliant
        },
        offending_features: offending,
    }
}

//! Two-sample permutation test on a per-group rate.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::confusion::{ConfusionCounts, RateKind};
use super::dataset::LabeledDataset;
use super::fraction::Fraction;
use super::{EngineError, Result};
use crate::rng::{SeededRng, RNG_ALGORITHM};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermutationMetric {
    PositiveRate,
    Tpr,
    Fpr,
    Accuracy,
}

impl PermutationMetric {
    fn rate(self) -> RateKind {
        match self {
            Self::PositiveRate => RateKind::PositiveRate,
            Self::Tpr => RateKind::Tpr,
            Self::Fpr => RateKind::Fpr,
            Self::Accuracy => RateKind::Accuracy,
        }
    }
}

impl fmt::Display for PermutationMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.rate().as_str())
    }
}

impl FromStr for PermutationMetric {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive_rate" => Ok(Self::PositiveRate),
            "tpr" => Ok(Self::Tpr),
            "fpr" => Ok(Self::Fpr),
            "accuracy" => Ok(Self::Accuracy),
            other => Err(EngineError::Config(format!(
                "unknown permutation metric {other:?}; expected positive_rate, tpr, fpr or accuracy"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermutationTestResult {
    pub metric_name: String,
    pub attribute: String,
    pub groups: [String; 2],
    /// `|metric(group 0) - metric(group 1)|` under the observed assignment.
    pub statistic: f64,
    /// `(b + 1) / (n + 1)`.
    pub p_value: f64,
    /// `b`: permuted statistics at least as large as the observed one.
    pub exceedances: u64,
    pub n_permutations: u64,
    pub seed: u64,
    pub rng: String,
}

/// Shuffles group membership `n_permutations` times with a seeded
/// generator and counts permuted gaps `>=` the observed gap.
///
/// A permutation that leaves the metric undefined in either group counts as
/// an exceedance, which can only raise the p-value. Records are processed in
/// `record_id` order, so the result does not depend on input order.
pub fn permutation_test(
    dataset: &LabeledDataset,
    attribute: &str,
    metric: PermutationMetric,
    n_permutations: u64,
    seed: u64,
) -> Result<PermutationTestResult> {
    dataset.require_protected(attribute)?;
    if n_permutations == 0 {
        return Err(EngineError::Validation("n_permutations must be >= 1".into()));
    }
    let mut records: Vec<_> = dataset.records().iter().collect();
    records.sort_by(|a, b| a.record_id.cmp(&b.record_id));

    let categories: BTreeSet<&str> = records
        .iter()
        .map(|r| r.attribute(attribute).unwrap_or(super::UNSPECIFIED))
        .collect();
    if categories.len() != 2 {
        return Err(EngineError::Config(format!(
            "permutation test needs exactly 2 observed categories of {attribute:?}, found {}",
            categories.len()
        )));
    }
    let groups: Vec<&str> = categories.into_iter().collect();
    let outcomes = records
        .iter()
        .map(|r| Ok((r.y_true, r.prediction()?)))
        .collect::<Result<Vec<_>>>()?;
    let mut membership: Vec<bool> = records
        .iter()
        .map(|r| r.attribute(attribute).unwrap_or(super::UNSPECIFIED) == groups[1])
        .collect();

    let rate = metric.rate();
    let (obs_a, obs_b) = group_rates(&outcomes, &membership, rate).ok_or_else(|| {
        EngineError::Degenerate(format!("{metric} is undefined for a group under the observed assignment"))
    })?;

    let mut rng = SeededRng::new(seed);
    let mut exceedances = 0u64;
    for _ in 0..n_permutations {
        rng.shuffle(&mut membership);
        let extreme = match group_rates(&outcomes, &membership, rate) {
            Some((a, b)) => Fraction::cmp_abs_diff(a, b, obs_a, obs_b) != Ordering::Less,
            None => true,
        };
        exceedances += u64::from(extreme);
    }

    Ok(PermutationTestResult {
        metric_name: metric.to_string(),
        attribute: attribute.to_string(),
        groups: [groups[0].to_string(), groups[1].to_string()],
        statistic: obs_a.abs_diff(obs_b),
        p_value: (exceedances + 1) as f64 / (n_permutations + 1) as f64,
        exceedances,
        n_permutations,
        seed,
        rng: RNG_ALGORITHM.to_string(),
    })
}

fn group_rates(outcomes: &[(bool, bool)], in_second: &[bool], rate: RateKind) -> Option<(Fraction, Fraction)> {
    let mut first = ConfusionCounts::default();
    let mut second = ConfusionCounts::default();
    for (&(y, p), &second_group) in outcomes.iter().zip(in_second) {
        if second_group {
            second.add(y, p);
        } else {
            first.add(y, p);
        }
    }
    Some((first.fraction(rate)?, second.fraction(rate)?))
}

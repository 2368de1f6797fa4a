//! Distances between categorical distributions: KL and JS divergence,
//! total variation and L-p norms. Natural logarithms throughout.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dataset::LabeledDataset;
use super::{EngineError, Result};
use crate::ExtendedReal;

pub const LOG_BASE: &str = "e";

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Probabilities keyed by category label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct CategoricalDistribution(BTreeMap<String, f64>);

impl CategoricalDistribution {
    pub fn new(probs: BTreeMap<String, f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(EngineError::Validation("distribution has no categories".into()));
        }
        if let Some((label, p)) = probs.iter().find(|(_, p)| !(p.is_finite() && **p >= 0.0)) {
            return Err(EngineError::Validation(format!(
                "probability for {label:?} must be finite and >= 0, got {p}"
            )));
        }
        let sum: f64 = probs.values().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(EngineError::Validation(format!("probabilities sum to {sum}, expected 1")));
        }
        Ok(Self(probs))
    }

    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        Self::new(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    /// Normalizes non-negative counts.
    pub fn from_counts(counts: &BTreeMap<String, u64>) -> Result<Self> {
        let total: u64 = counts.values().sum();
        if total == 0 {
            return Err(EngineError::Degenerate("cannot normalize zero counts".into()));
        }
        Self::new(counts.iter().map(|(k, &c)| (k.clone(), c as f64 / total as f64)).collect())
    }

    pub fn labels(&self) -> impl Iterator<Item = &String> {
        self.0.keys()
    }

    pub fn probabilities(&self) -> &BTreeMap<String, f64> {
        &self.0
    }
}

impl TryFrom<BTreeMap<String, f64>> for CategoricalDistribution {
    type Error = EngineError;

    fn try_from(value: BTreeMap<String, f64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<CategoricalDistribution> for BTreeMap<String, f64> {
    fn from(value: CategoricalDistribution) -> Self {
        value.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceResult {
    /// `KL(p || q)`; infinite when `q` misses mass that `p` has.
    pub kl: ExtendedReal,
    pub js: f64,
    pub tv: f64,
    pub lp: f64,
    pub p_order: f64,
    pub support_labels: Vec<String>,
    pub log_base: String,
}

pub fn divergence(p: &CategoricalDistribution, q: &CategoricalDistribution, p_order: f64) -> Result<DivergenceResult> {
    if !(p_order >= 1.0 && p_order.is_finite()) {
        return Err(EngineError::Validation(format!("L-p order {p_order} must be finite and >= 1")));
    }
    if !p.0.keys().eq(q.0.keys()) {
        return Err(EngineError::Config(format!(
            "label sets differ: {:?} vs {:?}",
            p.0.keys().collect::<Vec<_>>(),
            q.0.keys().collect::<Vec<_>>()
        )));
    }
    let ps: Vec<f64> = p.0.values().copied().collect();
    let qs: Vec<f64> = q.0.values().copied().collect();

    let kl = kl_divergence(&ps, &qs);
    let mid: Vec<f64> = ps.iter().zip(&qs).map(|(a, b)| (a + b) / 2.0).collect();
    // The midpoint covers both supports, so both terms are finite.
    let js_p = kl_divergence(&ps, &mid).finite().unwrap_or(0.0);
    let js_q = kl_divergence(&qs, &mid).finite().unwrap_or(0.0);
    let js = (0.5 * js_p + 0.5 * js_q).clamp(0.0, std::f64::consts::LN_2);

    let l1: f64 = ps.iter().zip(&qs).map(|(a, b)| (a - b).abs()).sum();
    let lp = ps
        .iter()
        .zip(&qs)
        .map(|(a, b)| (a - b).abs().powf(p_order))
        .sum::<f64>()
        .powf(1.0 / p_order);

    Ok(DivergenceResult {
        kl,
        js,
        tv: (0.5 * l1).min(1.0),
        lp,
        p_order,
        support_labels: p.0.keys().cloned().collect(),
        log_base: LOG_BASE.to_string(),
    })
}

fn kl_divergence(p: &[f64], q: &[f64]) -> ExtendedReal {
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return ExtendedReal::Infinite;
        }
        total += pi * (pi / qi).ln();
    }
    // Gibbs' inequality; rounding can leave a tiny negative residue.
    ExtendedReal::Finite(total.max(0.0))
}

/// Distribution of outcomes (`"0"` / `"1"`) within one group, from true
/// labels or from predictions.
pub fn group_outcome_distribution(
    dataset: &LabeledDataset,
    attribute: &str,
    group: &str,
    use_predictions: bool,
) -> Result<CategoricalDistribution> {
    dataset.require_protected(attribute)?;
    let mut counts = BTreeMap::from([("0".to_string(), 0u64), ("1".to_string(), 0u64)]);
    for record in dataset.records().iter().filter(|r| r.attribute(attribute) == Some(group)) {
        let outcome = if use_predictions { record.prediction()? } else { record.y_true };
        *counts.get_mut(if outcome { "1" } else { "0" }).expect("both outcomes present") += 1;
    }
    CategoricalDistribution::from_counts(&counts)
        .map_err(|_| EngineError::Degenerate(format!("group {attribute}={group} has no records")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(ps: &[f64]) -> CategoricalDistribution {
        CategoricalDistribution::from_pairs(ps.iter().enumerate().map(|(i, &p)| (format!("c{i}"), p))).unwrap()
    }

    #[test]
    fn identical_distributions() {
        let p = dist(&[0.5, 0.5]);
        let r = divergence(&p, &p, 2.0).unwrap();
        assert_eq!(r.kl, ExtendedReal::Finite(0.0));
        assert_eq!((r.js, r.tv, r.lp), (0.0, 0.0, 0.0));
    }

    #[test]
    fn disjoint_supports() {
        let r = divergence(&dist(&[1.0, 0.0]), &dist(&[0.0, 1.0]), 2.0).unwrap();
        assert_eq!(r.tv, 1.0);
        assert_eq!(r.kl, ExtendedReal::Infinite);
        assert!((r.js - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn half_versus_quarter() {
        let r = divergence(&dist(&[0.5, 0.5]), &dist(&[0.25, 0.75]), 2.0).unwrap();
        // 0.5 ln 2 + 0.5 ln(2/3)
        let expected = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert!((r.kl.finite().unwrap() - expected).abs() < 1e-15);
        assert!((r.kl.finite().unwrap() - 0.14384).abs() < 1e-5);
        assert_eq!(r.tv, 0.25);
        assert!((r.lp - 0.125f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            CategoricalDistribution::from_pairs([("a", 0.5), ("b", 0.6)]),
            Err(EngineError::Validation(msg)) if msg.contains("1.1")
        ));
        assert!(CategoricalDistribution::from_pairs([("a", -0.5), ("b", 1.5)]).is_err());
        let p = CategoricalDistribution::from_pairs([("a", 0.5), ("b", 0.5)]).unwrap();
        let q = CategoricalDistribution::from_pairs([("a", 0.5), ("c", 0.5)]).unwrap();
        assert!(matches!(divergence(&p, &q, 2.0), Err(EngineError::Config(_))));
        assert!(divergence(&p, &p, 0.5).is_err());
    }

    #[test]
    fn l1_is_twice_tv() {
        let r = divergence(&dist(&[0.2, 0.3, 0.5]), &dist(&[0.6, 0.1, 0.3]), 1.0).unwrap();
        assert_eq!(r.lp, 2.0 * r.tv);
    }
}

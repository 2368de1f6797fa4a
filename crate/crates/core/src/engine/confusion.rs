use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::dataset::{LabeledDataset, LabeledRecord};
use super::fraction::Fraction;
use super::slice::SliceFilter;
use super::{EngineError, Result};

/// Groups smaller than this are flagged, never excluded.
pub const DEFAULT_MIN_SUPPORT: u64 = 30;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub support: u64,
}

impl ConfusionCounts {
    pub fn add(&mut self, y_true: bool, y_pred: bool) {
        match (y_true, y_pred) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fn_ += 1,
        }
        self.support += 1;
    }

    pub(crate) fn tally<'a>(records: impl IntoIterator<Item = &'a LabeledRecord>) -> Result<Self> {
        let mut counts = Self::default();
        for record in records {
            counts.add(record.y_true, record.prediction()?);
        }
        Ok(counts)
    }

    pub(crate) fn fraction(&self, rate: RateKind) -> Option<Fraction> {
        let (num, den) = match rate {
            RateKind::PositiveRate => (self.tp + self.fp, self.support),
            RateKind::Tpr => (self.tp, self.tp + self.fn_),
            RateKind::Fpr => (self.fp, self.fp + self.tn),
            RateKind::Fnr => (self.fn_, self.fn_ + self.tp),
            RateKind::Accuracy => (self.tp + self.tn, self.support),
        };
        Fraction::new(num, den)
    }

    pub fn rate(&self, rate: RateKind) -> Option<f64> {
        self.fraction(rate).map(Fraction::value)
    }
}

/// The per-group rates the criteria are built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    PositiveRate,
    Tpr,
    Fpr,
    Fnr,
    Accuracy,
}

impl RateKind {
    pub const ALL: [RateKind; 5] = [Self::PositiveRate, Self::Tpr, Self::Fpr, Self::Fnr, Self::Accuracy];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::PositiveRate => "positive_rate",
            Self::Tpr => "tpr",
            Self::Fpr => "fpr",
            Self::Fnr => "fnr",
            Self::Accuracy => "accuracy",
        }
    }

    pub(crate) fn undefined_reason(&self) -> &'static str {
        match self {
            Self::PositiveRate | Self::Accuracy => "empty group (support = 0)",
            Self::Tpr | Self::Fnr => "no actual positives (tp + fn = 0)",
            Self::Fpr => "no actual negatives (fp + tn = 0)",
        }
    }
}

impl fmt::Display for RateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RateKind {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| EngineError::Config(format!("unknown rate {s:?}")))
    }
}

/// Rates derived from one slice's confusion counts. `None` marks a rate
/// whose denominator is zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub positive_rate: Option<f64>,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
    pub accuracy: Option<f64>,
    pub support: u64,
    pub low_support_warning: bool,
}

impl GroupMetrics {
    pub fn get(&self, rate: RateKind) -> Option<f64> {
        match rate {
            RateKind::PositiveRate => self.positive_rate,
            RateKind::Tpr => self.tpr,
            RateKind::Fpr => self.fpr,
            RateKind::Fnr => self.fnr,
            RateKind::Accuracy => self.accuracy,
        }
    }
}

/// Confusion counts over the records matching `slice`.
pub fn confusion(dataset: &LabeledDataset, slice: &SliceFilter) -> Result<ConfusionCounts> {
    ConfusionCounts::tally(dataset.records().iter().filter(|r| slice.matches(r)))
}

pub fn group_metrics(counts: &ConfusionCounts, min_support: u64) -> GroupMetrics {
    GroupMetrics {
        positive_rate: counts.rate(RateKind::PositiveRate),
        tpr: counts.rate(RateKind::Tpr),
        fpr: counts.rate(RateKind::Fpr),
        fnr: counts.rate(RateKind::Fnr),
        accuracy: counts.rate(RateKind::Accuracy),
        support: counts.support,
        low_support_warning: counts.support < min_support,
    }
}

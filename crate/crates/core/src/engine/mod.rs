//! Deterministic fairness metrics over labeled predictions.

mod awareness;
mod confusion;
mod criteria;
mod dataset;
mod divergence;
mod drift;
mod enumerate;
mod fraction;
pub mod io;
mod permutation;
mod report;
mod slice;

pub use awareness::{awareness_check, AwarenessConfig, DistanceKind, LipschitzCheckResult, OutputKind, DEFAULT_PAIR_CAP};
pub use confusion::{confusion, group_metrics, ConfusionCounts, GroupMetrics, RateKind, DEFAULT_MIN_SUPPORT};
pub use criteria::{
    custom_parity, demographic_parity, equalized_odds, equalized_opportunity, unawareness_check, ComponentResult,
    Criterion, MetricOptions, MetricResult, UnawarenessResult, UnawarenessStatus, UndefinedGroup,
};
pub use dataset::{threshold_predictions, LabeledDataset, LabeledRecord, DEFAULT_THRESHOLD, UNSPECIFIED};
pub use divergence::{divergence, group_outcome_distribution, CategoricalDistribution, DivergenceResult, LOG_BASE};
pub use drift::{drift, DriftResult, MetricDrift, StructuralChange};
pub use enumerate::{enumerate_slices, SliceEnumeration};
pub use permutation::{permutation_test, PermutationMetric, PermutationTestResult};
pub use report::{
    compute_report, ItemOutcome, ReportConfig, ReportItem, SampleConfig, SliceResult, FairnessReport,
    DEFAULT_SLICE_DEPTH,
};
pub use slice::SliceFilter;
pub use dataset::subsample;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("malformed dataset{}: {reason}", record_id.as_ref().map(|id| format!(" (record {id:?})")).unwrap_or_default())]
    MalformedDataset { record_id: Option<String>, reason: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("capacity exceeded: {n} records exceeds the pair-scan cap of {cap}; subsample the dataset first")]
    Capacity { n: usize, cap: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("reports are not comparable: {0}")]
    Comparability(String),
}

impl EngineError {
    pub(crate) fn malformed(record_id: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::MalformedDataset {
            record_id: Some(record_id.into()),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;

//! The self-audit report published to the registry.

use serde::{Deserialize, Serialize};

use super::boc::Boc;
use super::ledger::{Ledger, LedgerEntry};
use super::snapshot::{EncryptedSnapshotInfo, AEAD_ALGORITHM};
use super::{AuditError, Result};
use crate::canonical::{canonical_digest_of, to_canonical_bytes};
use crate::digest::DIGEST_ALGORITHM;
use crate::engine::FairnessReport;
use crate::{Digest32, Timestamp};

pub const CANONICAL_DISCLAIMER: &str = "Fairness metrics are relative; no AI is completely unbiased.";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Finding {
    Confirmed,
    Discrepancy,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditEvent {
    pub auditor_id: String,
    pub at: Timestamp,
    pub finding: Finding,
    pub note: String,
    pub probed_report_digest: Digest32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditReport {
    pub service_id: String,
    pub vendor_id: String,
    pub report_version: u32,
    pub timestamp: Timestamp,
    pub dataset_name: String,
    pub dataset_digest: Digest32,
    pub snapshot: EncryptedSnapshotInfo,
    pub fairness_report: FairnessReport,
    pub disclaimer: String,
    pub digest_algorithm: String,
    #[serde(default)]
    pub audit_flag: bool,
    #[serde(default)]
    pub audit_history: Vec<AuditEvent>,
    #[serde(default)]
    pub boc: Option<Boc>,
}

/// The fields the report digest commits to. Certificates and audit
/// findings attach to a digest afterwards, so they sit outside it.
#[derive(Serialize)]
struct DigestedBody<'a> {
    service_id: &'a str,
    vendor_id: &'a str,
    report_version: u32,
    timestamp: Timestamp,
    dataset_name: &'a str,
    dataset_digest: &'a Digest32,
    snapshot: &'a EncryptedSnapshotInfo,
    fairness_report: &'a FairnessReport,
    disclaimer: &'a str,
    digest_algorithm: &'a str,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub reason: String,
}

impl std::fmt::Display for FieldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

impl AuditReport {
    pub fn new(
        service_id: impl Into<String>,
        vendor_id: impl Into<String>,
        report_version: u32,
        timestamp: Timestamp,
        dataset_digest: Digest32,
        snapshot: EncryptedSnapshotInfo,
        fairness_report: FairnessReport,
    ) -> Self {
        Self {
            service_id: service_id.into(),
            vendor_id: vendor_id.into(),
            report_version,
            timestamp,
            dataset_name: fairness_report.dataset_name.clone(),
            dataset_digest,
            snapshot,
            fairness_report,
            disclaimer: CANONICAL_DISCLAIMER.to_string(),
            digest_algorithm: DIGEST_ALGORITHM.to_string(),
            audit_flag: false,
            audit_history: Vec::new(),
            boc: None,
        }
    }

    fn body(&self) -> DigestedBody<'_> {
        DigestedBody {
            service_id: &self.service_id,
            vendor_id: &self.vendor_id,
            report_version: self.report_version,
            timestamp: self.timestamp,
            dataset_name: &self.dataset_name,
            dataset_digest: &self.dataset_digest,
            snapshot: &self.snapshot,
            fairness_report: &self.fairness_report,
            disclaimer: &self.disclaimer,
            digest_algorithm: &self.digest_algorithm,
        }
    }

    pub fn canonical_digest(&self) -> Result<Digest32> {
        Ok(canonical_digest_of(&self.body())?)
    }

    /// The full canonical document, including certificate and audit history.
    pub fn to_canonical_bytes(&self) -> Result<Vec<u8>> {
        Ok(to_canonical_bytes(self)?)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(bytes)
    }

    /// Structural checks that need no keys. An empty list means valid.
    pub fn validate(&self) -> Vec<FieldError> {
        let mut errors = Vec::new();
        let mut fail = |field: &str, reason: String| {
            errors.push(FieldError {
                field: field.to_string(),
                reason,
            })
        };
        if !is_slug(&self.service_id) {
            fail("service_id", "must be a non-empty slug of [a-z0-9_-]".into());
        }
        if self.vendor_id.trim().is_empty() {
            fail("vendor_id", "must not be empty".into());
        }
        if self.report_version < 1 {
            fail("report_version", "must be at least 1".into());
        }
        if self.disclaimer != CANONICAL_DISCLAIMER {
            fail("disclaimer", format!("must equal {CANONICAL_DISCLAIMER:?} exactly"));
        }
        if self.digest_algorithm != DIGEST_ALGORITHM {
            fail("digest_algorithm", format!("must be {DIGEST_ALGORITHM}"));
        }
        if self.dataset_name.trim().is_empty() {
            fail("dataset_name", "must not be empty".into());
        } else if self.dataset_name != self.fairness_report.dataset_name {
            fail("dataset_name", "differs from the embedded fairness report".into());
        }
        if let Some(d) = self.fairness_report.dataset_digest {
            if d != self.dataset_digest {
                fail("dataset_digest", "differs from the embedded fairness report".into());
            }
        }
        if self.snapshot.aead_algorithm != AEAD_ALGORITHM {
            fail("snapshot.aead_algorithm", format!("must be {AEAD_ALGORITHM}"));
        }
        if hex::decode(&self.snapshot.nonce).map(|n| n.len()) != Ok(12) || self.snapshot.nonce != self.snapshot.nonce.to_lowercase() {
            fail("snapshot.nonce", "must be 12 bytes of lowercase hex".into());
        }
        for problem in self.fairness_report.validate() {
            fail("fairness_report", problem);
        }
        if self.audit_flag && self.audit_history.is_empty() {
            fail("audit_flag", "set without any audit_history".into());
        }
        if !self.audit_flag && !self.audit_history.is_empty() {
            fail("audit_flag", "unset despite audit_history".into());
        }
        if self.audit_history.windows(2).any(|w| w[1].at < w[0].at) {
            fail("audit_history", "events are not in chronological order".into());
        }
        match self.canonical_digest() {
            Ok(digest) => {
                if self.audit_history.iter().any(|e| e.probed_report_digest != digest) {
                    fail("audit_history", "an event probes a different report".into());
                }
                if let Some(boc) = &self.boc {
                    if boc.report_digest != digest {
                        fail("boc.report_digest", "does not match this report".into());
                    }
                }
            }
            Err(e) => fail("fairness_report", e.to_string()),
        }
        errors
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let errors = self.validate();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(AuditError::Invalid(errors))
        }
    }
}

fn is_slug(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-' || b == b'_')
}

/// Records an auditor's finding: the event is first committed to the
/// ledger, then appended to the report history and the flag is raised.
pub fn record_audit(report: &mut AuditReport, event: AuditEvent, ledger: &mut Ledger) -> Result<LedgerEntry> {
    let expected = report.canonical_digest()?;
    if event.probed_report_digest != expected {
        return Err(AuditError::Binding {
            expected,
            actual: event.probed_report_digest,
        });
    }
    if let Some(latest) = report.audit_history.last() {
        if event.at < latest.at {
            return Err(AuditError::OutOfOrder {
                at: event.at.to_string(),
                latest: latest.at.to_string(),
            });
        }
    }
    let entry = ledger.append(canonical_digest_of(&event)?, event.at)?;
    report.audit_history.push(event);
    report.audit_flag = true;
    Ok(entry)
}

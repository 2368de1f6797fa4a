//! Public compliance badge for a registered service.

use fairlens_core::audit::{verify_boc, BocPublicKey, Finding};
use fairlens_core::{Digest32, Timestamp};
use serde::{Deserialize, Serialize};

use crate::error::RegistryError;
use crate::store::Store;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BadgeState {
    Compliant,
    Stale,
    NeverReported,
    AuditDiscrepancy,
    /// Current report without a valid certificate from a known issuer.
    Uncertified,
    /// The ledger on disk fails verification.
    ChainBroken,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BadgeStatus {
    pub service_id: String,
    pub status: BadgeState,
    pub latest_report_digest: Option<Digest32>,
    pub latest_report_age_seconds: Option<i64>,
    pub audit_frequency_seconds: u64,
    pub boc_valid: bool,
    pub boc_issuer: Option<String>,
    pub chain_ok: bool,
    pub unresolved_discrepancy: bool,
    pub audit_flag: bool,
    pub evaluated_at: Timestamp,
}

/// Status precedence: never reported, then an open discrepancy, then
/// staleness, then a broken chain, then a missing certificate.
pub fn evaluate(
    store: &Store,
    service_id: &str,
    now: Timestamp,
    issuers: &[(String, BocPublicKey)],
) -> Result<BadgeStatus, RegistryError> {
    let service = store
        .service(service_id)
        .ok_or_else(|| RegistryError::NotFound(format!("service {service_id:?}")))?;
    let chain_ok = store.verify_ledger_file().is_ok();
    let mut badge = BadgeStatus {
        service_id: service_id.to_string(),
        status: BadgeState::NeverReported,
        latest_report_digest: None,
        latest_report_age_seconds: None,
        audit_frequency_seconds: service.audit_frequency_seconds,
        boc_valid: false,
        boc_issuer: None,
        chain_ok,
        unresolved_discrepancy: false,
        audit_flag: false,
        evaluated_at: now,
    };
    let Some(latest) = store.latest_report(service_id) else {
        return Ok(badge);
    };
    let report = store.load_report(&latest.digest)?;
    let age = now.unix_seconds() - latest.timestamp.unix_seconds();
    badge.latest_report_digest = Some(latest.digest);
    badge.latest_report_age_seconds = Some(age);
    badge.audit_flag = report.audit_flag;
    if let Some(boc) = &report.boc {
        badge.boc_issuer = Some(boc.issuer_id.clone());
        badge.boc_valid = issuers
            .iter()
            .any(|(id, key)| *id == boc.issuer_id && verify_boc(boc, &latest.digest, key));
    }
    badge.unresolved_discrepancy = has_unresolved_discrepancy(store, service_id);

    badge.status = if badge.unresolved_discrepancy {
        BadgeState::AuditDiscrepancy
    } else if age > service.audit_frequency_seconds as i64 {
        BadgeState::Stale
    } else if !chain_ok {
        BadgeState::ChainBroken
    } else if !badge.boc_valid {
        BadgeState::Uncertified
    } else {
        BadgeState::Compliant
    };
    Ok(badge)
}

/// A discrepancy stays open until a confirmed finding, recorded later, on
/// a report newer than the one the discrepancy was found in.
fn has_unresolved_discrepancy(store: &Store, service_id: &str) -> bool {
    let audits = store.service_audits(service_id);
    audits.iter().filter(|(a, _)| a.event.finding == Finding::Discrepancy).any(|(d, bad)| {
        !audits.iter().any(|(c, newer)| {
            c.event.finding == Finding::Confirmed && c.event.at >= d.event.at && newer.timestamp > bad.timestamp
        })
    })
}

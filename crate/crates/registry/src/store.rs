//! Registry persistence: content-addressed report blobs, the hash-chained
//! ledger and a small index document, all under one data directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fairlens_core::audit::{
    record_audit, verify_boc, verify_ledger_bytes, AuditEvent, AuditReport, BocPublicKey, ChainVerification,
    FieldError, Finding, Ledger, LedgerEntry,
};
use fairlens_core::{Digest32, Timestamp};
use serde::{Deserialize, Serialize};

use crate::error::RegistryError;

const INDEX_FILE: &str = "index.json";
const LEDGER_FILE: &str = "ledger.jsonl";
const REPORTS_DIR: &str = "reports";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceRegistration {
    pub service_id: String,
    pub vendor_id: String,
    pub display_name: String,
    pub audit_frequency_seconds: u64,
    pub created_at: Timestamp,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub digest: Digest32,
    pub service_id: String,
    pub vendor_id: String,
    pub report_version: u32,
    pub timestamp: Timestamp,
    pub ledger_index: u64,
    pub submitted_at: Timestamp,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub event: AuditEvent,
    pub event_digest: Digest32,
    pub ledger_index: u64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
struct IndexDoc {
    services: BTreeMap<String, ServiceRegistration>,
    /// Keyed by report digest hex.
    reports: BTreeMap<String, ReportRecord>,
    /// In recording order.
    audits: Vec<AuditRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReportSummary {
    pub digest: Digest32,
    pub report_version: u32,
    pub timestamp: Timestamp,
    pub ledger_index: u64,
    pub audit_flag: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportPage {
    pub service_id: String,
    pub items: Vec<ReportSummary>,
    pub next_cursor: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Submitted {
    pub digest: Digest32,
    pub ledger_index: u64,
    /// False when an identical report was already stored.
    pub created: bool,
}

pub struct Store {
    dir: PathBuf,
    index: IndexDoc,
    ledger: Ledger,
}

fn io_error(context: &str, path: &Path, e: std::io::Error) -> RegistryError {
    RegistryError::Internal(format!("{context} {}: {e}", path.display()))
}

impl Store {
    pub fn open(dir: &Path) -> Result<Self, RegistryError> {
        std::fs::create_dir_all(dir.join(REPORTS_DIR)).map_err(|e| io_error("creating", dir, e))?;
        let index_path = dir.join(INDEX_FILE);
        let index = match std::fs::read(&index_path) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map_err(|e| RegistryError::Internal(format!("parsing {}: {e}", index_path.display())))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => IndexDoc::default(),
            Err(e) => return Err(io_error("reading", &index_path, e)),
        };
        let ledger = Ledger::open(dir.join(LEDGER_FILE)).map_err(|e| RegistryError::Internal(e.to_string()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            index,
            ledger,
        })
    }

    pub fn ledger_path(&self) -> PathBuf {
        self.dir.join(LEDGER_FILE)
    }

    fn report_path(&self, digest: &Digest32) -> PathBuf {
        self.dir.join(REPORTS_DIR).join(format!("{digest}.json"))
    }

    fn persist_index(&self) -> Result<(), RegistryError> {
        let path = self.dir.join(INDEX_FILE);
        let tmp = path.with_extension("json.tmp");
        let bytes = serde_json::to_vec_pretty(&self.index).map_err(|e| RegistryError::Internal(e.to_string()))?;
        std::fs::write(&tmp, bytes).map_err(|e| io_error("writing", &tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| io_error("renaming", &tmp, e))
    }

    pub fn service(&self, service_id: &str) -> Option<&ServiceRegistration> {
        self.index.services.get(service_id)
    }

    pub fn service_ids(&self) -> Vec<String> {
        self.index.services.keys().cloned().collect()
    }

    pub fn register_service(&mut self, registration: ServiceRegistration) -> Result<ServiceRegistration, RegistryError> {
        if let Some(existing) = self.index.services.get(&registration.service_id) {
            return Err(RegistryError::Conflict(format!(
                "service {:?} is already registered to {}",
                existing.service_id, existing.vendor_id
            )));
        }
        self.index.services.insert(registration.service_id.clone(), registration.clone());
        self.persist_index()?;
        Ok(registration)
    }

    /// Validates and stores a vendor report, appending it to the ledger.
    pub fn submit(
        &mut self,
        vendor_id: &str,
        report: AuditReport,
        now: Timestamp,
        default_frequency: u64,
        issuers: &[(String, BocPublicKey)],
    ) -> Result<Submitted, RegistryError> {
        let mut problems: Vec<FieldError> = Vec::new();
        if report.audit_flag {
            problems.push(field("audit_flag", "set by auditors only; submit false"));
        }
        if !report.audit_history.is_empty() {
            problems.push(field("audit_history", "set by auditors only; submit an empty list"));
        }
        problems.extend(report.validate().into_iter().filter(|e| !e.field.starts_with("audit_")));
        if !problems.is_empty() {
            return Err(RegistryError::Validation(problems));
        }
        if report.vendor_id != vendor_id {
            return Err(RegistryError::Forbidden(format!(
                "token belongs to vendor {vendor_id:?}, report names {:?}",
                report.vendor_id
            )));
        }
        if let Some(service) = self.service(&report.service_id) {
            if service.vendor_id != vendor_id {
                return Err(RegistryError::Forbidden(format!(
                    "service {:?} belongs to another vendor",
                    service.service_id
                )));
            }
        }
        let digest = report.canonical_digest().map_err(|e| RegistryError::field("fairness_report", e.to_string()))?;
        if let Some(boc) = &report.boc {
            let key = issuers.iter().find(|(id, _)| *id == boc.issuer_id).map(|(_, k)| k);
            match key {
                None => return Err(RegistryError::field("boc.issuer_id", format!("unknown issuer {:?}", boc.issuer_id))),
                Some(k) if !verify_boc(boc, &digest, k) => {
                    return Err(RegistryError::field("boc.signature", "does not verify for this report"))
                }
                Some(_) => {}
            }
        }
        let bytes = report.to_canonical_bytes().map_err(|e| RegistryError::Internal(e.to_string()))?;

        if let Some(existing) = self.index.reports.get(&digest.to_hex()) {
            let stored = std::fs::read(self.report_path(&digest))
                .map_err(|e| io_error("reading", &self.report_path(&digest), e))?;
            if stored == bytes {
                return Ok(Submitted {
                    digest,
                    ledger_index: existing.ledger_index,
                    created: false,
                });
            }
            return Err(RegistryError::Conflict(format!(
                "a different document is already stored under digest {digest}"
            )));
        }

        if self.service(&report.service_id).is_none() {
            self.index.services.insert(
                report.service_id.clone(),
                ServiceRegistration {
                    service_id: report.service_id.clone(),
                    vendor_id: vendor_id.to_string(),
                    display_name: report.service_id.clone(),
                    audit_frequency_seconds: default_frequency,
                    created_at: now,
                },
            );
        }

        // Blob first: an orphaned blob is harmless, a ledger entry without
        // its document is not.
        let path = self.report_path(&digest);
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, &bytes).map_err(|e| io_error("writing", &tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| io_error("renaming", &tmp, e))?;
        let entry = self.ledger.append(digest, now).map_err(|e| RegistryError::Internal(e.to_string()))?;
        self.index.reports.insert(
            digest.to_hex(),
            ReportRecord {
                digest,
                service_id: report.service_id.clone(),
                vendor_id: vendor_id.to_string(),
                report_version: report.report_version,
                timestamp: report.timestamp,
                ledger_index: entry.index,
                submitted_at: now,
            },
        );
        self.persist_index()?;
        Ok(Submitted {
            digest,
            ledger_index: entry.index,
            created: true,
        })
    }

    pub fn record(&self, digest: &Digest32) -> Option<&ReportRecord> {
        self.index.reports.get(&digest.to_hex())
    }

    pub fn audits_of(&self, digest: &Digest32) -> impl Iterator<Item = &AuditRecord> {
        let digest = *digest;
        self.index.audits.iter().filter(move |a| a.event.probed_report_digest == digest)
    }

    /// The stored report with its audit history attached.
    pub fn load_report(&self, digest: &Digest32) -> Result<AuditReport, RegistryError> {
        if self.record(digest).is_none() {
            return Err(RegistryError::NotFound(format!("report {digest}")));
        }
        let path = self.report_path(digest);
        let bytes = std::fs::read(&path).map_err(|e| io_error("reading", &path, e))?;
        let mut report = AuditReport::from_json(&bytes)
            .map_err(|e| RegistryError::Internal(format!("stored report {digest} is unreadable: {e}")))?;
        report.audit_history = self.audits_of(digest).map(|a| a.event.clone()).collect();
        report.audit_flag = !report.audit_history.is_empty();
        Ok(report)
    }

    pub fn report_bytes(&self, digest: &Digest32) -> Result<Vec<u8>, RegistryError> {
        self.load_report(digest)?
            .to_canonical_bytes()
            .map_err(|e| RegistryError::Internal(e.to_string()))
    }

    /// Reports of a service, newest first (ties broken by digest).
    pub fn reports_of(&self, service_id: &str) -> Vec<&ReportRecord> {
        let mut records: Vec<&ReportRecord> =
            self.index.reports.values().filter(|r| r.service_id == service_id).collect();
        records.sort_by_key(|r| std::cmp::Reverse((r.timestamp, r.digest.to_hex())));
        records
    }

    pub fn latest_report(&self, service_id: &str) -> Option<&ReportRecord> {
        self.reports_of(service_id).into_iter().next()
    }

    pub fn list_reports(&self, service_id: &str, cursor: Option<&str>, limit: usize) -> Result<ReportPage, RegistryError> {
        if self.service(service_id).is_none() {
            return Err(RegistryError::NotFound(format!("service {service_id:?}")));
        }
        let after = cursor.map(parse_cursor).transpose()?;
        let remaining: Vec<&ReportRecord> = self
            .reports_of(service_id)
            .into_iter()
            .filter(|r| after.as_ref().is_none_or(|(ts, d)| (r.timestamp, r.digest.to_hex()) < (*ts, d.clone())))
            .collect();
        let items: Vec<ReportSummary> = remaining
            .iter()
            .take(limit)
            .map(|r| ReportSummary {
                digest: r.digest,
                report_version: r.report_version,
                timestamp: r.timestamp,
                ledger_index: r.ledger_index,
                audit_flag: self.audits_of(&r.digest).next().is_some(),
            })
            .collect();
        let next_cursor = (remaining.len() > limit)
            .then(|| items.last().map(|r| format!("{}_{}", r.timestamp, r.digest)))
            .flatten();
        Ok(ReportPage {
            service_id: service_id.to_string(),
            items,
            next_cursor,
        })
    }

    pub fn record_audit(
        &mut self,
        digest: &Digest32,
        auditor_id: &str,
        finding: Finding,
        note: String,
        now: Timestamp,
    ) -> Result<(AuditEvent, LedgerEntry), RegistryError> {
        let mut report = self.load_report(digest)?;
        let event = AuditEvent {
            auditor_id: auditor_id.to_string(),
            at: now,
            finding,
            note,
            probed_report_digest: *digest,
        };
        let entry = record_audit(&mut report, event.clone(), &mut self.ledger).map_err(|e| match e {
            fairlens_core::audit::AuditError::OutOfOrder { .. } => RegistryError::Conflict(e.to_string()),
            other => RegistryError::Internal(other.to_string()),
        })?;
        self.index.audits.push(AuditRecord {
            event_digest: entry.payload_digest,
            event: event.clone(),
            ledger_index: entry.index,
        });
        self.persist_index()?;
        Ok((event, entry))
    }

    /// Audit events on any report of the service, in recording order.
    pub fn service_audits(&self, service_id: &str) -> Vec<(&AuditRecord, &ReportRecord)> {
        self.index
            .audits
            .iter()
            .filter_map(|a| {
                let record = self.index.reports.get(&a.event.probed_report_digest.to_hex())?;
                (record.service_id == service_id).then_some((a, record))
            })
            .collect()
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    /// Verifies the ledger as it is on disk, so edits made behind the
    /// registry's back are caught.
    pub fn verify_ledger_file(&self) -> ChainVerification {
        match std::fs::read(self.ledger_path()) {
            Ok(bytes) => verify_ledger_bytes(&bytes),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound && self.ledger.is_empty() => {
                verify_ledger_bytes(b"")
            }
            Err(e) => ChainVerification::Broken {
                first_bad_index: 0,
                reason: format!("ledger unreadable: {e}"),
            },
        }
    }
}

fn field(name: &str, reason: &str) -> FieldError {
    FieldError {
        field: name.to_string(),
        reason: reason.to_string(),
    }
}

fn parse_cursor(cursor: &str) -> Result<(Timestamp, String), RegistryError> {
    let bad = || RegistryError::Unprocessable(format!("malformed cursor {cursor:?}"));
    let (ts, digest) = cursor.rsplit_once('_').ok_or_else(bad)?;
    let ts = Timestamp::parse(ts).map_err(|_| bad())?;
    let digest = Digest32::from_hex(digest).map_err(|_| bad())?;
    Ok((ts, digest.to_hex()))
}

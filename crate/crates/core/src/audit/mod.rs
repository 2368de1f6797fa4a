//! Self-audit records: canonical reports, encrypted snapshots, signed
//! certificates and the hash-chained ledger that publishes them.

mod boc;
mod ledger;
mod report;
mod snapshot;

pub use boc::{boc_signing_bytes, issue_boc, verify_boc, Boc, BocPublicKey, BocSigningKey, SIGNATURE_ALGORITHM};
pub use ledger::{entry_hash, verify_chain, verify_ledger_bytes, ChainVerification, Ledger, LedgerEntry};
pub use report::{record_audit, AuditEvent, AuditReport, FieldError, Finding, CANONICAL_DISCLAIMER};
pub use snapshot::{
    decrypt_snapshot, encrypt_snapshot, read_blob, write_blob, EncryptedSnapshotInfo, NonceSource, SnapshotKey,
    AEAD_ALGORITHM,
};

use thiserror::Error;

use crate::canonical::CanonicalError;
use crate::Digest32;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("event probes report {actual} but the report digest is {expected}")]
    Binding { expected: Digest32, actual: Digest32 },
    #[error("audit event at {at} precedes the latest recorded event at {latest}")]
    OutOfOrder { at: String, latest: String },
    #[error("key error: {0}")]
    Key(String),
    #[error("authentication failed: {0}")]
    Authentication(&'static str),
    #[error("invalid report: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<FieldError>),
    #[error("ledger line {line}: {reason}")]
    LedgerFormat { line: usize, reason: String },
}

impl AuditError {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Self::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T, E = AuditError> = std::result::Result<T, E>;

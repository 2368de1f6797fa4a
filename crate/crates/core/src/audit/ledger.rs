//! Append-only hash chain persisted as newline-delimited canonical JSON.
//!
//! `entry_hash = SHA-256(index as u64 big-endian ‖ prev_hash ‖ payload_digest ‖ timestamp)`
//! where the timestamp is its `YYYY-MM-DDTHH:MM:SSZ` ASCII form and the
//! genesis `prev_hash` is 32 zero bytes.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use super::{AuditError, Result};
use crate::canonical::to_canonical_bytes;
use crate::{Digest32, Timestamp};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedgerEntry {
    pub index: u64,
    pub prev_hash: Digest32,
    pub payload_digest: Digest32,
    pub entry_hash: Digest32,
    pub timestamp: Timestamp,
}

pub fn entry_hash(index: u64, prev_hash: &Digest32, payload_digest: &Digest32, timestamp: Timestamp) -> Digest32 {
    let hash = Sha256::new()
        .chain_update(index.to_be_bytes())
        .chain_update(prev_hash.as_bytes())
        .chain_update(payload_digest.as_bytes())
        .chain_update(timestamp.to_string().as_bytes())
        .finalize();
    Digest32(hash.into())
}

impl LedgerEntry {
    fn canonical_line(&self) -> Vec<u8> {
        let mut line = to_canonical_bytes(self).expect("ledger entries hold no floats");
        line.push(b'\n');
        line
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ChainVerification {
    Ok { length: u64, head: Option<Digest32> },
    Broken { first_bad_index: u64, reason: String },
}

impl ChainVerification {
    pub fn is_ok(&self) -> bool {
        matches!(self, Self::Ok { .. })
    }
}

pub fn verify_chain(entries: &[LedgerEntry]) -> ChainVerification {
    let mut prev = Digest32::ZERO;
    for (position, entry) in entries.iter().enumerate() {
        if let Some(reason) = check_entry(position as u64, &prev, entry) {
            return ChainVerification::Broken {
                first_bad_index: position as u64,
                reason,
            };
        }
        prev = entry.entry_hash;
    }
    ChainVerification::Ok {
        length: entries.len() as u64,
        head: entries.last().map(|e| e.entry_hash),
    }
}

fn check_entry(position: u64, prev: &Digest32, entry: &LedgerEntry) -> Option<String> {
    if entry.index != position {
        return Some(format!("index {} at position {position}", entry.index));
    }
    if entry.prev_hash != *prev {
        return Some("prev_hash does not match the preceding entry_hash".into());
    }
    if entry.entry_hash != entry_hash(entry.index, &entry.prev_hash, &entry.payload_digest, entry.timestamp) {
        return Some("entry_hash does not match its fields".into());
    }
    None
}

/// Verifies a serialized ledger byte-for-byte: every line must parse and be
/// exactly its canonical form, so any edit to the file is caught at the
/// line it touches.
pub fn verify_ledger_bytes(bytes: &[u8]) -> ChainVerification {
    let mut entries = Vec::new();
    for (position, line) in lines(bytes).enumerate() {
        match parse_line(line) {
            Ok(entry) => entries.push(entry),
            Err(reason) => {
                // An earlier entry may already be inconsistent.
                return match verify_chain(&entries) {
                    broken @ ChainVerification::Broken { .. } => broken,
                    ChainVerification::Ok { .. } => ChainVerification::Broken {
                        first_bad_index: position as u64,
                        reason,
                    },
                };
            }
        }
    }
    verify_chain(&entries)
}

/// Lines including their terminator; a final unterminated fragment is
/// yielded as-is so it fails the canonical check.
fn lines(bytes: &[u8]) -> impl Iterator<Item = &[u8]> {
    bytes.split_inclusive(|b| *b == b'\n')
}

fn parse_line(line: &[u8]) -> Result<LedgerEntry, String> {
    let body = line.strip_suffix(b"\n").ok_or("missing line terminator")?;
    let entry: LedgerEntry = serde_json::from_slice(body).map_err(|e| format!("unparseable entry: {e}"))?;
    if entry.canonical_line() != line {
        return Err("entry is not in canonical form".into());
    }
    Ok(entry)
}

/// A single-writer ledger, optionally backed by a file.
#[derive(Debug)]
pub struct Ledger {
    path: Option<PathBuf>,
    entries: Vec<LedgerEntry>,
}

impl Ledger {
    pub fn in_memory() -> Self {
        Self {
            path: None,
            entries: Vec::new(),
        }
    }

    /// Opens (or creates) a ledger file. Lines that do not parse are an
    /// error; chain consistency is left to [`Ledger::verify`].
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(AuditError::io(format!("reading {}", path.display()), e)),
        };
        let entries = lines(&bytes)
            .enumerate()
            .map(|(i, line)| parse_line(line).map_err(|reason| AuditError::LedgerFormat { line: i, reason }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            path: Some(path),
            entries,
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn head(&self) -> Option<&LedgerEntry> {
        self.entries.last()
    }

    pub fn verify(&self) -> ChainVerification {
        verify_chain(&self.entries)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.entries.iter().flat_map(LedgerEntry::canonical_line).collect()
    }

    /// Appends an entry committing to `payload_digest`. On a storage
    /// failure the file is truncated back and the ledger is unchanged.
    pub fn append(&mut self, payload_digest: Digest32, timestamp: Timestamp) -> Result<LedgerEntry> {
        let index = self.entries.len() as u64;
        let prev_hash = self.head().map_or(Digest32::ZERO, |e| e.entry_hash);
        let entry = LedgerEntry {
            index,
            prev_hash,
            payload_digest,
            entry_hash: entry_hash(index, &prev_hash, &payload_digest, timestamp),
            timestamp,
        };
        if let Some(path) = &self.path {
            append_line(path, &entry.canonical_line())?;
        }
        self.entries.push(entry.clone());
        Ok(entry)
    }
}

fn append_line(path: &Path, line: &[u8]) -> Result<()> {
    let context = || format!("appending to {}", path.display());
    let mut file: File = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| AuditError::io(context(), e))?;
    let before = file.metadata().map_err(|e| AuditError::io(context(), e))?.len();
    let written = file.write_all(line).and_then(|_| file.sync_data());
    if let Err(e) = written {
        // Best effort: drop any partial line before reporting.
        let _ = file.set_len(before);
        return Err(AuditError::io(context(), e));
    }
    Ok(())
}

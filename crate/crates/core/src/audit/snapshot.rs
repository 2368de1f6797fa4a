//! AES-256-GCM encryption of data snapshots escrowed for auditors.
//!
//! The ciphertext lives in a content-addressed blob (file name = hex digest
//! of the ciphertext); reports carry only [`EncryptedSnapshotInfo`].

use std::path::{Path, PathBuf};

use aes_gcm::aead::{Aead, AeadCore, KeyInit, OsRng};
use aes_gcm::{Aes256Gcm, Nonce};
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use super::{AuditError, Result};
use crate::Digest32;

pub const AEAD_ALGORITHM: &str = "AES-256-GCM";
const NONCE_LEN: usize = 12;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncryptedSnapshotInfo {
    pub ciphertext_digest: Digest32,
    pub aead_algorithm: String,
    /// 12 bytes, lowercase hex.
    pub nonce: String,
    pub key_fingerprint: Digest32,
    pub plaintext_length: u64,
}

#[derive(Clone, PartialEq, Eq)]
pub struct SnapshotKey([u8; 32]);

impl SnapshotKey {
    pub fn from_bytes(bytes: [u8; 32]) -> Self {
        Self(bytes)
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self> {
        <[u8; 32]>::try_from(bytes)
            .map(Self)
            .map_err(|_| AuditError::Key(format!("snapshot key must be 32 bytes, got {}", bytes.len())))
    }

    pub fn from_hex(text: &str) -> Result<Self> {
        let bytes = hex::decode(text.trim()).map_err(|e| AuditError::Key(format!("snapshot key: {e}")))?;
        Self::from_slice(&bytes)
    }

    pub fn generate() -> Self {
        Self(Aes256Gcm::generate_key(&mut OsRng).into())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn fingerprint(&self) -> Digest32 {
        Digest32::of(&self.0)
    }
}

impl std::fmt::Debug for SnapshotKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SnapshotKey({})", self.fingerprint())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NonceSource {
    /// Fresh random nonce from the operating system.
    System,
    /// Nonce derived from the seed and the plaintext, for reproducible
    /// artifacts. Distinct plaintexts still get distinct nonces.
    Seeded(u64),
}

fn seeded_nonce(seed: u64, plaintext: &[u8]) -> [u8; NONCE_LEN] {
    let digest = Sha256::new()
        .chain_update(seed.to_be_bytes())
        .chain_update(Sha256::digest(plaintext))
        .finalize();
    let mut nonce = [0u8; NONCE_LEN];
    nonce.copy_from_slice(&digest[..NONCE_LEN]);
    nonce
}

pub fn encrypt_snapshot(
    plaintext: &[u8],
    key: &SnapshotKey,
    nonce_source: NonceSource,
) -> Result<(Vec<u8>, EncryptedSnapshotInfo)> {
    let cipher = Aes256Gcm::new(&key.0.into());
    let nonce: [u8; NONCE_LEN] = match nonce_source {
        NonceSource::System => Aes256Gcm::generate_nonce(&mut OsRng).into(),
        NonceSource::Seeded(seed) => seeded_nonce(seed, plaintext),
    };
    let ciphertext = cipher
        .encrypt(Nonce::from_slice(&nonce), plaintext)
        .map_err(|_| AuditError::Key("encryption failed".into()))?;
    let info = EncryptedSnapshotInfo {
        ciphertext_digest: Digest32::of(&ciphertext),
        aead_algorithm: AEAD_ALGORITHM.to_string(),
        nonce: hex::encode(nonce),
        key_fingerprint: key.fingerprint(),
        plaintext_length: plaintext.len() as u64,
    };
    Ok((ciphertext, info))
}

pub fn decrypt_snapshot(ciphertext: &[u8], info: &EncryptedSnapshotInfo, key: &SnapshotKey) -> Result<Vec<u8>> {
    if info.aead_algorithm != AEAD_ALGORITHM {
        return Err(AuditError::Key(format!("unsupported AEAD algorithm {:?}", info.aead_algorithm)));
    }
    if key.fingerprint() != info.key_fingerprint {
        return Err(AuditError::Authentication("key does not match the escrowed key fingerprint"));
    }
    let nonce = hex::decode(&info.nonce)
        .ok()
        .filter(|n| n.len() == NONCE_LEN)
        .ok_or(AuditError::Authentication("nonce is not 12 hex-encoded bytes"))?;
    let plaintext = Aes256Gcm::new(&key.0.into())
        .decrypt(Nonce::from_slice(&nonce), ciphertext)
        .map_err(|_| AuditError::Authentication("AEAD tag mismatch"))?;
    if Digest32::of(ciphertext) != info.ciphertext_digest || plaintext.len() as u64 != info.plaintext_length {
        return Err(AuditError::Authentication("ciphertext does not match its recorded digest"));
    }
    Ok(plaintext)
}

/// Stores `ciphertext` under `dir/<digest hex>`; rewriting the same blob is a no-op.
pub fn write_blob(dir: &Path, ciphertext: &[u8]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| AuditError::io(format!("creating {}", dir.display()), e))?;
    let path = dir.join(Digest32::of(ciphertext).to_hex());
    if path.exists() {
        return Ok(path);
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, ciphertext).map_err(|e| AuditError::io(format!("writing {}", tmp.display()), e))?;
    std::fs::rename(&tmp, &path).map_err(|e| AuditError::io(format!("renaming {}", tmp.display()), e))?;
    Ok(path)
}

pub fn read_blob(dir: &Path, digest: &Digest32) -> Result<Vec<u8>> {
    let path = dir.join(digest.to_hex());
    let bytes = std::fs::read(&path).map_err(|e| AuditError::io(format!("reading {}", path.display()), e))?;
    if Digest32::of(&bytes) != *digest {
        return Err(AuditError::Authentication("blob content does not match its name"));
    }
    Ok(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_tag_length() {
        let key = SnapshotKey::from_bytes([7; 32]);
        let (ct, info) = encrypt_snapshot(b"hello", &key, NonceSource::System).unwrap();
        assert_eq!(ct.len(), 5 + 16);
        assert_eq!(decrypt_snapshot(&ct, &info, &key).unwrap(), b"hello");

        let (empty, info) = encrypt_snapshot(b"", &key, NonceSource::System).unwrap();
        assert_eq!(empty.len(), 16);
        assert!(decrypt_snapshot(&empty, &info, &key).unwrap().is_empty());
    }

    #[test]
    fn system_nonces_differ_and_seeded_nonces_repeat() {
        let key = SnapshotKey::from_bytes([1; 32]);
        let (_, a) = encrypt_snapshot(b"x", &key, NonceSource::System).unwrap();
        let (_, b) = encrypt_snapshot(b"x", &key, NonceSource::System).unwrap();
        assert_ne!(a.nonce, b.nonce);
        let (ca, a) = encrypt_snapshot(b"x", &key, NonceSource::Seeded(3)).unwrap();
        let (cb, b) = encrypt_snapshot(b"x", &key, NonceSource::Seeded(3)).unwrap();
        assert_eq!((ca, a.nonce), (cb, b.nonce.clone()));
        let (_, c) = encrypt_snapshot(b"y", &key, NonceSource::Seeded(3)).unwrap();
        assert_ne!(b.nonce, c.nonce);
    }

    #[test]
    fn wrong_key_and_tamper_are_authentication_failures() {
        let key = SnapshotKey::from_bytes([7; 32]);
        let (mut ct, info) = encrypt_snapshot(b"payload", &key, NonceSource::Seeded(0)).unwrap();
        let other = SnapshotKey::from_bytes([8; 32]);
        assert!(matches!(decrypt_snapshot(&ct, &info, &other), Err(AuditError::Authentication(_))));
        ct[0] ^= 1;
        assert!(matches!(
            decrypt_snapshot(&ct, &info, &key),
            Err(AuditError::Authentication("AEAD tag mismatch"))
        ));
    }

    #[test]
    fn blobs_are_content_addressed() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_blob(dir.path(), b"cipher").unwrap();
        let digest = Digest32::of(b"cipher");
        assert_eq!(path.file_name().unwrap().to_str().unwrap(), digest.to_hex());
        assert_eq!(read_blob(dir.path(), &digest).unwrap(), b"cipher");
        std::fs::write(&path, b"cipheR").unwrap();
        assert!(read_blob(dir.path(), &digest).is_err());
    }

    #[test]
    fn key_parsing() {
        assert!(SnapshotKey::from_hex(&"ab".repeat(32)).is_ok());
        assert!(matches!(SnapshotKey::from_hex("abcd"), Err(AuditError::Key(_))));
    }
}

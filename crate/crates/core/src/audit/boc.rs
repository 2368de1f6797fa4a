//! Bias Optimization Certificates: Ed25519 attestations that bind an issuer
//! to a report digest at a point in time.

use ed25519_dalek::{Signature, Signer, SigningKey, VerifyingKey};
use serde::{Deserialize, Serialize};

use super::{AuditError, Result};
use crate::{Digest32, Timestamp};

pub const SIGNATURE_ALGORITHM: &str = "Ed25519";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Boc {
    pub issuer_id: String,
    pub issued_at: Timestamp,
    pub report_digest: Digest32,
    /// Hex-encoded detached signature over [`boc_signing_bytes`].
    pub signature: String,
    pub signature_algorithm: String,
    pub signer_public_key_id: String,
}

/// Issuer signing key; the hex form is the 32-byte secret seed.
#[derive(Clone)]
pub struct BocSigningKey(SigningKey);

impl BocSigningKey {
    pub fn from_bytes(seed: [u8; 32]) -> Self {
        Self(SigningKey::from_bytes(&seed))
    }

    pub fn from_hex(text: &str) -> Result<Self> {
        Ok(Self::from_bytes(decode_32(text.trim(), "signing key")?))
    }

    pub fn generate() -> Self {
        use aes_gcm::aead::rand_core::RngCore;
        let mut seed = [0u8; 32];
        aes_gcm::aead::OsRng.fill_bytes(&mut seed);
        Self::from_bytes(seed)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0.to_bytes())
    }

    pub fn public_key(&self) -> BocPublicKey {
        BocPublicKey(self.0.verifying_key())
    }
}

impl std::fmt::Debug for BocSigningKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BocSigningKey({})", self.public_key().key_id())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BocPublicKey(VerifyingKey);

impl BocPublicKey {
    pub fn from_hex(text: &str) -> Result<Self> {
        let bytes = decode_32(text.trim(), "public key")?;
        VerifyingKey::from_bytes(&bytes)
            .map(Self)
            .map_err(|e| AuditError::Key(format!("public key: {e}")))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0.as_bytes())
    }

    /// Short identifier: the first 16 hex digits of SHA-256 of the key.
    pub fn key_id(&self) -> String {
        Digest32::of(self.0.as_bytes()).to_hex()[..16].to_string()
    }
}

fn decode_32(text: &str, what: &str) -> Result<[u8; 32]> {
    let bytes = hex::decode(text).map_err(|e| AuditError::Key(format!("{what}: {e}")))?;
    bytes
        .try_into()
        .map_err(|b: Vec<u8>| AuditError::Key(format!("{what}: expected 32 bytes, got {}", b.len())))
}

/// Each field is prefixed with its length as a big-endian u32 so that
/// no two field tuples share an encoding.
pub fn boc_signing_bytes(issuer_id: &str, issued_at: Timestamp, report_digest: &Digest32) -> Vec<u8> {
    let issued = issued_at.to_string();
    let mut out = Vec::with_capacity(12 + issuer_id.len() + issued.len() + 32);
    for field in [issuer_id.as_bytes(), issued.as_bytes(), report_digest.as_bytes()] {
        out.extend_from_slice(&(field.len() as u32).to_be_bytes());
        out.extend_from_slice(field);
    }
    out
}

pub fn issue_boc(report_digest: Digest32, issuer_id: &str, issued_at: Timestamp, key: &BocSigningKey) -> Boc {
    let signature = key.0.sign(&boc_signing_bytes(issuer_id, issued_at, &report_digest));
    Boc {
        issuer_id: issuer_id.to_string(),
        issued_at,
        report_digest,
        signature: hex::encode(signature.to_bytes()),
        signature_algorithm: SIGNATURE_ALGORITHM.to_string(),
        signer_public_key_id: key.public_key().key_id(),
    }
}

/// True only if the certificate names `expected_digest` and its signature
/// verifies under `key`. Never errors.
pub fn verify_boc(boc: &Boc, expected_digest: &Digest32, key: &BocPublicKey) -> bool {
    if boc.report_digest != *expected_digest || boc.signature_algorithm != SIGNATURE_ALGORITHM {
        return false;
    }
    let Ok(raw) = hex::decode(&boc.signature) else {
        return false;
    };
    let Ok(raw) = <[u8; 64]>::try_from(raw.as_slice()) else {
        return false;
    };
    let message = boc_signing_bytes(&boc.issuer_id, boc.issued_at, &boc.report_digest);
    key.0.verify_strict(&message, &Signature::from_bytes(&raw)).is_ok()
}

use fairlens_core::audit::{
    decrypt_snapshot, encrypt_snapshot, issue_boc, verify_boc, AuditError, BocSigningKey, NonceSource, SnapshotKey,
};
use fairlens_core::{Digest32, Timestamp};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn aead_round_trip(payload in prop::collection::vec(any::<u8>(), 0..4096), key in any::<[u8; 32]>()) {
        let key = SnapshotKey::from_bytes(key);
        let (ct, info) = encrypt_snapshot(&payload, &key, NonceSource::System).unwrap();
        prop_assert_eq!(ct.len(), payload.len() + 16);
        prop_assert_eq!(info.plaintext_length, payload.len() as u64);
        prop_assert_eq!(decrypt_snapshot(&ct, &info, &key).unwrap(), payload);
    }

    #[test]
    fn boc_rejects_mutations(seed in any::<[u8; 32]>(), other in any::<[u8; 32]>(), byte in 0usize..64, bit in 0u8..8) {
        prop_assume!(seed != other);
        let key = BocSigningKey::from_bytes(seed);
        let digest = Digest32::of(&seed);
        let boc = issue_boc(digest, "standards-board", Timestamp::from_unix(1_750_000_000).unwrap(), &key);
        prop_assert!(verify_boc(&boc, &digest, &key.public_key()));
        prop_assert!(!verify_boc(&boc, &digest, &BocSigningKey::from_bytes(other).public_key()));
        prop_assert!(!verify_boc(&boc, &Digest32::of(&other), &key.public_key()));
        let mut sig = hex::decode(&boc.signature).unwrap();
        sig[byte] ^= 1 << bit;
        let mut mutated = boc.clone();
        mutated.signature = hex::encode(sig);
        prop_assert!(!verify_boc(&mutated, &digest, &key.public_key()));
    }
}

#[test]
fn every_ciphertext_bit_flip_fails_authentication() {
    let key = SnapshotKey::from_bytes([42; 32]);
    let (ct, info) = encrypt_snapshot(b"escrowed evaluation rows", &key, NonceSource::Seeded(9)).unwrap();
    for pos in 0..ct.len() {
        for bit in 0..8 {
            let mut tampered = ct.clone();
            tampered[pos] ^= 1 << bit;
            assert!(matches!(decrypt_snapshot(&tampered, &info, &key), Err(AuditError::Authentication(_))));
        }
    }
}

#[test]
fn one_mebibyte_payload_round_trips() {
    let payload: Vec<u8> = (0..1 << 20).map(|i: u32| (i.wrapping_mul(2_654_435_761) >> 24) as u8).collect();
    let key = SnapshotKey::generate();
    let (mut ct, info) = encrypt_snapshot(&payload, &key, NonceSource::System).unwrap();
    assert_eq!(decrypt_snapshot(&ct, &info, &key).unwrap(), payload);
    ct[1 << 19] ^= 0x04;
    assert!(decrypt_snapshot(&ct, &info, &key).is_err());
}

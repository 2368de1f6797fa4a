use fairlens_core::audit::{verify_chain, verify_ledger_bytes, ChainVerification, Ledger};
use fairlens_core::{Digest32, Timestamp};
use proptest::prelude::*;

fn build(n: usize) -> Ledger {
    let mut ledger = Ledger::in_memory();
    for i in 0..n {
        let at = Timestamp::from_unix(1_720_000_000 + 3600 * i as i64).unwrap();
        ledger.append(Digest32::of(format!("payload {i}").as_bytes()), at).unwrap();
    }
    ledger
}

/// Index of the line holding byte `pos`.
fn line_of(bytes: &[u8], pos: usize) -> u64 {
    bytes[..pos].iter().filter(|b| **b == b'\n').count() as u64
}

#[test]
fn every_single_bit_flip_is_caught_at_its_line() {
    let ledger = build(10);
    let bytes = ledger.to_bytes();
    assert!(verify_ledger_bytes(&bytes).is_ok());
    for pos in 0..bytes.len() {
        for bit in 0..8 {
            let mut tampered = bytes.clone();
            tampered[pos] ^= 1 << bit;
            match verify_ledger_bytes(&tampered) {
                ChainVerification::Broken { first_bad_index, .. } => {
                    assert_eq!(first_bad_index, line_of(&bytes, pos), "byte {pos} bit {bit}")
                }
                ok => panic!("flip at byte {pos} bit {bit} went undetected: {ok:?}"),
            }
        }
    }
}

#[test]
fn hundred_appends_verify() {
    let ledger = build(100);
    let indices: Vec<u64> = ledger.entries().iter().map(|e| e.index).collect();
    assert_eq!(indices, (0..100).collect::<Vec<_>>());
    assert_eq!(
        verify_chain(ledger.entries()),
        ChainVerification::Ok { length: 100, head: Some(ledger.head().unwrap().entry_hash) }
    );
}

#[test]
fn file_flip_in_entry_four_payload_reports_four() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ledger.jsonl");
    let mut ledger = Ledger::open(&path).unwrap();
    for e in build(10).entries() {
        ledger.append(e.payload_digest, e.timestamp).unwrap();
    }
    let mut bytes = std::fs::read(&path).unwrap();
    let line_start = bytes.split_inclusive(|b| *b == b'\n').take(4).map(<[u8]>::len).sum::<usize>();
    let field = b"\"payload_digest\":\"";
    let offset = bytes[line_start..].windows(field.len()).position(|w| w == field).unwrap() + line_start + field.len();
    bytes[offset] ^= 0x01;
    std::fs::write(&path, &bytes).unwrap();
    assert!(matches!(verify_ledger_bytes(&bytes), ChainVerification::Broken { first_bad_index: 4, .. }));
}

#[derive(Debug, Clone, Copy)]
enum Field {
    Index,
    Prev,
    Payload,
    Hash,
    Time,
}

proptest! {
    #[test]
    fn any_field_tamper_reports_earliest_index(
        n in 1usize..25,
        picks in prop::collection::vec((any::<prop::sample::Index>(), 0usize..5, any::<u8>()), 1..4),
    ) {
        let ledger = build(n);
        let mut entries = ledger.entries().to_vec();
        let mut earliest = u64::MAX;
        for (which, field, noise) in picks {
            let i = which.index(n);
            let e = &mut entries[i];
            let field = [Field::Index, Field::Prev, Field::Payload, Field::Hash, Field::Time][field];
            let bump = noise as i64 + 1;
            match field {
                Field::Index => e.index += bump as u64,
                Field::Prev => e.prev_hash.0[noise as usize % 32] ^= 0x80,
                Field::Payload => e.payload_digest.0[noise as usize % 32] ^= 0x01,
                Field::Hash => e.entry_hash.0[noise as usize % 32] ^= 0x10,
                Field::Time => e.timestamp = e.timestamp.plus_seconds(bump),
            }
            earliest = earliest.min(i as u64);
        }
        match verify_chain(&entries) {
            ChainVerification::Broken { first_bad_index, .. } => prop_assert_eq!(first_bad_index, earliest),
            ok => prop_assert!(false, "undetected: {:?}", ok),
        }
    }
}

//! Committed fixture documents must re-digest to frozen values.
//!
//! The frozen digests were cross-checked with an independent canonicalizer
//! (sorted keys, compact separators, shortest float repr, SHA-256).
//! Set `FAIRLENS_BLESS=1` to rewrite the fixture documents after an
//! intentional format change, then update the constants.

use std::path::PathBuf;

use fairlens_core::audit::{encrypt_snapshot, AuditReport, NonceSource, SnapshotKey};
use fairlens_core::canonical::{to_canonical_bytes, value_to_canonical_bytes};
use fairlens_core::engine::io::{load_csv_file, DatasetConfig};
use fairlens_core::engine::{compute_report, FairnessReport, ItemOutcome};
use fairlens_core::{Digest32, Timestamp};
use serde_json::Value;

const FAIRNESS_REPORT_DIGEST: &str = "2b06058bf6285e5a52976e71b41089b060e7c933601eae817e333a2f69f75202";
const AUDIT_REPORT_DIGEST: &str = "66ff4b6fca5f8c8f044ebf7feb9d37872b58865bd37076417229a90352c60f2b";

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn at() -> Timestamp {
    Timestamp::parse("2024-01-01T00:00:00Z").unwrap()
}

fn build_fairness_report() -> FairnessReport {
    let config = DatasetConfig::from_path(&fixture("six_records.toml")).unwrap();
    let loaded = load_csv_file(&fixture("six_records.csv"), &config, at()).unwrap();
    let mut report = compute_report(&loaded.dataset, &config.report_config(&[]), at()).unwrap();
    report.dataset_digest = Some(loaded.digest);
    report
}

fn build_audit_report() -> AuditReport {
    let fairness = build_fairness_report();
    let csv = std::fs::read(fixture("six_records.csv")).unwrap();
    let (_, snapshot) = encrypt_snapshot(&csv, &SnapshotKey::from_bytes([0x11; 32]), NonceSource::Seeded(7)).unwrap();
    AuditReport::new("six-records-demo", "acme", 1, at(), Digest32::of(&csv), snapshot, fairness)
}

fn check_or_bless(name: &str, bytes: &[u8]) {
    let path = fixture(name);
    if std::env::var_os("FAIRLENS_BLESS").is_some() {
        std::fs::write(&path, bytes).unwrap();
    }
    let committed = std::fs::read(&path).unwrap();
    assert_eq!(committed, bytes, "{name} no longer matches the recomputed document");
}

#[test]
fn fairness_report_fixture_is_stable() {
    let bytes = to_canonical_bytes(&build_fairness_report()).unwrap();
    check_or_bless("six_records.report.json", &bytes);
    assert_eq!(Digest32::of(&bytes).to_hex(), FAIRNESS_REPORT_DIGEST);
}

#[test]
fn audit_report_fixture_is_stable() {
    let report = build_audit_report();
    check_or_bless("six_records.audit.json", &report.to_canonical_bytes().unwrap());
    let committed = AuditReport::from_json(&std::fs::read(fixture("six_records.audit.json")).unwrap()).unwrap();
    assert!(committed.validate().is_empty());
    assert_eq!(committed.canonical_digest().unwrap().to_hex(), AUDIT_REPORT_DIGEST);
}

#[test]
fn metric_nudge_changes_the_digest() {
    let base = build_audit_report();
    let mut nudged = base.clone();
    if let ItemOutcome::Metric(m) = &mut nudged.fairness_report.items[0].outcome {
        m.gap = m.gap.map(|g| g + 1e-9);
    }
    assert_ne!(base.canonical_digest().unwrap(), nudged.canonical_digest().unwrap());
}

/// Every leaf of the committed document, changed in isolation, changes the
/// canonical bytes and therefore the digest.
#[test]
fn every_single_field_perturbation_changes_the_digest() {
    let bytes = std::fs::read(fixture("six_records.audit.json")).unwrap();
    let original: Value = serde_json::from_slice(&bytes).unwrap();
    let base_digest = Digest32::of(&value_to_canonical_bytes(&original));
    let mut paths = Vec::new();
    collect_leaves(&original, &mut Vec::new(), &mut paths);
    assert!(paths.len() > 50);
    for path in paths {
        let mut v = original.clone();
        perturb(leaf_mut(&mut v, &path));
        assert_ne!(Digest32::of(&value_to_canonical_bytes(&v)), base_digest, "{path:?}");
    }
}

#[derive(Debug, Clone)]
enum Step {
    Key(String),
    Pos(usize),
}

fn collect_leaves(v: &Value, prefix: &mut Vec<Step>, out: &mut Vec<Vec<Step>>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                prefix.push(Step::Key(k.clone()));
                collect_leaves(child, prefix, out);
                prefix.pop();
            }
        }
        Value::Array(items) if !items.is_empty() => {
            for (i, child) in items.iter().enumerate() {
                prefix.push(Step::Pos(i));
                collect_leaves(child, prefix, out);
                prefix.pop();
            }
        }
        _ => out.push(prefix.clone()),
    }
}

fn leaf_mut<'a>(v: &'a mut Value, path: &[Step]) -> &'a mut Value {
    path.iter().fold(v, |node, step| match step {
        Step::Key(k) => node.get_mut(k.as_str()).unwrap(),
        Step::Pos(i) => node.get_mut(*i).unwrap(),
    })
}

fn perturb(leaf: &mut Value) {
    *leaf = match leaf.take() {
        Value::Null => Value::Bool(false),
        Value::Bool(b) => Value::Bool(!b),
        Value::Number(n) if n.is_f64() => serde_json::json!(n.as_f64().unwrap() + 1e-9),
        Value::Number(n) => serde_json::json!(n.as_i64().unwrap() + 1),
        Value::String(s) => Value::String(format!("{s}x")),
        Value::Array(_) => Value::Array(vec![Value::Null]),
        Value::Object(_) => unreachable!(),
    };
}

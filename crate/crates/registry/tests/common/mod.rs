#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use fairlens_core::audit::{
    encrypt_snapshot, issue_boc, AuditReport, BocSigningKey, NonceSource, SnapshotKey,
};
use fairlens_core::engine::{compute_report, Criterion, LabeledDataset, LabeledRecord, ReportConfig};
use fairlens_core::{Digest32, Timestamp};
use fairlens_registry::{ManualClock, Registry, RegistryConfig, Role};
use http_body_util::BodyExt;
use tower::ServiceExt;

pub const VENDOR: &str = "vendor-token";
pub const OTHER_VENDOR: &str = "other-vendor-token";
pub const AUDITOR: &str = "auditor-token";
pub const YEAR: i64 = 365 * 24 * 3600;

pub fn board_key() -> BocSigningKey {
    BocSigningKey::from_bytes([0xB0; 32])
}

pub fn start() -> Timestamp {
    Timestamp::parse("2025-01-01T00:00:00Z").unwrap()
}

pub struct Harness {
    pub dir: tempfile::TempDir,
    pub clock: ManualClock,
    pub registry: Registry,
}

impl Harness {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let clock = ManualClock::new(start());
        let registry = open(dir.path(), &clock);
        Self { dir, clock, registry }
    }

    pub fn router(&self) -> Router {
        self.registry.router()
    }

    pub fn reopen(&mut self) {
        self.registry = open(self.dir.path(), &self.clock);
    }

    pub async fn call(&self, method: Method, uri: &str, token: Option<&str>, body: Option<Vec<u8>>) -> (StatusCode, Vec<u8>) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let req = req
            .header("content-type", "application/json")
            .body(body.map(Body::from).unwrap_or_else(Body::empty))
            .unwrap();
        let resp = self.router().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        (status, bytes)
    }

    pub async fn json(&self, method: Method, uri: &str, token: Option<&str>, body: Option<Vec<u8>>) -> (StatusCode, serde_json::Value) {
        let (status, bytes) = self.call(method, uri, token, body).await;
        let value = if bytes.is_empty() { serde_json::Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
        (status, value)
    }

    pub async fn submit(&self, report: &AuditReport) -> (StatusCode, serde_json::Value) {
        self.json(Method::POST, "/v1/reports", Some(VENDOR), Some(report.to_canonical_bytes().unwrap())).await
    }
}

fn open(dir: &std::path::Path, clock: &ManualClock) -> Registry {
    let config = RegistryConfig::new(dir)
        .with_token(VENDOR, Role::Vendor("acme".into()))
        .with_token(OTHER_VENDOR, Role::Vendor("globex".into()))
        .with_token(AUDITOR, Role::Auditor("board-auditor".into()))
        .with_issuer("board", board_key().public_key());
    Registry::open(config, Arc::new(clock.clone())).unwrap()
}

/// 100 records: 40 with sex=F, 60 with sex=M; race cycles a/b/c.
pub fn hundred_records() -> LabeledDataset {
    let records = (0..100)
        .map(|i| {
            LabeledRecord::new(format!("u{i:03}"), i % 3 != 0)
                .with_pred(i % 4 != 1)
                .with_attr("sex", if i < 40 { "F" } else { "M" })
                .with_attr("race", ["a", "b", "c"][i % 3])
        })
        .collect();
    LabeledDataset::new("hundred", records, vec!["sex".into(), "race".into()], vec![], start()).unwrap()
}

/// A valid, certified report for service `svc`, stamped `at`.
pub fn report(svc: &str, version: u32, at: Timestamp) -> AuditReport {
    let ds = hundred_records();
    let config = ReportConfig::new(
        vec![Criterion::DemographicParity, Criterion::EqualizedOdds],
        vec!["sex".into(), "race".into()],
    );
    let fairness = compute_report(&ds, &config, at).unwrap();
    let (_, snapshot) =
        encrypt_snapshot(b"escrow", &SnapshotKey::from_bytes([5; 32]), NonceSource::Seeded(version as u64)).unwrap();
    let mut r = AuditReport::new(svc, "acme", version, at, Digest32::of(b"hundred.csv"), snapshot, fairness);
    certify(&mut r);
    r
}

pub fn certify(r: &mut AuditReport) {
    let digest = r.canonical_digest().unwrap();
    r.boc = Some(issue_boc(digest, "board", r.timestamp, &board_key()));
}

pub fn flip_ledger_byte(dir: &std::path::Path, at: usize) {
    let path = dir.join("ledger.jsonl");
    let mut bytes = std::fs::read(&path).unwrap();
    bytes[at] ^= 0x01;
    std::fs::write(&path, bytes).unwrap();
}

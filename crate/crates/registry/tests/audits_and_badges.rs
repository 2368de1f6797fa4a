mod common;

use axum::http::{Method, StatusCode};
use common::*;
use serde_json::json;

fn audit_body(finding: &str) -> Option<Vec<u8>> {
    Some(serde_json::to_vec(&json!({"finding": finding, "note": "probe"})).unwrap())
}

async fn badge(h: &Harness, svc: &str) -> serde_json::Value {
    let (status, body) = h.json(Method::GET, &format!("/v1/services/{svc}/badge"), None, None).await;
    assert_eq!(status, StatusCode::OK);
    body
}

#[tokio::test]
async fn confirmed_finding_sets_audit_flag() {
    let h = Harness::new();
    let r = report("loan-scorer", 1, start());
    h.submit(&r).await;
    let digest = r.canonical_digest().unwrap();
    h.clock.advance(60);
    let (status, body) =
        h.json(Method::POST, &format!("/v1/reports/{digest}/audits"), Some(AUDITOR), audit_body("confirmed")).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["ledger_index"], 1);
    assert_eq!(body["event"]["auditor_id"], "board-auditor");
    assert_eq!(body["badge"]["status"], "compliant");

    let (_, bytes) = h.call(Method::GET, &format!("/v1/reports/{digest}"), None, None).await;
    let fetched = fairlens_core::audit::AuditReport::from_json(&bytes).unwrap();
    assert!(fetched.audit_flag);
    assert_eq!(fetched.audit_history.len(), 1);
    assert_eq!(fetched.canonical_digest().unwrap(), digest);
    assert!(fetched.validate().is_empty());
}

#[tokio::test]
async fn audit_history_keeps_recording_order() {
    let h = Harness::new();
    let r = report("loan-scorer", 1, start());
    h.submit(&r).await;
    let digest = r.canonical_digest().unwrap();
    for finding in ["inconclusive", "confirmed"] {
        h.clock.advance(10);
        h.call(Method::POST, &format!("/v1/reports/{digest}/audits"), Some(AUDITOR), audit_body(finding)).await;
    }
    let (_, bytes) = h.call(Method::GET, &format!("/v1/reports/{digest}"), None, None).await;
    let fetched = fairlens_core::audit::AuditReport::from_json(&bytes).unwrap();
    let findings: Vec<_> = fetched.audit_history.iter().map(|e| e.finding).collect();
    use fairlens_core::audit::Finding::*;
    assert_eq!(findings, vec![Inconclusive, Confirmed]);
}

#[tokio::test]
async fn discrepancy_holds_until_confirmed_on_a_newer_report() {
    let h = Harness::new();
    let first = report("loan-scorer", 1, start());
    h.submit(&first).await;
    let d1 = first.canonical_digest().unwrap();
    h.clock.advance(3600);
    let (_, body) =
        h.json(Method::POST, &format!("/v1/reports/{d1}/audits"), Some(AUDITOR), audit_body("discrepancy")).await;
    assert_eq!(body["badge"]["status"], "audit_discrepancy");

    // Confirming the same report again does not clear it.
    h.clock.advance(3600);
    let (_, body) =
        h.json(Method::POST, &format!("/v1/reports/{d1}/audits"), Some(AUDITOR), audit_body("confirmed")).await;
    assert_eq!(body["badge"]["status"], "audit_discrepancy");

    let second = report("loan-scorer", 2, h.clock_now());
    h.submit(&second).await;
    assert_eq!(badge(&h, "loan-scorer").await["status"], "audit_discrepancy");
    h.clock.advance(3600);
    let d2 = second.canonical_digest().unwrap();
    let (_, body) =
        h.json(Method::POST, &format!("/v1/reports/{d2}/audits"), Some(AUDITOR), audit_body("confirmed")).await;
    assert_eq!(body["badge"]["status"], "compliant");
}

trait Now {
    fn clock_now(&self) -> fairlens_core::Timestamp;
}

impl Now for Harness {
    fn clock_now(&self) -> fairlens_core::Timestamp {
        use fairlens_registry::Clock;
        self.clock.now()
    }
}

#[tokio::test]
async fn audit_errors() {
    let h = Harness::new();
    let r = report("loan-scorer", 1, start());
    h.submit(&r).await;
    let digest = r.canonical_digest().unwrap();
    let uri = format!("/v1/reports/{digest}/audits");
    assert_eq!(h.call(Method::POST, &uri, Some(VENDOR), audit_body("confirmed")).await.0, StatusCode::FORBIDDEN);
    assert_eq!(h.call(Method::POST, &uri, None, audit_body("confirmed")).await.0, StatusCode::UNAUTHORIZED);
    let missing = format!("/v1/reports/{}/audits", "cd".repeat(32));
    assert_eq!(h.call(Method::POST, &missing, Some(AUDITOR), audit_body("confirmed")).await.0, StatusCode::NOT_FOUND);
    assert_eq!(h.call(Method::POST, &uri, Some(AUDITOR), audit_body("great")).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn badge_case_split() {
    let h = Harness::new();
    assert_eq!(h.call(Method::GET, "/v1/services/ghost/badge", None, None).await.0, StatusCode::NOT_FOUND);
    let (status, _) = h
        .json(
            Method::POST,
            "/v1/services",
            Some(VENDOR),
            Some(serde_json::to_vec(&json!({"service_id": "quiet", "display_name": "Quiet model"})).unwrap()),
        )
        .await;
    assert_eq!(status, StatusCode::CREATED);
    let b = badge(&h, "quiet").await;
    assert_eq!(b["status"], "never_reported");
    assert!(b["latest_report_digest"].is_null());
}

#[tokio::test]
async fn compliant_turns_stale_and_never_returns() {
    let h = Harness::new();
    h.submit(&report("loan-scorer", 1, start())).await;
    assert_eq!(badge(&h, "loan-scorer").await["status"], "compliant");
    h.clock.advance(YEAR);
    // Exactly the frequency old is still within it.
    assert_eq!(badge(&h, "loan-scorer").await["status"], "compliant");
    let mut seen_stale = false;
    for _ in 0..10 {
        h.clock.advance(YEAR / 5);
        let status = badge(&h, "loan-scorer").await["status"].clone();
        if seen_stale {
            assert_eq!(status, "stale");
        }
        seen_stale |= status == "stale";
    }
    assert!(seen_stale);
    let b = badge(&h, "loan-scorer").await;
    assert!(b["latest_report_age_seconds"].as_i64().unwrap() >= 2 * YEAR);
}

#[tokio::test]
async fn missing_certificate_is_uncertified() {
    let h = Harness::new();
    let mut r = report("loan-scorer", 1, start());
    r.boc = None;
    h.submit(&r).await;
    let b = badge(&h, "loan-scorer").await;
    assert_eq!(b["status"], "uncertified");
    assert_eq!(b["boc_valid"], false);
}

#[tokio::test]
async fn per_service_frequency_applies() {
    let h = Harness::new();
    let body = json!({"service_id": "monthly", "audit_frequency_seconds": 30 * 86_400});
    h.call(Method::POST, "/v1/services", Some(VENDOR), Some(serde_json::to_vec(&body).unwrap())).await;
    h.submit(&report("monthly", 1, start())).await;
    h.clock.advance(31 * 86_400);
    assert_eq!(badge(&h, "monthly").await["status"], "stale");
}

#[tokio::test]
async fn service_registration_rules() {
    let h = Harness::new();
    let post = |body: serde_json::Value, token: &'static str| {
        let h = &h;
        async move { h.call(Method::POST, "/v1/services", Some(token), Some(serde_json::to_vec(&body).unwrap())).await.0 }
    };
    assert_eq!(post(json!({"service_id": "a"}), VENDOR).await, StatusCode::CREATED);
    assert_eq!(post(json!({"service_id": "a"}), VENDOR).await, StatusCode::CONFLICT);
    assert_eq!(post(json!({"service_id": "Bad Slug"}), VENDOR).await, StatusCode::BAD_REQUEST);
    assert_eq!(post(json!({"service_id": "b", "vendor_id": "globex"}), VENDOR).await, StatusCode::FORBIDDEN);
    assert_eq!(post(json!({"service_id": "c", "audit_frequency_seconds": 0}), VENDOR).await, StatusCode::BAD_REQUEST);
    assert_eq!(post(json!({"service_id": "d"}), AUDITOR).await, StatusCode::FORBIDDEN);
    // Another vendor cannot publish into a service it does not own.
    let r = report("a", 1, start());
    let mut foreign = r.clone();
    foreign.vendor_id = "globex".into();
    certify(&mut foreign);
    let (status, _) =
        h.call(Method::POST, "/v1/reports", Some(OTHER_VENDOR), Some(foreign.to_canonical_bytes().unwrap())).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    let (status, info) = h.json(Method::GET, "/v1/services/a", None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(info["registration"]["vendor_id"], "acme");
    assert_eq!(info["report_count"], 0);
}

mod common;

use axum::http::{Method, StatusCode};
use common::*;
use fairlens_core::Timestamp;

#[tokio::test]
async fn submit_then_get_round_trips_bytes() {
    let h = Harness::new();
    let r = report("loan-scorer", 1, start());
    let (status, body) = h.submit(&r).await;
    assert_eq!(status, StatusCode::CREATED);
    let digest = r.canonical_digest().unwrap();
    assert_eq!(body["digest"], digest.to_hex());
    assert_eq!(body["ledger_index"], 0);
    assert_eq!(body["url"], format!("/v1/reports/{digest}"));

    let (status, bytes) = h.call(Method::GET, &format!("/v1/reports/{digest}"), None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(bytes, r.to_canonical_bytes().unwrap());
    let fetched = fairlens_core::audit::AuditReport::from_json(&bytes).unwrap();
    assert_eq!(fetched.canonical_digest().unwrap(), digest);
}

#[tokio::test]
async fn identical_resubmissions_are_idempotent() {
    let h = Harness::new();
    let r = report("loan-scorer", 1, start());
    let (first, a) = h.submit(&r).await;
    assert_eq!(first, StatusCode::CREATED);
    for _ in 0..4 {
        let (status, b) = h.submit(&r).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(a, b);
    }
    let (_, ledger) = h.json(Method::GET, "/v1/ledger", None, None).await;
    assert_eq!(ledger["total"], 1);
}

#[tokio::test]
async fn altered_disclaimer_is_rejected_by_field() {
    let h = Harness::new();
    let mut r = report("loan-scorer", 1, start());
    r.disclaimer = "Fairness metrics are absolute.".into();
    certify(&mut r);
    let (status, body) = h.submit(&r).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["fields"][0]["field"], "disclaimer");
}

#[tokio::test]
async fn vendor_cannot_preset_audit_state_or_forge_certificates() {
    let h = Harness::new();
    let mut flagged = report("loan-scorer", 1, start());
    flagged.audit_flag = true;
    let (status, body) = h.submit(&flagged).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["fields"][0]["field"], "audit_flag");

    let mut forged = report("loan-scorer", 1, start());
    let digest = forged.canonical_digest().unwrap();
    let fake = fairlens_core::audit::BocSigningKey::from_bytes([1; 32]);
    forged.boc = Some(fairlens_core::audit::issue_boc(digest, "board", start(), &fake));
    let (status, body) = h.submit(&forged).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["fields"][0]["field"], "boc.signature");

    let mut unknown = report("loan-scorer", 1, start());
    unknown.boc.as_mut().unwrap().issuer_id = "someone".into();
    let (status, _) = h.submit(&unknown).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, _) = h.call(Method::POST, "/v1/reports", Some(VENDOR), Some(b"{not json".to_vec())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn vendors_submit_only_their_own_reports() {
    let h = Harness::new();
    let r = report("loan-scorer", 1, start());
    let (status, _) = h
        .json(Method::POST, "/v1/reports", Some(OTHER_VENDOR), Some(r.to_canonical_bytes().unwrap()))
        .await;
    assert_eq!(status, StatusCode::FORBIDDEN);
}

#[tokio::test]
async fn different_document_under_same_digest_conflicts() {
    let h = Harness::new();
    let mut r = report("loan-scorer", 1, start());
    h.submit(&r).await;
    // Same digested body, different certificate timestamp.
    let digest = r.canonical_digest().unwrap();
    r.boc = Some(fairlens_core::audit::issue_boc(digest, "board", start().plus_seconds(5), &board_key()));
    let (status, _) = h.submit(&r).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn unknown_digest_is_404() {
    let h = Harness::new();
    let (status, _) = h.call(Method::GET, &format!("/v1/reports/{}", "ab".repeat(32)), None, None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = h.call(Method::GET, "/v1/reports/not-a-digest", None, None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

fn at(days: i64) -> Timestamp {
    start().plus_seconds(days * 86_400)
}

#[tokio::test]
async fn listing_is_newest_first() {
    let h = Harness::new();
    let mut digests = Vec::new();
    // Submitted out of chronological order on purpose.
    for (version, day) in [(2, 20), (1, 10), (3, 30)] {
        let r = report("loan-scorer", version, at(day));
        h.submit(&r).await;
        digests.push((day, r.canonical_digest().unwrap().to_hex()));
    }
    digests.sort();
    let (status, page) = h.json(Method::GET, "/v1/services/loan-scorer/reports", None, None).await;
    assert_eq!(status, StatusCode::OK);
    let listed: Vec<&str> = page["items"].as_array().unwrap().iter().map(|i| i["digest"].as_str().unwrap()).collect();
    let expected: Vec<&str> = digests.iter().rev().map(|(_, d)| d.as_str()).collect();
    assert_eq!(listed, expected);
    assert!(page["next_cursor"].is_null());
}

#[tokio::test]
async fn pagination_is_complete_under_interleaved_appends() {
    let h = Harness::new();
    for v in 1..=7u32 {
        h.submit(&report("loan-scorer", v, at(v as i64 * 10))).await;
    }
    let mut seen = Vec::new();
    let mut cursor: Option<String> = None;
    let mut extra = 100u32;
    loop {
        let uri = match &cursor {
            Some(c) => format!("/v1/services/loan-scorer/reports?limit=2&cursor={c}"),
            None => "/v1/services/loan-scorer/reports?limit=2".to_string(),
        };
        let (status, page) = h.json(Method::GET, &uri, None, None).await;
        assert_eq!(status, StatusCode::OK);
        for item in page["items"].as_array().unwrap() {
            seen.push(item["digest"].as_str().unwrap().to_string());
        }
        // An older report lands between page reads.
        extra += 1;
        h.submit(&report("loan-scorer", extra, at(1))).await;
        match page["next_cursor"].as_str() {
            Some(c) => cursor = Some(c.to_string()),
            None => break,
        }
    }
    let unique: std::collections::BTreeSet<_> = seen.iter().collect();
    assert_eq!(unique.len(), seen.len(), "duplicates across pages");
    for v in 1..=7u32 {
        let d = report("loan-scorer", v, at(v as i64 * 10)).canonical_digest().unwrap().to_hex();
        assert!(unique.contains(&d), "version {v} missing");
    }
}

#[tokio::test]
async fn malformed_listing_queries() {
    let h = Harness::new();
    h.submit(&report("loan-scorer", 1, start())).await;
    for q in ["limit=0", "limit=x", "cursor=garbage", "bogus=1"] {
        let (status, _) = h.call(Method::GET, &format!("/v1/services/loan-scorer/reports?{q}"), None, None).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{q}");
    }
    let (status, _) = h.call(Method::GET, "/v1/services/nobody/reports", None, None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn state_survives_restart() {
    let mut h = Harness::new();
    let r = report("loan-scorer", 1, start());
    h.submit(&r).await;
    h.reopen();
    let digest = r.canonical_digest().unwrap();
    let (status, bytes) = h.call(Method::GET, &format!("/v1/reports/{digest}"), None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(bytes, r.to_canonical_bytes().unwrap());
    let (_, verify) = h.json(Method::GET, "/v1/ledger/verify", None, None).await;
    assert_eq!(verify["status"], "ok");
    let (status, again) = h.submit(&r).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(again["ledger_index"], 0);
}

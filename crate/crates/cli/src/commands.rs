use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use fairlens_core::audit::{
    encrypt_snapshot, issue_boc, verify_boc, verify_chain, write_blob, AuditReport, BocPublicKey, BocSigningKey,
    LedgerEntry, NonceSource, SnapshotKey,
};
use fairlens_core::canonical::to_canonical_bytes;
use fairlens_core::engine::io::{load_csv_file, DatasetConfig};
use fairlens_core::engine::{
    compute_report, enumerate_slices, permutation_test, Criterion, FairnessReport, PermutationMetric, UNSPECIFIED,
};
use fairlens_core::{Digest32, Timestamp};
use fairlens_registry::{Registry, RegistryConfig, SystemClock};
use serde_json::{json, Value};

use crate::client::RegistryClient;
use crate::error::CliError;
use crate::{
    AuditSampleArgs, ComputeArgs, DriftArgs, EnumerateArgs, KeygenArgs, PermtestArgs, ReportArgs, ServeArgs,
    SubmitArgs, VerifyArgs,
};

type Result<T> = std::result::Result<T, CliError>;

const LEDGER_PAGE: usize = 500;

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::failed(format!("reading {}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::failed(format!("writing {}: {e}", path.display())))
}

fn read_key_text(path: &Path) -> Result<String> {
    let bytes = read(path)?;
    String::from_utf8(bytes)
        .map(|s| s.trim().to_string())
        .map_err(|_| CliError::usage(format!("{} is not a hex key file", path.display())))
}

/// Hex inline, or a path to a file containing hex.
fn key_argument(raw: &str) -> Result<String> {
    let path = Path::new(raw);
    if path.is_file() {
        read_key_text(path)
    } else {
        Ok(raw.trim().to_string())
    }
}

fn parse_fairness_report(path: &Path) -> Result<FairnessReport> {
    let bytes = read(path)?;
    if let Ok(report) = serde_json::from_slice::<FairnessReport>(&bytes) {
        return Ok(report);
    }
    // Audit reports carry their fairness report inside.
    AuditReport::from_json(&bytes)
        .map(|a| a.fairness_report)
        .map_err(|e| CliError::usage(format!("{} is neither a fairness report nor an audit report: {e}", path.display())))
}

/// Serializes where u128 counts fit in JSON integers, and as strings beyond.
fn count(value: Option<u128>) -> Value {
    match value {
        Some(v) => u64::try_from(v).map(Value::from).unwrap_or_else(|_| Value::from(v.to_string())),
        None => Value::Null,
    }
}

pub fn compute(args: ComputeArgs) -> Result<Value> {
    let at = args.timestamp.unwrap_or_else(Timestamp::now);
    let config = DatasetConfig::from_path(&args.config)?;
    let criteria = args
        .criteria
        .iter()
        .map(|c| c.parse::<Criterion>())
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut report_config = config.report_config(&criteria);
    if let (Some(seed), Some(sample)) = (args.seed, report_config.sample.as_mut()) {
        sample.seed = seed;
    }
    let loaded = load_csv_file(&args.input, &config, at)?;
    let mut report = compute_report(&loaded.dataset, &report_config, at)?;
    report.dataset_digest = Some(loaded.digest);
    let bytes = to_canonical_bytes(&report).map_err(|e| CliError::failed(e.to_string()))?;
    write(&args.out, &bytes)?;
    let errors: Vec<Value> = report
        .items
        .iter()
        .filter_map(|item| match &item.outcome {
            fairlens_core::engine::ItemOutcome::Error(msg) => {
                Some(json!({"criterion": item.criterion.to_string(), "attribute": item.attribute, "error": msg}))
            }
            _ => None,
        })
        .collect();
    Ok(json!({
        "out": args.out.display().to_string(),
        "digest": Digest32::of(&bytes).to_hex(),
        "record_count": report.record_count,
        "items": report.items.len(),
        "item_errors": errors,
    }))
}

pub fn report(args: ReportArgs) -> Result<Value> {
    let at = args.timestamp.unwrap_or_else(Timestamp::now);
    let fairness = parse_fairness_report(&args.metrics)?;
    if fairness.dataset_name != args.dataset_name {
        return Err(CliError::usage(format!(
            "--dataset-name {:?} does not match the metrics file's dataset {:?}",
            args.dataset_name, fairness.dataset_name
        )));
    }
    let key = SnapshotKey::from_hex(&read_key_text(&args.key)?)
        .map_err(|e| CliError::usage(format!("--key: {e}")))?;
    let signing = match &args.boc_key {
        Some(path) => Some(
            BocSigningKey::from_hex(&read_key_text(path)?).map_err(|e| CliError::usage(format!("--boc-key: {e}")))?,
        ),
        None => None,
    };
    let snapshot = read(&args.snapshot)?;
    let nonce = match args.seed {
        Some(seed) => NonceSource::Seeded(seed),
        None => NonceSource::System,
    };
    let (ciphertext, info) = encrypt_snapshot(&snapshot, &key, nonce).map_err(|e| CliError::failed(e.to_string()))?;
    let mut audit = AuditReport::new(
        &args.service_id,
        &args.vendor_id,
        args.report_version,
        at,
        Digest32::of(&snapshot),
        info,
        fairness,
    );
    let problems = audit.validate();
    if !problems.is_empty() {
        let listed: Vec<String> = problems.iter().map(|p| format!("{}: {}", p.field, p.reason)).collect();
        return Err(CliError::usage(format!("invalid report: {}", listed.join("; "))));
    }
    let digest = audit.canonical_digest().map_err(|e| CliError::failed(e.to_string()))?;
    if let (Some(key), Some(issuer)) = (&signing, &args.issuer_id) {
        audit.boc = Some(issue_boc(digest, issuer, at, key));
    }
    let blob_dir = match &args.blob_dir {
        Some(dir) => dir.clone(),
        None => args
            .out
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    let blob = write_blob(&blob_dir, &ciphertext).map_err(|e| CliError::failed(e.to_string()))?;
    let bytes = audit.to_canonical_bytes().map_err(|e| CliError::failed(e.to_string()))?;
    write(&args.out, &bytes)?;
    Ok(json!({
        "out": args.out.display().to_string(),
        "digest": digest.to_hex(),
        "snapshot_blob": blob.display().to_string(),
        "certified": audit.boc.is_some(),
    }))
}

pub fn submit(args: SubmitArgs) -> Result<Value> {
    let bytes = read(&args.report)?;
    let client = RegistryClient::new(&args.registry);
    let reply = client.post("/v1/reports", &args.token, &bytes)?;
    match reply.status {
        200 | 201 => {
            let body = reply.json()?;
            let path = body.get("url").and_then(Value::as_str).unwrap_or_default();
            Ok(json!({
                "digest": body["digest"],
                "ledger_index": body["ledger_index"],
                "created": reply.status == 201,
                "url": client.url(path),
            }))
        }
        400 | 422 => {
            let detail = reply.json().ok().and_then(|v| v.get("fields").cloned());
            let mut msg = format!("registry rejected the report: {}", reply.error_message());
            if let Some(fields) = detail {
                msg.push_str(&format!(" {fields}"));
            }
            Err(CliError::usage(msg))
        }
        status => Err(CliError::failed(format!("registry refused the report: HTTP {status}: {}", reply.error_message()))),
    }
}

struct Checks {
    results: Vec<Value>,
    first_failure: Option<String>,
}

impl Checks {
    fn new() -> Self {
        Self { results: Vec::new(), first_failure: None }
    }

    fn record(&mut self, name: &str, ok: bool, detail: impl Into<String>) {
        let detail = detail.into();
        if !ok && self.first_failure.is_none() {
            self.first_failure = Some(format!("{name}: {detail}"));
        }
        self.results.push(json!({"check": name, "ok": ok, "detail": detail}));
    }
}

pub fn verify(args: VerifyArgs) -> Result<Value> {
    let expected_digest = match &args.digest {
        Some(hex) => Some(Digest32::from_hex(hex).map_err(|e| CliError::usage(format!("--digest: {e}")))?),
        None => None,
    };
    let issuer_key = match &args.boc {
        Some(raw) => Some(BocPublicKey::from_hex(&key_argument(raw)?).map_err(|e| CliError::usage(format!("--boc: {e}")))?),
        None => None,
    };
    let bytes = read(&args.report)?;
    let mut checks = Checks::new();
    let report = match AuditReport::from_json(&bytes) {
        Ok(r) => r,
        Err(e) => {
            checks.record("parse", false, e.to_string());
            return finish_verify(checks, None);
        }
    };
    let digest = match report.canonical_digest() {
        Ok(d) => d,
        Err(e) => {
            checks.record("parse", false, e.to_string());
            return finish_verify(checks, None);
        }
    };

    let canonical = report.to_canonical_bytes().map(|c| c == bytes).unwrap_or(false);
    checks.record("canonical_form", canonical, if canonical { "file is in canonical form" } else { "file bytes differ from the canonical serialization" });

    let problems = report.validate();
    let listed: Vec<String> = problems.iter().map(|p| format!("{}: {}", p.field, p.reason)).collect();
    checks.record("consistency", problems.is_empty(), if problems.is_empty() { "all fields consistent".into() } else { listed.join("; ") });

    if let Some(expected) = expected_digest {
        checks.record("digest", expected == digest, format!("expected {expected}, computed {digest}"));
    }

    if let Some(key) = &issuer_key {
        match &report.boc {
            None => checks.record("certificate", false, "report carries no certificate"),
            Some(boc) => {
                let ok = verify_boc(boc, &digest, key);
                let detail = if ok {
                    format!("signed by {} ({})", boc.issuer_id, boc.signer_public_key_id)
                } else if boc.report_digest != digest {
                    "certificate is bound to a different report".to_string()
                } else {
                    "signature does not verify under the given key".to_string()
                };
                checks.record("certificate", ok, detail);
            }
        }
    }

    if let Some(url) = &args.ledger {
        match ledger_check(url, &digest) {
            Ok((ok, detail)) => checks.record("ledger", ok, detail),
            Err(e) => return Err(e),
        }
    }
    finish_verify(checks, Some(digest))
}

fn finish_verify(checks: Checks, digest: Option<Digest32>) -> Result<Value> {
    let ok = checks.first_failure.is_none();
    let output = json!({
        "digest": digest.map(|d| d.to_hex()),
        "ok": ok,
        "checks": checks.results,
    });
    match checks.first_failure {
        None => Ok(output),
        Some(reason) => Err(CliError::Rejected { reason: format!("verification failed: {reason}"), output }),
    }
}

/// Fetches the whole ledger, re-verifies the hash chain locally and looks
/// for the report digest among the payloads.
fn ledger_check(url: &str, digest: &Digest32) -> Result<(bool, String)> {
    let client = RegistryClient::new(url);
    let mut entries: Vec<LedgerEntry> = Vec::new();
    loop {
        let page = client.get_json(&format!("/v1/ledger?from={}&limit={LEDGER_PAGE}", entries.len()), None)?;
        let batch: Vec<LedgerEntry> = serde_json::from_value(page["entries"].clone())
            .map_err(|e| CliError::failed(format!("malformed ledger page: {e}")))?;
        let total = page["total"].as_u64().unwrap_or(0) as usize;
        let done = batch.is_empty();
        entries.extend(batch);
        if done || entries.len() >= total {
            break;
        }
    }
    let chain = verify_chain(&entries);
    if !chain.is_ok() {
        return Ok((false, format!("registry ledger does not verify: {}", serde_json::to_string(&chain).unwrap_or_default())));
    }
    Ok(match entries.iter().find(|e| e.payload_digest == *digest) {
        Some(e) => (true, format!("recorded at ledger index {}", e.index)),
        None => (false, format!("digest not found among {} ledger entries", entries.len())),
    })
}

pub fn enumerate(args: EnumerateArgs) -> Result<Value> {
    let attributes: Vec<(String, Vec<String>)> = match (args.source.attributes, &args.source.config, &args.input) {
        (Some(k), _, _) => {
            if k == 0 {
                return Err(CliError::usage("--attributes must be at least 1"));
            }
            // Only the counts of attributes matter here; give each a single placeholder category.
            (1..=k).map(|i| (format!("a{i}"), vec![UNSPECIFIED.to_string()])).collect()
        }
        (None, Some(config_path), Some(input)) => {
            let config = DatasetConfig::from_path(config_path)?;
            let loaded = load_csv_file(input, &config, Timestamp::now())?;
            let names = config.attributes.clone().unwrap_or_else(|| config.protected_attributes.clone());
            names
                .into_iter()
                .map(|name| {
                    let cats: BTreeSet<String> = loaded
                        .dataset
                        .records()
                        .iter()
                        .map(|r| r.attribute(&name).unwrap_or(UNSPECIFIED).to_string())
                        .collect();
                    (name, cats.into_iter().collect())
                })
                .collect()
        }
        _ => return Err(CliError::usage("give --attributes K, or --config with --input")),
    };
    let e = enumerate_slices(&attributes)?;
    let mut out = json!({
        "attribute_count": e.attribute_count(),
        "subset_count": count(e.subset_count()),
        "ordering_count": count(e.ordering_count()),
    });
    if args.source.config.is_some() {
        let depth = args.depth.unwrap_or(e.attribute_count());
        out["slice_depth"] = json!(depth);
        out["slice_count"] = count(e.slice_count(depth));
        out["attributes"] = json!(attributes.iter().map(|(n, c)| json!({"name": n, "categories": c})).collect::<Vec<_>>());
    }
    Ok(out)
}

pub fn permtest(args: PermtestArgs) -> Result<Value> {
    let metric: PermutationMetric = args.metric.parse()?;
    let config = match &args.config {
        Some(path) => DatasetConfig::from_path(path)?,
        None => {
            let name = args.input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "dataset".into());
            serde_json::from_value(json!({"name": name, "protected_attributes": [args.attribute]}))
                .map_err(|e| CliError::usage(e.to_string()))?
        }
    };
    let loaded = load_csv_file(&args.input, &config, Timestamp::now())?;
    let dataset = fairlens_core::engine::threshold_predictions(&loaded.dataset, config.threshold)?;
    let result = permutation_test(&dataset, &args.attribute, metric, args.n, args.seed)?;
    serde_json::to_value(result).map_err(|e| CliError::failed(e.to_string()))
}

pub fn drift(args: DriftArgs) -> Result<Value> {
    let previous = parse_fairness_report(&args.previous)?;
    let current = parse_fairness_report(&args.current)?;
    let result = fairlens_core::engine::drift(&previous, &current, args.threshold)?;
    let value = serde_json::to_value(&result).map_err(|e| CliError::failed(e.to_string()))?;
    if args.fail_on_alert && result.alert {
        return Err(CliError::Rejected { reason: "drift alert raised".into(), output: value });
    }
    Ok(value)
}

pub fn serve(args: ServeArgs) -> Result<Value> {
    let config = RegistryConfig::load(&args.config).map_err(|e| CliError::usage(format!("config: {e}")))?;
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .try_init();
    let registry =
        Registry::open(config, Arc::new(SystemClock)).map_err(|e| CliError::failed(format!("opening registry: {e}")))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::failed(e.to_string()))?;
    runtime
        .block_on(fairlens_registry::serve(registry))
        .map_err(|e| CliError::failed(format!("serving: {e}")))?;
    Ok(json!({"status": "stopped"}))
}

pub fn audit_sample(args: AuditSampleArgs) -> Result<Value> {
    let client = RegistryClient::new(&args.registry);
    let reply = client.get(&format!("/v1/audit-sample?n={}&seed={}", args.n, args.seed), Some(&args.token))?;
    if !reply.is_success() {
        return Err(CliError::failed(format!("HTTP {}: {}", reply.status, reply.error_message())));
    }
    reply.json()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum KeyKind {
    /// AES-256 key for dataset snapshots.
    Snapshot,
    /// Ed25519 key for signing certificates.
    Boc,
}

pub fn keygen(args: KeygenArgs) -> Result<Value> {
    if args.out.exists() {
        return Err(CliError::usage(format!("{} already exists; refusing to overwrite a key", args.out.display())));
    }
    match args.kind {
        KeyKind::Snapshot => {
            let key = SnapshotKey::generate();
            write(&args.out, format!("{}\n", key.to_hex()).as_bytes())?;
            Ok(json!({"out": args.out.display().to_string(), "fingerprint": key.fingerprint().to_hex()}))
        }
        KeyKind::Boc => {
            let key = BocSigningKey::generate();
            write(&args.out, format!("{}\n", key.to_hex()).as_bytes())?;
            let public = key.public_key();
            Ok(json!({
                "out": args.out.display().to_string(),
                "public_key": public.to_hex(),
                "key_id": public.key_id(),
            }))
        }
    }
}

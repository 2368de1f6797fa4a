mod client;
mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fairlens_core::Timestamp;

use crate::error::CliError;
use crate::output::Format;

#[derive(Parser, Debug)]
#[command(name = "fairlens", version, about = "Compute, certify, publish and verify fairness audit reports")]
struct Cli {
    /// Output format for stdout. `json` is canonical; `table` is for reading.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute a fairness report from a labeled CSV.
    Compute(ComputeArgs),
    /// Wrap a fairness report into a signed, escrowed audit report.
    Report(ReportArgs),
    /// Publish an audit report to a registry.
    Submit(SubmitArgs),
    /// Check an audit report's integrity, certificate and ledger inclusion.
    Verify(VerifyArgs),
    /// Count attribute subsets, orderings and slices.
    Enumerate(EnumerateArgs),
    /// Permutation test of a rate gap between two groups.
    Permtest(PermtestArgs),
    /// Compare two fairness reports.
    Drift(DriftArgs),
    /// Run the registry service.
    Serve(ServeArgs),
    /// Ask a registry for a seeded random sample of services to probe.
    AuditSample(AuditSampleArgs),
    /// Generate a snapshot encryption key or a certificate signing key.
    Keygen(KeygenArgs),
}

#[derive(Args, Debug)]
struct ComputeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated criteria overriding the config file.
    #[arg(long, value_delimiter = ',')]
    criteria: Vec<String>,
    /// Overrides the sampling seed from the config file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_timestamp)]
    timestamp: Option<Timestamp>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Fairness report written by `compute`.
    #[arg(long)]
    metrics: PathBuf,
    #[arg(long)]
    dataset_name: String,
    /// Dataset bytes to encrypt and escrow.
    #[arg(long)]
    snapshot: PathBuf,
    /// File holding the hex AES-256 snapshot key.
    #[arg(long)]
    key: PathBuf,
    #[arg(long)]
    service_id: String,
    #[arg(long)]
    vendor_id: String,
    #[arg(long, default_value_t = 1)]
    report_version: u32,
    #[arg(long)]
    out: PathBuf,
    /// Where to write the encrypted snapshot blob; defaults to the directory of --out.
    #[arg(long)]
    blob_dir: Option<PathBuf>,
    /// File holding the hex Ed25519 signing key of the certificate issuer.
    #[arg(long, requires = "issuer_id")]
    boc_key: Option<PathBuf>,
    #[arg(long, requires = "boc_key")]
    issuer_id: Option<String>,
    /// Derive the AEAD nonce from this seed instead of the system RNG.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_timestamp)]
    timestamp: Option<Timestamp>,
}

#[derive(Args, Debug)]
struct SubmitArgs {
    #[arg(long)]
    registry: String,
    #[arg(long)]
    token: String,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    report: PathBuf,
    /// Expected canonical digest (hex).
    #[arg(long)]
    digest: Option<String>,
    /// Issuer public key (hex, or a file holding it); requires a valid certificate.
    #[arg(long)]
    boc: Option<String>,
    /// Registry base URL whose ledger must contain the report.
    #[arg(long)]
    ledger: Option<String>,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false, id = "source")]
struct EnumerateSource {
    /// Number of attributes.
    #[arg(long)]
    attributes: Option<u32>,
    /// Dataset config; categories are read from --input.
    #[arg(long, requires = "input")]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EnumerateArgs {
    #[command(flatten)]
    source: EnumerateSource,
    #[arg(long)]
    input: Option<PathBuf>,
    /// Maximum slice depth for the slice count.
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Args, Debug)]
struct PermtestArgs {
    #[arg(long)]
    input: PathBuf,
    /// Dataset config; without it the CSV is read with --attribute as the only protected attribute.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    attribute: String,
    /// positive_rate, tpr, fpr or accuracy.
    #[arg(long)]
    metric: String,
    /// Number of permutations.
    #[arg(long)]
    n: u64,
    #[arg(long)]
    seed: u64,
}

#[derive(Args, Debug)]
struct DriftArgs {
    #[arg(long)]
    previous: PathBuf,
    #[arg(long)]
    current: PathBuf,
    #[arg(long)]
    threshold: f64,
    /// Exit 1 when the comparison raises an alert.
    #[arg(long)]
    fail_on_alert: bool,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args, Debug)]
struct AuditSampleArgs {
    #[arg(long)]
    registry: String,
    #[arg(long)]
    token: String,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    seed: u64,
}

#[derive(Args, Debug)]
struct KeygenArgs {
    #[arg(long, value_enum)]
    kind: commands::KeyKind,
    #[arg(long)]
    out: PathBuf,
}

fn parse_timestamp(raw: &str) -> Result<Timestamp, String> {
    Timestamp::parse(raw).map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<serde_json::Value, CliError> {
    use commands::*;
    match cli.command {
        Command::Compute(a) => compute(a),
        Command::Report(a) => report(a),
        Command::Submit(a) => submit(a),
        Command::Verify(a) => verify(a),
        Command::Enumerate(a) => enumerate(a),
        Command::Permtest(a) => permtest(a),
        Command::Drift(a) => drift(a),
        Command::Serve(a) => serve(a),
        Command::AuditSample(a) => audit_sample(a),
        Command::Keygen(a) => keygen(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            // Keep the diagnostic to one line: drop the usage block clap appends.
            let line: Vec<&str> = rendered
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:"))
                .filter(|l| !l.is_empty())
                .collect();
            eprintln!("{}", line.join(" "));
            return ExitCode::from(2);
        }
    };
    let format = cli.format;
    match run(cli) {
        Ok(value) => {
            output::print(&value, format);
            ExitCode::SUCCESS
        }
        Err(e) => {
            if let Some(value) = e.output() {
                output::print(value, format);
            }
            eprintln!("fairlens: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

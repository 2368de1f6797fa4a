//! Fairness auditing toolkit.
//!
//! Two halves live in this crate:
//!
//! * [`engine`] computes group fairness criteria, distribution divergences,
//!   permutation tests, intersectional slice enumeration and drift over a
//!   labeled dataset. Every operation is deterministic given its inputs and
//!   seed.
//! * [`audit`] turns a computed [`FairnessReport`](engine::FairnessReport)
//!   into a canonical, digestible [`AuditReport`](audit::AuditReport), with
//!   encrypted data snapshots, signed Bias Optimization Certificates and a
//!   hash-chained append-only ledger.

pub mod audit;
pub mod canonical;
pub mod digest;
pub mod engine;
pub mod extended;
pub mod rng;
pub mod timestamp;

pub use digest::Digest32;
pub use extended::ExtendedReal;
pub use timestamp::Timestamp;

/// Version string embedded in every computed report.
pub const ENGINE_VERSION: &str = concat!("fairlens-core/", env!("CARGO_PKG_VERSION"));

//! Admission control for injections: source authentication, content filters,
//! predictive guardrails, the review queue, and the audit log.

pub mod audit;
pub mod filter;
pub mod pipeline;
pub mod sources;

pub use audit::{AuditLog, AuditRecord, Decision, RequestSummary, AUDIT_HEADER};
pub use filter::{glob_match, FilterMode, FilterRule, FilterSet, Matcher};
pub use pipeline::{
    guardrails, preview, reason_for, Gate, PendingEntry, PendingQueue, PendingStatus, Preview, Stage, Verdict,
    VetFailure,
};
pub use sources::{token_digest, SourceEntry, SourceRegistry, SELF_SOURCE};

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::canonical::escape;
use crate::fragment::{FragmentId, FragmentKind};

pub const AUDIT_HEADER: &str = "epistemic-audit v1 elaborations=unfiltered";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Admitted,
    Rejected,
    Deferred,
    FlaggedForReview,
    Revised,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Admitted => "admitted",
            Decision::Rejected => "rejected",
            Decision::Deferred => "deferred",
            Decision::FlaggedForReview => "flagged_for_review",
            Decision::Revised => "revised",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Who did what, where. `strategy` is the injection strategy name, or the
/// operation (`perceive`, `retire`, `annihilate`) for non-injection records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestSummary {
    pub source: String,
    pub strategy: String,
    pub coord: Option<String>,
    pub kind: Option<FragmentKind>,
    pub topic: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub seq: u64,
    pub tick: u64,
    pub request_summary: RequestSummary,
    pub decision: Decision,
    pub reason_codes: Vec<crate::ReasonCode>,
    pub kappa_before: f64,
    pub kappa_after: f64,
    pub lambda_before: f64,
    pub lambda_after: f64,
    pub retracted_ids: Vec<FragmentId>,
    pub admitted_ids: Vec<FragmentId>,
}

fn list<T: fmt::Display>(items: &[T]) -> String {
    if items.is_empty() {
        return "-".into();
    }
    items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
}

fn opt(field: Option<&str>) -> String {
    field.map_or_else(|| "-".into(), |s| escape(s, &[',']))
}

impl AuditRecord {
    /// One tab-separated export line, without the trailing newline.
    pub fn to_line(&self) -> String {
        let s = &self.request_summary;
        let summary = [
            escape(&s.source, &[',']),
            escape(&s.strategy, &[',']),
            opt(s.coord.as_deref()),
            opt(s.kind.map(|k| k.as_str())),
            opt(s.topic.as_deref()),
        ]
        .join(",");
        format!(
            "{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}",
            self.seq,
            self.tick,
            summary,
            self.decision,
            list(&self.reason_codes),
            self.kappa_before,
            self.kappa_after,
            self.lambda_before,
            self.lambda_after,
            list(&self.retracted_ids),
            list(&self.admitted_ids),
        )
    }
}

/// Append-only record stream. Sequence numbers start at 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AuditLog {
    records: Vec<AuditRecord>,
}

impl AuditLog {
    /// Stamps `record` with the next sequence number and appends it.
    pub(crate) fn append(&mut self, mut record: AuditRecord) -> &AuditRecord {
        record.seq = self.records.len() as u64 + 1;
        self.records.push(record);
        self.records.last().expect("just pushed")
    }

    pub fn records(&self) -> &[AuditRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last_seq(&self) -> u64 {
        self.records.len() as u64
    }

    /// Records with `seq > since`.
    pub fn since(&self, since: u64) -> &[AuditRecord] {
        let start = usize::try_from(since).unwrap_or(usize::MAX).min(self.records.len());
        &self.records[start..]
    }

    pub fn export(&self) -> String {
        let mut out = String::from(AUDIT_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(out, "{}", r.to_line());
        }
        out
    }
}

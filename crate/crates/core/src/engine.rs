//! The engine aggregate: one belief state plus the safety pipeline, review
//! queue and audit log around it. Every mutation goes through `&mut self`,
//! so callers that share an engine serialize commands in front of it.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::GuardrailMode;
use crate::error::{Error, Result};
use crate::fragment::{FragmentBlueprint, FragmentId, Provenance};
use crate::injection::{
    AlwaysProceed, ContextSnapshot, InjectionPolicy, InjectionRequest, InjectionResult, PolicyDecision, Strategy,
};
use crate::lifecycle::{ReflectOutcome, TickReport};
use crate::manifold::Manifold;
use crate::metrics::{coherence, load};
use crate::reason::ReasonCode;
use crate::safety::pipeline::{guardrails, reason_for};
use crate::safety::{
    token_digest, AuditLog, AuditRecord, Decision, Gate, PendingQueue, PendingStatus, RequestSummary, Verdict,
};
use crate::sector::SectorId;
use crate::state::BeliefState;

/// Point-in-time engine measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tick: u64,
    pub kappa: f64,
    pub lambda: f64,
    pub active_count: usize,
    pub pending_count: usize,
    pub capacity: usize,
}

/// What a submit produced: its audit record and, when flagged, the pending id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub record: AuditRecord,
    pub pending_id: Option<u64>,
}

/// Outcome fields of one audited action, before metrics and sequencing.
struct Entry {
    summary: RequestSummary,
    decision: Decision,
    reasons: Vec<ReasonCode>,
    retracted: Vec<FragmentId>,
    admitted: Vec<FragmentId>,
}

impl Entry {
    fn new(summary: RequestSummary, decision: Decision, reasons: Vec<ReasonCode>) -> Self {
        Self {
            summary,
            decision,
            reasons,
            retracted: Vec::new(),
            admitted: Vec::new(),
        }
    }
}

fn summarize(source: &str, request: &InjectionRequest) -> RequestSummary {
    let bp = request.effective_blueprint();
    RequestSummary {
        source: source.to_string(),
        strategy: request.strategy.to_string(),
        coord: Some(bp.coord.to_string()),
        kind: Some(bp.kind),
        topic: bp.assertion.map(|a| a.topic),
    }
}

#[derive(Clone)]
pub struct Engine {
    manifold: Manifold,
    state: BeliefState,
    gate: Gate,
    audit: AuditLog,
    pending: PendingQueue,
    env: BTreeMap<String, String>,
    policy: Arc<dyn InjectionPolicy>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("manifold", &self.manifold)
            .field("state", &self.state)
            .field("gate", &self.gate)
            .field("audit_len", &self.audit.len())
            .field("pending", &self.pending)
            .finish_non_exhaustive()
    }
}

impl Engine {
    pub fn new(manifold: Manifold) -> Self {
        Self {
            manifold,
            state: BeliefState::vacuum(),
            gate: Gate::default(),
            audit: AuditLog::default(),
            pending: PendingQueue::default(),
            env: BTreeMap::new(),
            policy: Arc::new(AlwaysProceed),
        }
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn manifold_mut(&mut self) -> &mut Manifold {
        &mut self.manifold
    }

    pub fn gate(&self) -> &Gate {
        &self.gate
    }

    pub fn gate_mut(&mut self) -> &mut Gate {
        &mut self.gate
    }

    pub fn set_policy(&mut self, policy: impl InjectionPolicy + 'static) {
        self.policy = Arc::new(policy);
    }

    pub fn state(&self) -> &BeliefState {
        &self.state
    }

    pub fn audit(&self) -> &AuditLog {
        &self.audit
    }

    pub fn pending(&self) -> &PendingQueue {
        &self.pending
    }

    pub fn env(&self) -> &BTreeMap<String, String> {
        &self.env
    }

    pub fn set_env(&mut self, key: &str, value: &str) {
        self.env.insert(key.to_string(), value.to_string());
    }

    pub fn context(&self) -> ContextSnapshot {
        ContextSnapshot::capture(&self.state, &self.env)
    }

    pub fn metrics(&self) -> Metrics {
        Metrics {
            tick: self.state.tick(),
            kappa: coherence(&self.state),
            lambda: load(&self.state),
            active_count: self.state.active_count(),
            pending_count: self.pending.open_count(),
            capacity: self.manifold.config().capacity,
        }
    }

    /// Inserts a fragment with no checks and no audit record. Meant for
    /// constructing fixtures and demo seeds.
    pub fn seed_unchecked(&mut self, blueprint: &FragmentBlueprint) -> Result<FragmentId> {
        self.manifold.check_coord(&blueprint.coord)?;
        blueprint.validate()?;
        Ok(self.state.insert_unchecked(blueprint))
    }

    /// Applies `next` as the new state and appends the audit record.
    fn commit(&mut self, next: Option<BeliefState>, entry: Entry) -> AuditRecord {
        let (kappa_before, lambda_before) = (coherence(&self.state), load(&self.state));
        if let Some(next) = next {
            self.state = next;
        }
        let record = AuditRecord {
            seq: 0,
            tick: self.state.tick(),
            request_summary: entry.summary,
            decision: entry.decision,
            reason_codes: entry.reasons,
            kappa_before,
            kappa_after: coherence(&self.state),
            lambda_before,
            lambda_after: load(&self.state),
            retracted_ids: entry.retracted,
            admitted_ids: entry.admitted,
        };
        self.audit.append(record).clone()
    }

    fn reject(&mut self, summary: RequestSummary, reasons: Vec<ReasonCode>) -> AuditRecord {
        self.commit(None, Entry::new(summary, Decision::Rejected, reasons))
    }

    /// Records an injection result under `lead` reasons (empty except for
    /// reviewed requests). A deferral during review counts as a rejection.
    fn apply_result(
        &mut self,
        summary: RequestSummary,
        mut reasons: Vec<ReasonCode>,
        result: InjectionResult,
        reviewed: bool,
    ) -> AuditRecord {
        match result {
            InjectionResult::Assimilated(outcome) => {
                reasons.extend(outcome.reason_codes);
                if outcome.rejected {
                    return self.reject(summary, reasons);
                }
                let mut entry = Entry::new(summary, Decision::Admitted, reasons);
                entry.retracted = outcome.retracted_ids;
                entry.admitted = outcome.admitted_ids;
                entry.admitted.extend(outcome.elaborated_ids);
                self.commit(Some(outcome.new_state), entry)
            }
            InjectionResult::Deferred(blocked) => {
                reasons.extend(blocked);
                let decision = if reviewed {
                    Decision::Rejected
                } else {
                    Decision::Deferred
                };
                self.commit(None, Entry::new(summary, decision, reasons))
            }
        }
    }

    /// Runs a request through the full safety pipeline and, if it passes,
    /// its strategy. Appends exactly one audit record.
    pub fn submit(&mut self, request: &InjectionRequest, token: &str) -> Submission {
        let summary = summarize(&request.source, request);
        let done = |record| Submission {
            record,
            pending_id: None,
        };

        if let Err(fail) = self.gate.check_auth(request, token) {
            return done(self.reject(summary, vec![fail.reason]));
        }
        if let Err(e) = request.validate() {
            return done(self.reject(summary, vec![reason_for(&e)]));
        }
        if request.strategy == Strategy::Naive {
            return done(self.submit_naive(summary, request));
        }

        let ctx = self.context();
        match self.policy.decide(&self.state, &ctx, request) {
            PolicyDecision::Proceed => {}
            PolicyDecision::Defer => {
                let entry = Entry::new(summary, Decision::Deferred, vec![ReasonCode::PolicyDeferred]);
                return done(self.commit(None, entry));
            }
            PolicyDecision::Drop => return done(self.reject(summary, vec![ReasonCode::PolicyDropped])),
        }

        if let Err(fail) = self.gate.check_filters(request) {
            return done(self.reject(summary, vec![fail.reason]));
        }

        let preview = match guardrails(&self.manifold, &self.state, &ctx, request) {
            Ok(preview) => preview,
            Err(fail) => {
                if self.manifold.config().guardrail_mode == GuardrailMode::Reject {
                    return done(self.reject(summary, vec![fail.reason]));
                }
                let entry = Entry::new(summary, Decision::FlaggedForReview, vec![fail.reason.clone()]);
                let record = self.commit(None, entry);
                let id = self.pending.push(
                    request.clone(),
                    token_digest(token),
                    self.state.tick(),
                    record.seq,
                    fail.reason,
                );
                return Submission {
                    record,
                    pending_id: Some(id),
                };
            }
        };

        let result = match preview {
            Some(p) => Ok(p.result),
            None => self.manifold.inject(&self.state, &ctx, request),
        };
        match result {
            Ok(result) => done(self.apply_result(summary, Vec::new(), result, false)),
            Err(e) => done(self.reject(summary, vec![reason_for(&e)])),
        }
    }

    /// Naive path: authentication and filters still apply, guardrails and
    /// assimilation do not.
    fn submit_naive(&mut self, summary: RequestSummary, request: &InjectionRequest) -> AuditRecord {
        if !self.manifold.config().allow_naive {
            return self.reject(summary, vec![ReasonCode::NaiveDisabled]);
        }
        if let Err(fail) = self.gate.check_filters(request) {
            return self.reject(summary, vec![fail.reason]);
        }
        let bp = request.effective_blueprint();
        if let Err(e) = self.manifold.check_coord(&bp.coord) {
            return self.reject(summary, vec![reason_for(&e)]);
        }
        let mut next = self.state.clone();
        let id = next.insert_unchecked(&bp);
        let mut entry = Entry::new(summary, Decision::Admitted, vec![ReasonCode::NaiveBypass]);
        entry.admitted = vec![id];
        self.commit(Some(next), entry)
    }

    /// Applies a reviewer's verdict to a flagged request. Approval re-runs
    /// authentication and filters against the current rules, skips the
    /// guardrails, and injects into the current state.
    pub fn resolve_pending(&mut self, id: u64, verdict: Verdict, actor: &str, token: &str) -> Result<AuditRecord> {
        self.gate.sources.authorize_reviewer(actor, token)?;
        let entry = self.pending.open(id)?.clone();
        let summary = summarize(actor, &entry.request);
        let reasons = vec![ReasonCode::HumanReview];

        if verdict == Verdict::Reject {
            self.pending.close(id, PendingStatus::Rejected);
            return Ok(self.reject(summary, reasons));
        }
        self.pending.close(id, PendingStatus::Approved);
        let request = &entry.request;
        let vetted = self
            .gate
            .check_auth_digest(request, &entry.token_digest)
            .and_then(|()| self.gate.check_filters(request));
        if let Err(fail) = vetted {
            return Ok(self.reject(summary, vec![ReasonCode::HumanReview, fail.reason]));
        }
        let ctx = self.context();
        Ok(match self.manifold.inject(&self.state, &ctx, request) {
            Ok(result) => self.apply_result(summary, reasons, result, true),
            Err(e) => self.reject(summary, vec![ReasonCode::HumanReview, reason_for(&e)]),
        })
    }

    /// Operator retirement of one active fragment, pinned or not.
    pub fn retire(&mut self, id: FragmentId, actor: &str, token: &str) -> Result<AuditRecord> {
        self.gate.sources.authorize_reviewer(actor, token)?;
        let retirement = self.manifold.retire(&self.state, id)?;
        let f = self.state.get(id).expect("retire checked existence");
        let summary = RequestSummary {
            source: actor.to_string(),
            strategy: "retire".into(),
            coord: Some(f.coord.to_string()),
            kind: Some(f.kind),
            topic: f.topic().map(str::to_string),
        };
        let mut reasons = vec![ReasonCode::ManualRetirement];
        if retirement.was_pinned {
            reasons.push(ReasonCode::PinnedRetired);
        }
        let mut entry = Entry::new(summary, Decision::Revised, reasons);
        entry.retracted = vec![id];
        Ok(self.commit(Some(retirement.new_state), entry))
    }

    pub fn annihilate_sector(&mut self, sector: &SectorId, actor: &str, token: &str) -> Result<AuditRecord> {
        self.gate.sources.authorize_reviewer(actor, token)?;
        let out = self.manifold.annihilate_sector(&self.state, sector)?;
        let summary = RequestSummary {
            source: actor.to_string(),
            strategy: "annihilate".into(),
            coord: Some(sector.to_string()),
            kind: None,
            topic: None,
        };
        let mut entry = Entry::new(summary, Decision::Revised, vec![ReasonCode::SectorAnnihilation]);
        entry.retracted = out.annihilated_ids;
        Ok(self.commit(Some(out.new_state), entry))
    }

    /// Admits an observation at its own anchor. Perceptions skip
    /// authentication and the whitelist but not the blacklist.
    pub fn perceive(&mut self, blueprint: &FragmentBlueprint) -> AuditRecord {
        let bp = blueprint.clone().with_provenance(Provenance::Perceived);
        let summary = RequestSummary {
            source: "perceived".into(),
            strategy: "perceive".into(),
            coord: Some(bp.coord.to_string()),
            kind: Some(bp.kind),
            topic: bp.assertion.as_ref().map(|a| a.topic.clone()),
        };
        if let Err(reason) = self.gate.filters.check_blacklist(&bp) {
            return self.reject(summary, vec![reason]);
        }
        match self.manifold.assimilate(&self.state, &bp, bp.effective_anchor()) {
            Ok(outcome) => self.apply_result(summary, Vec::new(), InjectionResult::Assimilated(outcome), false),
            Err(e) => self.reject(summary, vec![reason_for(&e)]),
        }
    }

    pub fn tick(&mut self) -> TickReport {
        let (next, report) = self.manifold.tick(&self.state);
        self.state = next;
        report
    }

    pub fn reflect(&mut self) -> ReflectOutcome {
        let outcome = self.manifold.reflect(&self.state);
        self.state = outcome.new_state.clone();
        outcome
    }

    pub fn reinforce(&mut self, id: FragmentId) -> Result<()> {
        self.state = self.manifold.reinforce(&self.state, id)?;
        Ok(())
    }

    /// Replaces the state wholesale, e.g. from a canonical import.
    pub fn restore(&mut self, state: BeliefState) -> Result<()> {
        for f in state.fragments() {
            self.manifold.check_coord(&f.coord)?;
        }
        if !self.audit.is_empty() {
            return Err(Error::InvalidRequest(
                "restore is only allowed on a fresh engine".into(),
            ));
        }
        self.state = state;
        Ok(())
    }
}

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::injection::{ContextSnapshot, InjectionRequest, InjectionResult, Strategy};
use crate::manifold::Manifold;
use crate::metrics::{coherence, load};
use crate::reason::ReasonCode;
use crate::state::BeliefState;

use super::filter::FilterSet;
use super::sources::SourceRegistry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Auth,
    Whitelist,
    Blacklist,
    Guardrail,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Auth => "auth",
            Stage::Whitelist => "whitelist",
            Stage::Blacklist => "blacklist",
            Stage::Guardrail => "guardrail",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VetFailure {
    pub stage: Stage,
    pub reason: ReasonCode,
}

impl VetFailure {
    fn new(stage: Stage, reason: ReasonCode) -> Self {
        Self { stage, reason }
    }
}

/// The would-be effect of a request, computed on a copy of the state.
#[derive(Debug, Clone, PartialEq)]
pub struct Preview {
    pub result: InjectionResult,
    pub predicted_kappa: f64,
    pub predicted_lambda: f64,
}

/// Maps a request-shape error onto the reason code recorded for it.
pub fn reason_for(error: &Error) -> ReasonCode {
    match error {
        Error::MissingTtl => ReasonCode::MissingTtl,
        Error::MissingTarget => ReasonCode::MissingTarget,
        Error::WrongKind(_) => ReasonCode::WrongKind,
        Error::UnknownSector(_) => ReasonCode::UnknownSector,
        Error::LayerOutOfRange { .. } => ReasonCode::LayerOutOfRange,
        Error::NaiveDisabled => ReasonCode::NaiveDisabled,
        _ => ReasonCode::InvalidRequest,
    }
}

/// Authentication plus content filters: the stages human review cannot skip.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub sources: SourceRegistry,
    pub filters: FilterSet,
}

impl Gate {
    pub fn check_auth(&self, request: &InjectionRequest, token: &str) -> Result<(), VetFailure> {
        self.sources
            .authenticate(request, token)
            .map_err(|why| VetFailure::new(Stage::Auth, ReasonCode::Auth(why)))
    }

    pub fn check_auth_digest(&self, request: &InjectionRequest, digest: &str) -> Result<(), VetFailure> {
        self.sources
            .authenticate_digest(request, digest)
            .map_err(|why| VetFailure::new(Stage::Auth, ReasonCode::Auth(why)))
    }

    pub fn check_filters(&self, request: &InjectionRequest) -> Result<(), VetFailure> {
        let bp = request.effective_blueprint();
        self.filters
            .check_whitelist(&bp)
            .map_err(|r| VetFailure::new(Stage::Whitelist, r))?;
        self.filters
            .check_blacklist(&bp)
            .map_err(|r| VetFailure::new(Stage::Blacklist, r))
    }

    /// All four stages in order; the first failure short-circuits.
    pub fn vet(
        &self,
        manifold: &Manifold,
        state: &BeliefState,
        ctx: &ContextSnapshot,
        request: &InjectionRequest,
        token: &str,
    ) -> Result<(), VetFailure> {
        self.check_auth(request, token)?;
        self.check_filters(request)?;
        guardrails(manifold, state, ctx, request).map(|_| ())
    }
}

/// Runs the request's strategy against a copy of `state`.
pub fn preview(
    manifold: &Manifold,
    state: &BeliefState,
    ctx: &ContextSnapshot,
    request: &InjectionRequest,
) -> Result<Preview> {
    if request.strategy == Strategy::Naive {
        let next = manifold.inject_naive(state, request)?;
        return Ok(Preview {
            predicted_kappa: coherence(&next),
            predicted_lambda: load(&next),
            result: InjectionResult::Assimilated(crate::AssimilationOutcome {
                admitted_ids: vec![state.next_id()],
                new_state: next,
                retracted_ids: Vec::new(),
                elaborated_ids: Vec::new(),
                rejected: false,
                reason_codes: vec![ReasonCode::NaiveBypass],
            }),
        });
    }
    let result = manifold.inject(state, ctx, request)?;
    let after = result.new_state(state);
    Ok(Preview {
        predicted_kappa: coherence(after),
        predicted_lambda: load(after),
        result,
    })
}

/// Pinned alignment, then the predicted coherence floor and drop limit.
/// Returns the preview so a passing request need not be recomputed.
pub fn guardrails(
    manifold: &Manifold,
    state: &BeliefState,
    ctx: &ContextSnapshot,
    request: &InjectionRequest,
) -> Result<Option<Preview>, VetFailure> {
    let guardrail = |reason| VetFailure::new(Stage::Guardrail, reason);
    let bp = request.effective_blueprint();
    if manifold.conflicts(state, &bp).iter().any(|f| f.pinned) {
        return Err(guardrail(ReasonCode::GuardrailPinned));
    }
    // Malformed requests carry no prediction; submit rejects them afterwards.
    let Ok(preview) = preview(manifold, state, ctx, request) else {
        return Ok(None);
    };
    let cfg = manifold.config();
    if preview.predicted_kappa < cfg.kappa_floor {
        return Err(guardrail(ReasonCode::GuardrailKappaFloor));
    }
    if preview.predicted_kappa < coherence(state) - cfg.kappa_drop_max {
        return Err(guardrail(ReasonCode::GuardrailKappaDrop));
    }
    Ok(Some(preview))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Approve,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PendingStatus {
    Open,
    Approved,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingEntry {
    pub id: u64,
    pub request: InjectionRequest,
    /// Digest of the token presented with the original submission.
    #[serde(skip)]
    pub(crate) token_digest: String,
    pub submitted_tick: u64,
    pub audit_seq: u64,
    pub reason: ReasonCode,
    pub status: PendingStatus,
}

/// Guardrail-flagged requests awaiting a human verdict, in FIFO order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PendingQueue {
    entries: Vec<PendingEntry>,
}

impl PendingQueue {
    pub(crate) fn push(
        &mut self,
        request: InjectionRequest,
        token_digest: String,
        submitted_tick: u64,
        audit_seq: u64,
        reason: ReasonCode,
    ) -> u64 {
        let id = self.entries.len() as u64 + 1;
        self.entries.push(PendingEntry {
            id,
            request,
            token_digest,
            submitted_tick,
            audit_seq,
            reason,
            status: PendingStatus::Open,
        });
        id
    }

    pub fn get(&self, id: u64) -> Option<&PendingEntry> {
        id.checked_sub(1).and_then(|i| self.entries.get(i as usize))
    }

    /// The open entry `id`, or why it cannot be resolved.
    pub fn open(&self, id: u64) -> Result<&PendingEntry> {
        let entry = self.get(id).ok_or(Error::UnknownPending(id))?;
        if entry.status != PendingStatus::Open {
            return Err(Error::AlreadyResolved(id));
        }
        Ok(entry)
    }

    pub(crate) fn close(&mut self, id: u64, status: PendingStatus) {
        if let Some(entry) = id.checked_sub(1).and_then(|i| self.entries.get_mut(i as usize)) {
            entry.status = status;
        }
    }

    pub fn list_open(&self) -> impl Iterator<Item = &PendingEntry> {
        self.entries.iter().filter(|e| e.status == PendingStatus::Open)
    }

    pub fn open_count(&self) -> usize {
        self.list_open().count()
    }

    pub fn entries(&self) -> &[PendingEntry] {
        &self.entries
    }
}

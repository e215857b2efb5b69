//! Injection strategies: the ways a crafted fragment is introduced into a
//! belief state, plus the pluggable injection policy interface.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::assimilation::AssimilationOutcome;
use crate::error::{Error, Result};
use crate::fragment::{FragmentBlueprint, FragmentKind, Provenance};
use crate::manifold::Manifold;
use crate::metrics::{coherence, load};
use crate::reason::ReasonCode;
use crate::sector::{Coord, SectorId};
use crate::state::BeliefState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Naive,
    Direct,
    ContextAware,
    GoalOriented,
    Reflective,
    Temporal,
    SectorTargeted,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::Naive,
        Strategy::Direct,
        Strategy::ContextAware,
        Strategy::GoalOriented,
        Strategy::Reflective,
        Strategy::Temporal,
        Strategy::SectorTargeted,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Naive => "naive",
            Strategy::Direct => "direct",
            Strategy::ContextAware => "context_aware",
            Strategy::GoalOriented => "goal_oriented",
            Strategy::Reflective => "reflective",
            Strategy::Temporal => "temporal",
            Strategy::SectorTargeted => "sector_targeted",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::InvalidRequest(format!("unknown strategy {s:?}")))
    }
}

/// A candidate fragment plus how, by whom and with what authority it is injected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionRequest {
    pub fragment: FragmentBlueprint,
    pub strategy: Strategy,
    pub source: String,
    /// Authority in [0, 1] used against existing anchors.
    pub priority: f64,
    #[serde(default)]
    pub ttl: Option<u32>,
    #[serde(default)]
    pub target: Option<Coord>,
}

impl InjectionRequest {
    pub fn new(fragment: FragmentBlueprint, strategy: Strategy, source: &str, priority: f64) -> Self {
        Self {
            fragment,
            strategy,
            source: source.to_string(),
            priority,
            ttl: None,
            target: None,
        }
    }

    pub fn with_ttl(mut self, ttl: u32) -> Self {
        self.ttl = Some(ttl);
        self
    }

    pub fn with_target(mut self, target: Coord) -> Self {
        self.target = Some(target);
        self
    }

    /// Shape checks that hold regardless of engine state.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.priority) {
            return Err(Error::InvalidRequest(format!(
                "priority {} is outside [0, 1]",
                self.priority
            )));
        }
        if self.ttl == Some(0) {
            return Err(Error::InvalidRequest("ttl must be at least 1".into()));
        }
        match self.strategy {
            Strategy::Temporal if self.ttl.is_none() => Err(Error::MissingTtl),
            Strategy::SectorTargeted if self.target.is_none() => Err(Error::MissingTarget),
            Strategy::GoalOriented if !matches!(self.fragment.kind, FragmentKind::Goal | FragmentKind::Constraint) => {
                Err(Error::WrongKind(self.fragment.kind.to_string()))
            }
            Strategy::Reflective if self.fragment.kind != FragmentKind::ReflectivePrompt => {
                Err(Error::WrongKind(self.fragment.kind.to_string()))
            }
            _ => self.fragment.validate(),
        }
    }

    /// The blueprint the strategy actually admits: provenance set to the
    /// source, ttl applied, and the coordinate forced or overridden where the
    /// strategy says so.
    pub fn effective_blueprint(&self) -> FragmentBlueprint {
        let mut bp = self.fragment.clone();
        bp.provenance = Provenance::Injected(self.source.clone());
        if self.ttl.is_some() {
            bp.ttl = self.ttl;
        }
        match self.strategy {
            Strategy::GoalOriented => bp.coord.sector = SectorId::plan(),
            Strategy::Reflective => bp.coord.sector = SectorId::refl(),
            Strategy::SectorTargeted => {
                if let Some(target) = &self.target {
                    bp.coord = target.clone();
                }
            }
            _ => {}
        }
        bp
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentContext {
    pub active_goal_topics: BTreeSet<String>,
    pub load: f64,
    pub kappa: f64,
}

/// Agent-internal and environmental context consulted by the context-aware gate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContextSnapshot {
    pub agent: AgentContext,
    pub env: BTreeMap<String, String>,
}

impl ContextSnapshot {
    /// Measures the agent context from `state`. Call this per evaluation;
    /// snapshots are not meant to outlive the tick they were taken in.
    pub fn capture(state: &BeliefState, env: &BTreeMap<String, String>) -> Self {
        let active_goal_topics = state
            .active()
            .filter(|f| f.kind == FragmentKind::Goal)
            .filter_map(|f| f.topic().map(str::to_string))
            .collect();
        Self {
            agent: AgentContext {
                active_goal_topics,
                load: load(state),
                kappa: coherence(state),
            },
            env: env.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyDecision {
    Proceed,
    Defer,
    Drop,
}

/// Decides whether an injection should be attempted at all. Implementations
/// must be pure in their inputs.
pub trait InjectionPolicy: Send + Sync {
    fn decide(&self, state: &BeliefState, ctx: &ContextSnapshot, request: &InjectionRequest) -> PolicyDecision;
}

/// The default policy.
#[derive(Debug, Clone, Copy, Default)]
pub struct AlwaysProceed;

impl InjectionPolicy for AlwaysProceed {
    fn decide(&self, _: &BeliefState, _: &ContextSnapshot, _: &InjectionRequest) -> PolicyDecision {
        PolicyDecision::Proceed
    }
}

impl<F> InjectionPolicy for F
where
    F: Fn(&BeliefState, &ContextSnapshot, &InjectionRequest) -> PolicyDecision + Send + Sync,
{
    fn decide(&self, state: &BeliefState, ctx: &ContextSnapshot, request: &InjectionRequest) -> PolicyDecision {
        self(state, ctx, request)
    }
}

/// Result of the context-aware gate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Appropriateness {
    Ok,
    Blocked(Vec<ReasonCode>),
}

/// Result of a non-naive injection.
#[derive(Debug, Clone, PartialEq)]
pub enum InjectionResult {
    Assimilated(AssimilationOutcome),
    /// The context-aware gate declined; the state is untouched.
    Deferred(Vec<ReasonCode>),
}

impl InjectionResult {
    pub fn new_state<'a>(&'a self, before: &'a BeliefState) -> &'a BeliefState {
        match self {
            InjectionResult::Assimilated(outcome) => &outcome.new_state,
            InjectionResult::Deferred(_) => before,
        }
    }
}

fn expect_strategy(request: &InjectionRequest, expected: Strategy) -> Result<()> {
    if request.strategy != expected {
        return Err(Error::WrongStrategy {
            expected: expected.to_string(),
            actual: request.strategy.to_string(),
        });
    }
    request.validate()
}

impl Manifold {
    /// Inserts the fragment with no checks at all. Only available when the
    /// config's `allow_naive` flag is set.
    pub fn inject_naive(&self, state: &BeliefState, request: &InjectionRequest) -> Result<BeliefState> {
        if !self.config.allow_naive {
            return Err(Error::NaiveDisabled);
        }
        expect_strategy(request, Strategy::Naive)?;
        let mut next = state.clone();
        next.insert_unchecked(&request.effective_blueprint());
        Ok(next)
    }

    pub fn inject_direct(&self, state: &BeliefState, request: &InjectionRequest) -> Result<AssimilationOutcome> {
        expect_strategy(request, Strategy::Direct)?;
        self.assimilate(state, &request.effective_blueprint(), request.priority)
    }

    /// The contextual validation gate: relevance, headroom, consistency with
    /// highly anchored beliefs, and target validity. All failing clauses are
    /// reported, in that order.
    pub fn appropriate(
        &self,
        state: &BeliefState,
        ctx: &ContextSnapshot,
        request: &InjectionRequest,
    ) -> Appropriateness {
        let bp = request.effective_blueprint();
        let mut blocked = Vec::new();

        let always_relevant = matches!(
            bp.kind,
            FragmentKind::Constraint | FragmentKind::Correction | FragmentKind::ReflectivePrompt
        );
        let on_goal = bp
            .assertion
            .as_ref()
            .is_some_and(|a| ctx.agent.active_goal_topics.contains(&a.topic));
        if !(always_relevant || on_goal) {
            blocked.push(ReasonCode::Irrelevant);
        }

        if ctx.agent.load + 1.0 > self.config.capacity as f64 {
            blocked.push(ReasonCode::OverCapacity);
        }

        if request.priority < 1.0
            && self
                .conflicts(state, &bp)
                .iter()
                .any(|f| f.anchor >= self.config.high_anchor_band)
        {
            blocked.push(ReasonCode::ConflictsWithAnchored);
        }

        if self.check_coord(&bp.coord).is_err() {
            blocked.push(ReasonCode::BadTarget);
        }

        if blocked.is_empty() {
            Appropriateness::Ok
        } else {
            Appropriateness::Blocked(blocked)
        }
    }

    /// Assimilates if the gate allows it, otherwise leaves the state as it was.
    pub fn inject_context_aware(
        &self,
        state: &BeliefState,
        ctx: &ContextSnapshot,
        request: &InjectionRequest,
    ) -> Result<InjectionResult> {
        expect_strategy(request, Strategy::ContextAware)?;
        match self.appropriate(state, ctx, request) {
            Appropriateness::Ok => Ok(InjectionResult::Assimilated(self.assimilate(
                state,
                &request.effective_blueprint(),
                request.priority,
            )?)),
            Appropriateness::Blocked(reasons) => Ok(InjectionResult::Deferred(reasons)),
        }
    }

    /// Goals and constraints go to the planning sector. A goal sharing its
    /// topic with an already active goal is elevated above it by one
    /// reinforcement step.
    pub fn inject_goal_oriented(&self, state: &BeliefState, request: &InjectionRequest) -> Result<AssimilationOutcome> {
        expect_strategy(request, Strategy::GoalOriented)?;
        let bp = request.effective_blueprint();
        let mut outcome = self.assimilate(state, &bp, request.priority)?;
        if outcome.rejected || bp.kind != FragmentKind::Goal {
            return Ok(outcome);
        }
        let Some(topic) = bp.assertion.as_ref().map(|a| a.topic.clone()) else {
            return Ok(outcome);
        };
        let admitted = outcome.admitted_ids[0];
        let existing = outcome
            .new_state
            .active()
            .filter(|f| f.id < admitted && f.kind == FragmentKind::Goal)
            .filter(|f| f.topic() == Some(topic.as_str()))
            .map(|f| f.anchor)
            .fold(None, |best: Option<f64>, a| Some(best.map_or(a, |b| b.max(a))));
        if let Some(existing) = existing {
            let goal = outcome.new_state.get_mut(admitted).expect("admitted");
            goal.anchor = goal.anchor.max((existing + self.config.reinforce_step).min(1.0));
            outcome.reason_codes.push(ReasonCode::GoalRefined);
        }
        Ok(outcome)
    }

    /// Reflective prompts go to the reflection sector; on admission a
    /// reflection pass runs and its meta-report joins `elaborated_ids`.
    pub fn inject_reflective(&self, state: &BeliefState, request: &InjectionRequest) -> Result<AssimilationOutcome> {
        expect_strategy(request, Strategy::Reflective)?;
        let bp = request.effective_blueprint();
        let mut outcome = self.assimilate(state, &bp, request.priority)?;
        if outcome.rejected {
            return Ok(outcome);
        }
        let layer = (bp.coord.k + 1).min(self.config.k_max);
        let reflection = self.reflect_at(&outcome.new_state, layer);
        match reflection.meta_report_id {
            Some(id) => {
                outcome.elaborated_ids.push(id);
                outcome.new_state = reflection.new_state;
            }
            None => outcome.reason_codes.extend(reflection.reason_codes),
        }
        Ok(outcome)
    }

    pub fn inject_temporal(&self, state: &BeliefState, request: &InjectionRequest) -> Result<AssimilationOutcome> {
        expect_strategy(request, Strategy::Temporal)?;
        self.assimilate(state, &request.effective_blueprint(), request.priority)
    }

    pub fn inject_sector_targeted(
        &self,
        state: &BeliefState,
        request: &InjectionRequest,
    ) -> Result<AssimilationOutcome> {
        expect_strategy(request, Strategy::SectorTargeted)?;
        self.assimilate(state, &request.effective_blueprint(), request.priority)
    }

    /// Dispatches to the strategy's operation. Naive requests are refused
    /// here; use [`Manifold::inject_naive`].
    pub fn inject(
        &self,
        state: &BeliefState,
        ctx: &ContextSnapshot,
        request: &InjectionRequest,
    ) -> Result<InjectionResult> {
        let assimilated = InjectionResult::Assimilated;
        match request.strategy {
            Strategy::Naive => Err(Error::WrongStrategy {
                expected: "a non-naive strategy".into(),
                actual: "naive".into(),
            }),
            Strategy::Direct => self.inject_direct(state, request).map(assimilated),
            Strategy::ContextAware => self.inject_context_aware(state, ctx, request),
            Strategy::GoalOriented => self.inject_goal_oriented(state, request).map(assimilated),
            Strategy::Reflective => self.inject_reflective(state, request).map(assimilated),
            Strategy::Temporal => self.inject_temporal(state, request).map(assimilated),
            Strategy::SectorTargeted => self.inject_sector_targeted(state, request).map(assimilated),
        }
    }
}

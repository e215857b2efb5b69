//! The assimilation operator: the only admission path into the active state.
//!
//! Steps, in order: conflict scan, conflict resolution against anchors
//! (pinned fragments are inviolable; otherwise strict dominance by more than
//! `authority_epsilon` retracts, anything else rejects the whole input),
//! capacity check, admission, then registered elaboration rules.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fragment::{BeliefFragment, FragmentBlueprint, FragmentId, FragmentKind, Provenance, Status};
use crate::manifold::Manifold;
use crate::metrics::{coherence, load};
use crate::reason::ReasonCode;
use crate::sector::{identifier, Coord};
use crate::state::BeliefState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssimilationOutcome {
    pub new_state: BeliefState,
    pub admitted_ids: Vec<FragmentId>,
    pub retracted_ids: Vec<FragmentId>,
    pub elaborated_ids: Vec<FragmentId>,
    pub rejected: bool,
    pub reason_codes: Vec<ReasonCode>,
}

impl AssimilationOutcome {
    fn rejected(state: &BeliefState, reason: ReasonCode) -> Self {
        Self {
            new_state: state.clone(),
            admitted_ids: Vec::new(),
            retracted_ids: Vec::new(),
            elaborated_ids: Vec::new(),
            rejected: true,
            reason_codes: vec![reason],
        }
    }

    pub fn admitted(&self) -> bool {
        !self.rejected
    }
}

/// [`AssimilationOutcome`] plus the metrics of the would-be state.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowOutcome {
    pub outcome: AssimilationOutcome,
    pub predicted_kappa: f64,
    pub predicted_lambda: f64,
}

type MatchFn = dyn Fn(&BeliefFragment, &BeliefState) -> bool + Send + Sync;
type ProduceFn = dyn Fn(&BeliefFragment) -> Vec<FragmentBlueprint> + Send + Sync;

/// A named elaboration: when `match` holds for a freshly admitted fragment,
/// `produce` derives blueprints that are admitted alongside it.
///
/// Derived blueprints must stay in the parent's sector at a strictly higher
/// abstraction level. Rules fire once per assimilated fragment and never on
/// their own products.
#[derive(Clone)]
pub struct ElaborationRule {
    name: String,
    matches: Arc<MatchFn>,
    produce: Arc<ProduceFn>,
}

impl ElaborationRule {
    pub fn new(
        name: &str,
        matches: impl Fn(&BeliefFragment, &BeliefState) -> bool + Send + Sync + 'static,
        produce: impl Fn(&BeliefFragment) -> Vec<FragmentBlueprint> + Send + Sync + 'static,
    ) -> Result<Self> {
        Ok(Self {
            name: identifier(name)?,
            matches: Arc::new(matches),
            produce: Arc::new(produce),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Goals below the top layer get a subgoal stub one level up.
    pub fn goal_subgoal(k_max: u8) -> Self {
        Self::new(
            "goal_subgoal",
            move |f, _| f.kind == FragmentKind::Goal && f.coord.k < k_max,
            |f| {
                vec![FragmentBlueprint::new(
                    format!("Subgoal stub: {}", f.text),
                    FragmentKind::Goal,
                    Coord::new(f.coord.sector.clone(), f.coord.k + 1),
                )
                .with_anchor(f.anchor)]
            },
        )
        .expect("valid rule name")
    }
}

impl Manifold {
    pub fn register_elaboration_rule(&mut self, rule: ElaborationRule) -> Result<()> {
        if self.rules.iter().any(|r| r.name == rule.name) {
            return Err(Error::DuplicateRule(rule.name));
        }
        self.rules.push(rule);
        Ok(())
    }

    pub fn elaboration_rules(&self) -> impl Iterator<Item = &ElaborationRule> {
        self.rules.iter()
    }

    /// Admits `input` at `authority` if conflict resolution and capacity allow.
    ///
    /// Unknown sectors and out-of-range layers on the input are errors;
    /// everything else is reported in-band. A rejected outcome carries the
    /// input state unchanged.
    pub fn assimilate(
        &self,
        state: &BeliefState,
        input: &FragmentBlueprint,
        authority: f64,
    ) -> Result<AssimilationOutcome> {
        self.check_coord(&input.coord)?;
        input.validate()?;

        let mut next = state.clone();
        let (parent_id, mut retracted) = match self.admit_one(&mut next, input, authority, &[]) {
            Ok(admitted) => admitted,
            Err(reason) => return Ok(AssimilationOutcome::rejected(state, reason)),
        };

        let mut elaborated = Vec::new();
        let mut reason_codes = Vec::new();
        let parent = next.get(parent_id).expect("just admitted").clone();
        for rule in &self.rules {
            if !(rule.matches)(&parent, &next) {
                continue;
            }
            for mut blueprint in (rule.produce)(&parent) {
                blueprint.provenance = Provenance::Elaborated(parent_id);
                blueprint.pinned = false;
                if blueprint.coord.sector != parent.coord.sector
                    || blueprint.coord.k <= parent.coord.k
                    || blueprint.coord.k > self.config.k_max
                {
                    reason_codes.push(ReasonCode::LayerOutOfRange);
                    continue;
                }
                if blueprint.validate().is_err() {
                    continue;
                }
                let mut protected = vec![parent_id];
                protected.extend(&elaborated);
                match self.admit_one(&mut next, &blueprint, authority, &protected) {
                    Ok((id, r)) => {
                        elaborated.push(id);
                        retracted.extend(r);
                    }
                    Err(reason) => reason_codes.push(reason),
                }
            }
        }

        Ok(AssimilationOutcome {
            new_state: next,
            admitted_ids: vec![parent_id],
            retracted_ids: retracted,
            elaborated_ids: elaborated,
            rejected: false,
            reason_codes,
        })
    }

    /// Same as [`Manifold::assimilate`], plus the metrics of the resulting state.
    pub fn shadow_assimilate(
        &self,
        state: &BeliefState,
        input: &FragmentBlueprint,
        authority: f64,
    ) -> Result<ShadowOutcome> {
        let outcome = self.assimilate(state, input, authority)?;
        Ok(ShadowOutcome {
            predicted_kappa: coherence(&outcome.new_state),
            predicted_lambda: load(&outcome.new_state),
            outcome,
        })
    }

    /// Active fragments whose assertion conflicts with the blueprint's.
    pub fn conflicts<'s>(&self, state: &'s BeliefState, input: &FragmentBlueprint) -> Vec<&'s BeliefFragment> {
        match &input.assertion {
            None => Vec::new(),
            Some(a) => state.active().filter(|f| f.conflicts_with(a)).collect(),
        }
    }

    /// Steps 1-4 for a single blueprint. `protected` fragments (admitted
    /// earlier in the same assimilation) can never be retracted by it.
    fn admit_one(
        &self,
        state: &mut BeliefState,
        input: &FragmentBlueprint,
        authority: f64,
        protected: &[FragmentId],
    ) -> std::result::Result<(FragmentId, Vec<FragmentId>), ReasonCode> {
        let conflicts = self.conflicts(state, input);
        if conflicts.iter().any(|f| f.pinned) {
            return Err(ReasonCode::ConflictWithPinned);
        }
        let eps = self.config.authority_epsilon;
        let mut retract = Vec::with_capacity(conflicts.len());
        for f in &conflicts {
            if authority > f.anchor + eps && !protected.contains(&f.id) {
                retract.push(f.id);
            } else {
                // Lower authority and the epsilon tie band both reject.
                return Err(ReasonCode::AuthorityTooLow);
            }
        }
        if state.active_count() - retract.len() + 1 > self.config.capacity {
            return Err(ReasonCode::CapacityExceeded);
        }
        for id in &retract {
            state
                .get_mut(*id)
                .expect("conflict ids come from the state")
                .transition(Status::Retracted);
        }
        Ok((state.insert_unchecked(input), retract))
    }
}

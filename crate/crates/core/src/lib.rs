//! Epistemic belief-state engine.
//!
//! A [`BeliefState`] is a set of [`BeliefFragment`]s placed on a manifold of
//! semantic sectors and abstraction layers. Fragments enter only through
//! assimilation, which resolves conflicts against anchors; they leave through
//! expiry, decay, retirement or sector annihilation. Injections from outside
//! pass authentication, content filters and predictive guardrails first, and
//! every decision lands in an append-only audit log.
//!
//! The state operations on [`Manifold`] are pure functions over snapshots.
//! [`Engine`] wraps one state with the safety pipeline and is the single
//! writer.

pub mod assimilation;
pub mod canonical;
pub mod config;
pub mod engine;
pub mod error;
pub mod fragment;
pub mod injection;
pub mod lifecycle;
pub mod manifold;
pub mod metrics;
pub mod reason;
pub mod safety;
pub mod sector;
pub mod state;

pub use assimilation::{AssimilationOutcome, ElaborationRule, ShadowOutcome};
pub use canonical::canonical_hash;
pub use config::{EngineConfig, GuardrailMode};
pub use engine::{Engine, Metrics, Submission};
pub use error::{Error, Result};
pub use fragment::{
    Assertion, BeliefFragment, FragmentBlueprint, FragmentId, FragmentKind, Polarity, Provenance, Status,
};
pub use injection::{
    AgentContext, AlwaysProceed, Appropriateness, ContextSnapshot, InjectionPolicy, InjectionRequest, InjectionResult,
    PolicyDecision, Strategy,
};
pub use lifecycle::{Annihilation, MetaReport, ReflectOutcome, Retirement, TickReport};
pub use manifold::Manifold;
pub use metrics::{coherence, load};
pub use reason::{AuthFailure, ReasonCode};
pub use sector::{Coord, SectorId, SectorRegistry};
pub use state::BeliefState;

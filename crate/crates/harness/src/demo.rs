//! The self-injection loop: each tick the engine ticks, reflects, and, when
//! the meta-report shows coherence below the floor, submits one correction
//! under the reserved `self` source through the full safety pipeline.

use std::fmt::Write as _;
use std::str::FromStr;

use epistemic_core::safety::{AuditRecord, SourceEntry, SELF_SOURCE};
use epistemic_core::{
    canonical_hash, Assertion, BeliefFragment, BeliefState, Coord, Engine, EngineConfig, FragmentBlueprint,
    FragmentKind, InjectionRequest, Manifold, MetaReport, Strategy,
};

use crate::runner::{metrics_line, METRICS_HEADER};

const SELF_TOKEN: &str = "self-injection";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Seed {
    /// Two fragments asserting opposite things at different anchors.
    Conflict,
    /// Two pinned fragments asserting opposite things.
    PinnedConflict,
    /// Agreeing and unrelated fragments only.
    Healthy,
}

impl FromStr for Seed {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "conflict" => Ok(Seed::Conflict),
            "pinned-conflict" => Ok(Seed::PinnedConflict),
            "healthy" => Ok(Seed::Healthy),
            other => Err(format!("unknown seed {other:?} (conflict, pinned-conflict, healthy)")),
        }
    }
}

impl Seed {
    pub fn blueprints(self) -> Vec<FragmentBlueprint> {
        let obs = |text: &str, a: Assertion, anchor: f64| {
            FragmentBlueprint::new(text, FragmentKind::Observation, Coord::at("perc", 0))
                .with_assertion(a)
                .with_anchor(anchor)
        };
        match self {
            Seed::Conflict => vec![
                obs(
                    "The bridge is passable.",
                    Assertion::positive("bridge", "passable"),
                    0.9,
                ),
                obs("The bridge is closed.", Assertion::negative("bridge", "passable"), 0.4),
            ],
            Seed::PinnedConflict => vec![
                obs(
                    "Always report position.",
                    Assertion::positive("position", "report"),
                    1.0,
                )
                .pinned(),
                obs("Never report position.", Assertion::negative("position", "report"), 1.0).pinned(),
            ],
            Seed::Healthy => vec![
                obs(
                    "The bridge is passable.",
                    Assertion::positive("bridge", "passable"),
                    0.9,
                ),
                obs(
                    "Bridge traffic is light.",
                    Assertion::positive("bridge", "passable"),
                    0.6,
                ),
                obs("Battery is charged.", Assertion::positive("battery", "charged"), 0.7),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoConfig {
    pub ticks: u32,
    pub per_tick_cap: u32,
    pub per_run_cap: u32,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            ticks: 16,
            per_tick_cap: 1,
            per_run_cap: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DemoReport {
    /// Audit records produced by `self` submissions, in order.
    pub self_records: Vec<AuditRecord>,
    /// Self-injections per tick, indexed from tick 1.
    pub attempts_per_tick: Vec<u32>,
    /// `(tick, kappa)` at the end of every tick.
    pub kappa_trace: Vec<(u64, f64)>,
    pub audit: String,
    pub metrics: String,
    pub final_hash: String,
}

impl DemoReport {
    pub fn attempts(&self) -> usize {
        self.self_records.len()
    }

    pub fn admissions(&self) -> usize {
        self.self_records
            .iter()
            .filter(|r| r.decision == epistemic_core::safety::Decision::Admitted)
            .count()
    }

    /// First tick whose end-of-tick coherence is 1.0.
    pub fn converged_at(&self) -> Option<u64> {
        self.kappa_trace.iter().find(|(_, k)| *k == 1.0).map(|(t, _)| *t)
    }
}

/// Lowest-id conflicting pair among active fragments, as (weaker, stronger).
/// On equal anchors the newer fragment counts as weaker.
fn target_pair(state: &BeliefState) -> Option<(&BeliefFragment, &BeliefFragment)> {
    let active: Vec<_> = state.active().filter(|f| f.assertion.is_some()).collect();
    for (i, a) in active.iter().enumerate() {
        for b in &active[i + 1..] {
            if b.conflicts_with(a.assertion.as_ref().expect("filtered")) {
                return Some(if b.anchor <= a.anchor { (b, a) } else { (a, b) });
            }
        }
    }
    None
}

/// Correction negating the weaker side at its own coordinate, with the
/// stronger side's anchor as authority.
fn correction(weaker: &BeliefFragment, stronger: &BeliefFragment) -> InjectionRequest {
    let assertion = weaker
        .assertion
        .as_ref()
        .expect("conflicting fragments carry assertions")
        .negated();
    let bp = FragmentBlueprint::new(
        format!(
            "Self-correction: fragment {} conflicts with fragment {}",
            weaker.id, stronger.id
        ),
        FragmentKind::Correction,
        weaker.coord.clone(),
    )
    .with_assertion(assertion)
    .with_anchor(stronger.anchor);
    InjectionRequest::new(bp, Strategy::Direct, SELF_SOURCE, stronger.anchor)
}

pub fn run_demo(seed: &[FragmentBlueprint], engine_config: EngineConfig, demo: DemoConfig) -> DemoReport {
    let manifold = Manifold::new(engine_config).expect("valid engine config");
    let kappa_floor = manifold.config().kappa_floor;
    let mut engine = Engine::new(manifold);
    engine
        .gate_mut()
        .sources
        .register_self(SourceEntry::new(SELF_TOKEN, 1.0, [Strategy::Direct]))
        .expect("self source");
    for bp in seed {
        engine
            .seed_unchecked(bp)
            .expect("seed fragments use built-in coordinates");
    }

    let mut metrics = format!("{METRICS_HEADER}\n");
    let mut self_records = Vec::new();
    let mut attempts_per_tick = Vec::new();
    let mut kappa_trace = Vec::new();
    for _ in 0..demo.ticks {
        let _ = writeln!(metrics, "{}", metrics_line(&engine));
        engine.tick();
        let reflection = engine.reflect();
        let observed = reflection
            .meta_report_id
            .and_then(|id| engine.state().get(id))
            .and_then(|f| MetaReport::parse(&f.text))
            .unwrap_or(reflection.report);

        let mut this_tick = 0;
        while observed.kappa < kappa_floor
            && this_tick < demo.per_tick_cap
            && (self_records.len() as u32) < demo.per_run_cap
        {
            let Some((weaker, stronger)) = target_pair(engine.state()) else {
                break;
            };
            let request = correction(weaker, stronger);
            self_records.push(engine.submit(&request, SELF_TOKEN).record);
            this_tick += 1;
        }
        attempts_per_tick.push(this_tick);
        kappa_trace.push((engine.state().tick(), engine.metrics().kappa));
    }
    let _ = writeln!(metrics, "{}", metrics_line(&engine));

    let final_hash = canonical_hash(engine.state());
    let mut audit = engine.audit().export();
    let _ = writeln!(audit, "final-hash {final_hash}");
    DemoReport {
        self_records,
        attempts_per_tick,
        kappa_trace,
        audit,
        metrics,
        final_hash,
    }
}

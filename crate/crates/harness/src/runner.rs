//! Applies a parsed scenario to a fresh engine and collects its artifacts.

use std::fmt::Write as _;

use epistemic_core::safety::{FilterRule, SourceEntry, Verdict};
use epistemic_core::{
    canonical_hash, ElaborationRule, Engine, EngineConfig, FragmentBlueprint, FragmentId, InjectionRequest, Manifold,
};
use thiserror::Error;

use crate::scenario::{Cmp, EventKind, FragmentSpec, Metric, ParseError, Scenario};

pub const METRICS_HEADER: &str = "epistemic-metrics v1";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("config: {0}")]
    Config(String),
    #[error("line {line}: {message}")]
    Script { line: usize, message: String },
}

/// Artifacts of one scenario run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Audit export followed by a `final-hash` trailer line.
    pub audit: String,
    pub metrics: String,
    pub final_hash: String,
    pub expect_failures: Vec<String>,
    pub engine: Engine,
}

impl RunOutput {
    pub fn passed(&self) -> bool {
        self.expect_failures.is_empty()
    }
}

/// Resolves the engine config: defaults, then the script's `config` lines,
/// then `overrides` (from a config file), which win.
pub fn resolve_config(scenario: &Scenario, overrides: &[(String, String)]) -> Result<EngineConfig, RunError> {
    let mut config = EngineConfig::default();
    for (key, value) in scenario.config.iter().chain(overrides) {
        config.set(key, value).map_err(|e| RunError::Config(e.to_string()))?;
    }
    config.validate().map_err(|e| RunError::Config(e.to_string()))?;
    Ok(config)
}

/// Flattens a TOML config file into `key=value` overrides.
pub fn config_overrides(toml_text: &str) -> Result<Vec<(String, String)>, RunError> {
    let table: toml::Table = toml_text
        .parse()
        .map_err(|e: toml::de::Error| RunError::Config(e.to_string()))?;
    table
        .into_iter()
        .map(|(key, value)| {
            let value = match value {
                toml::Value::String(s) => s,
                toml::Value::Integer(i) => i.to_string(),
                toml::Value::Float(f) => f.to_string(),
                toml::Value::Boolean(b) => b.to_string(),
                other => return Err(RunError::Config(format!("{key}: unsupported value {other}"))),
            };
            Ok((key, value))
        })
        .collect()
}

/// Builds an engine from the scenario prologue.
pub fn build_engine(scenario: &Scenario, overrides: &[(String, String)]) -> Result<Engine, RunError> {
    let config = resolve_config(scenario, overrides)?;
    let k_max = config.k_max;
    let mut manifold = Manifold::new(config).map_err(|e| RunError::Config(e.to_string()))?;
    for name in &scenario.sectors {
        manifold
            .register_sector(name)
            .map_err(|e| RunError::Config(e.to_string()))?;
    }
    for rule in &scenario.elaborations {
        let rule = match rule.as_str() {
            "goal_subgoal" => ElaborationRule::goal_subgoal(k_max),
            other => return Err(RunError::Config(format!("unknown elaboration rule {other:?}"))),
        };
        manifold
            .register_elaboration_rule(rule)
            .map_err(|e| RunError::Config(e.to_string()))?;
    }
    let mut engine = Engine::new(manifold);
    let gate = engine.gate_mut();
    for s in &scenario.sources {
        let mut entry = SourceEntry::new(&s.token, s.max_priority, s.strategies.iter().copied());
        entry.review = s.review;
        gate.sources
            .register(&s.id, entry)
            .map_err(|e| RunError::Config(e.to_string()))?;
    }
    for f in &scenario.filters {
        let rule =
            FilterRule::new(&f.rule_id, f.mode, f.matcher.clone()).map_err(|e| RunError::Config(e.to_string()))?;
        gate.filters.add(rule).map_err(|e| RunError::Config(e.to_string()))?;
    }
    Ok(engine)
}

pub(crate) fn blueprint(spec: &FragmentSpec, default_anchor: f64) -> FragmentBlueprint {
    let mut bp = FragmentBlueprint::new(spec.text.clone(), spec.kind, spec.coord.clone())
        .with_anchor(spec.anchor.unwrap_or(default_anchor));
    if let Some(a) = &spec.assertion {
        bp = bp.with_assertion(a.clone());
    }
    if spec.pinned {
        bp = bp.pinned();
    }
    if spec.fast_decay {
        bp = bp.with_fast_decay();
    }
    bp
}

pub(crate) fn metrics_line(engine: &Engine) -> String {
    let m = engine.metrics();
    format!(
        "{} {:.6} {:.6} {} {}",
        m.tick, m.kappa, m.lambda, m.active_count, m.pending_count
    )
}

/// Decimal comparison after rounding both sides to 6 places.
fn compare(actual: f64, cmp: Cmp, expected: f64) -> bool {
    let (a, e) = ((actual * 1e6).round() as i64, (expected * 1e6).round() as i64);
    match cmp {
        Cmp::Le => a <= e,
        Cmp::Ge => a >= e,
        Cmp::Eq => a == e,
    }
}

pub fn run(scenario: &Scenario, overrides: &[(String, String)]) -> Result<RunOutput, RunError> {
    let mut engine = build_engine(scenario, overrides)?;
    let mut metrics = format!("{METRICS_HEADER}\n");
    let mut failures = Vec::new();

    let advance = |engine: &mut Engine, metrics: &mut String| {
        let _ = writeln!(metrics, "{}", metrics_line(engine));
        engine.tick();
    };

    for event in &scenario.events {
        let line = event.line;
        if event.at_tick < engine.state().tick() {
            return Err(RunError::Script {
                line,
                message: format!(
                    "event at tick {} but the engine is already at tick {}",
                    event.at_tick,
                    engine.state().tick()
                ),
            });
        }
        while engine.state().tick() < event.at_tick {
            advance(&mut engine, &mut metrics);
        }
        let mut fail = |what: &str, e: epistemic_core::Error| failures.push(format!("line {line}: {what}: {e}"));
        match &event.kind {
            EventKind::Perceive(spec) => {
                let mut bp = blueprint(spec, 0.5);
                bp.ttl = spec.ttl;
                engine.perceive(&bp);
            }
            EventKind::Inject {
                fragment,
                strategy,
                source,
                token,
                priority,
                target,
            } => {
                let mut request = InjectionRequest::new(blueprint(fragment, *priority), *strategy, source, *priority);
                request.ttl = fragment.ttl;
                request.target = target.clone();
                engine.submit(&request, token);
            }
            EventKind::Tick { count } => {
                for _ in 0..*count {
                    advance(&mut engine, &mut metrics);
                }
            }
            EventKind::Reinforce { id } => {
                if let Err(e) = engine.reinforce(FragmentId(*id)) {
                    fail("reinforce", e);
                }
            }
            EventKind::Retire { id, actor, token } => {
                if let Err(e) = engine.retire(FragmentId(*id), actor, token) {
                    fail("retire", e);
                }
            }
            EventKind::Annihilate { sector, actor, token } => {
                if let Err(e) = engine.annihilate_sector(sector, actor, token) {
                    fail("annihilate", e);
                }
            }
            EventKind::Reflect => {
                engine.reflect();
            }
            EventKind::SetEnv { key, value } => engine.set_env(key, value),
            EventKind::Review {
                id,
                approve,
                actor,
                token,
            } => {
                let verdict = if *approve { Verdict::Approve } else { Verdict::Reject };
                if let Err(e) = engine.resolve_pending(*id, verdict, actor, token) {
                    fail("review", e);
                }
            }
            EventKind::Expect { metric, cmp, value } => {
                let m = engine.metrics();
                let actual = match metric {
                    Metric::Kappa => m.kappa,
                    Metric::Lambda => m.lambda,
                    Metric::ActiveCount => m.active_count as f64,
                    Metric::PendingCount => m.pending_count as f64,
                };
                if !compare(actual, *cmp, *value) {
                    failures.push(format!(
                        "line {line}: expected {metric} {cmp} {value}, got {actual:.6} at tick {}",
                        m.tick
                    ));
                }
            }
        }
    }
    let _ = writeln!(metrics, "{}", metrics_line(&engine));

    let final_hash = canonical_hash(engine.state());
    let mut audit = engine.audit().export();
    let _ = writeln!(audit, "final-hash {final_hash}");
    Ok(RunOutput {
        audit,
        metrics,
        final_hash,
        expect_failures: failures,
        engine,
    })
}

pub fn run_script(text: &str, overrides: &[(String, String)]) -> Result<RunOutput, RunError> {
    run(&crate::scenario::parse(text)?, overrides)
}

/// First differing line between a recorded audit file and a fresh run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub line: usize,
    pub recorded: Option<String>,
    pub replayed: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayReport {
    pub matches: bool,
    pub first_mismatch: Option<Mismatch>,
}

/// Re-runs the scenario and compares the audit bytes (which end with the
/// final hash) against `recorded`.
pub fn replay_check(
    scenario: &Scenario,
    overrides: &[(String, String)],
    recorded: &str,
) -> Result<ReplayReport, RunError> {
    let replayed = run(scenario, overrides)?.audit;
    if replayed == recorded {
        return Ok(ReplayReport {
            matches: true,
            first_mismatch: None,
        });
    }
    let (mut a, mut b) = (recorded.split('\n'), replayed.split('\n'));
    let mut line = 1;
    let first_mismatch = loop {
        match (a.next(), b.next()) {
            (x, y) if x == y && x.is_some() => line += 1,
            (x, y) => {
                break Mismatch {
                    line,
                    recorded: x.map(str::to_string),
                    replayed: y.map(str::to_string),
                }
            }
        }
    };
    Ok(ReplayReport {
        matches: false,
        first_mismatch: Some(first_mismatch),
    })
}

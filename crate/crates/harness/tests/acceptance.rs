//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Randomized cases use fixed ChaCha seeds.

use std::collections::BTreeSet;
use std::process::ExitCode;

use epistemic_core::safety::{FilterRule, Matcher, SourceEntry};
use epistemic_core::{
    canonical_hash, coherence, load, AgentContext, Appropriateness, Assertion, BeliefFragment, BeliefState,
    ContextSnapshot, Coord, Engine, EngineConfig, FragmentBlueprint, FragmentId, FragmentKind, InjectionRequest,
    InjectionResult, Manifold, Polarity, Provenance, ReasonCode, Status, Strategy,
};
use epistemic_harness::{replay_check, run_demo, run_script, DemoConfig, Seed, CORPUS};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
/// Plain-Rust reading of one filter rule.
type Hit = Box<dyn Fn(&BeliefFragment) -> bool>;
type Criterion = (&'static str, fn() -> Outcome);

const TOPICS: [&str; 4] = ["route_a", "sensor_x", "policy", "bridge"];
const PREDICATES: [&str; 2] = ["safe", "ok"];
const SECTORS: [&str; 4] = ["perc", "plan", "refl", "ethics"];
const KINDS: [FragmentKind; 6] = [
    FragmentKind::Observation,
    FragmentKind::Goal,
    FragmentKind::Constraint,
    FragmentKind::Correction,
    FragmentKind::Heuristic,
    FragmentKind::ReflectivePrompt,
];

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Pairwise coherence, written out from the definition.
fn coherence_oracle(state: &BeliefState) -> f64 {
    let asserting: Vec<&BeliefFragment> = state
        .fragments()
        .filter(|f| f.status == Status::Active && f.assertion.is_some())
        .collect();
    let (mut comparable, mut conflicting) = (0u32, 0u32);
    for (i, a) in asserting.iter().enumerate() {
        for b in &asserting[i + 1..] {
            let (x, y) = (a.assertion.as_ref().unwrap(), b.assertion.as_ref().unwrap());
            if x.topic == y.topic && x.predicate == y.predicate {
                comparable += 1;
                if x.polarity != y.polarity {
                    conflicting += 1;
                }
            }
        }
    }
    if comparable == 0 {
        1.0
    } else {
        1.0 - f64::from(conflicting) / f64::from(comparable)
    }
}

fn manifold(config: EngineConfig) -> Manifold {
    let mut m = Manifold::new(config).expect("valid config");
    m.register_sector("ethics").expect("sector");
    m
}

fn random_assertion(rng: &mut ChaCha8Rng) -> Assertion {
    let (t, p) = (*TOPICS.choose(rng).unwrap(), *PREDICATES.choose(rng).unwrap());
    if rng.random_bool(0.5) {
        Assertion::positive(t, p)
    } else {
        Assertion::negative(t, p)
    }
}

fn random_blueprint(rng: &mut ChaCha8Rng, k_max: u8) -> FragmentBlueprint {
    let kind = *KINDS.choose(rng).unwrap();
    let coord = Coord::at(SECTORS.choose(rng).unwrap(), rng.random_range(0..=k_max));
    let mut bp = FragmentBlueprint::new(format!("{kind} fragment"), kind, coord)
        .with_anchor((rng.random_range(5..=100) as f64) / 100.0);
    if rng.random_bool(0.8) {
        bp = bp.with_assertion(random_assertion(rng));
    }
    if rng.random_bool(0.1) {
        bp = bp.pinned();
    }
    bp
}

fn random_state(rng: &mut ChaCha8Rng, max: usize, k_max: u8) -> BeliefState {
    let mut state = BeliefState::vacuum();
    for _ in 0..rng.random_range(0..=max) {
        state.insert_unchecked(&random_blueprint(rng, k_max));
    }
    state
}

/// 3 authority relations × 3 anchor bands on a two-fragment state.
fn resolution_table() -> Outcome {
    let m = manifold(EngineConfig::default());
    let eps = m.config().authority_epsilon;
    let bands: [(&str, f64, bool); 3] = [("low", 0.3, false), ("high", 0.8, false), ("pinned", 0.8, true)];
    let relations: [(&str, f64); 3] = [("<", -0.2), ("≈", eps * 0.6), (">", 2.0 * eps)];
    let mut matched = 0;
    for (band, anchor, pinned) in bands {
        for (rel, offset) in relations {
            let mut existing = FragmentBlueprint::new("route is safe", FragmentKind::Observation, Coord::at("perc", 0))
                .with_assertion(Assertion::positive("route_a", "safe"))
                .with_anchor(anchor);
            if pinned {
                existing = existing.pinned();
            }
            let mut state = BeliefState::vacuum();
            let old = state.insert_unchecked(&existing);
            state.insert_unchecked(
                &FragmentBlueprint::new("battery charged", FragmentKind::Observation, Coord::at("perc", 0))
                    .with_assertion(Assertion::positive("battery", "charged"))
                    .with_anchor(0.6),
            );
            let authority = anchor + offset;
            let input = FragmentBlueprint::new("route is unsafe", FragmentKind::Observation, Coord::at("perc", 0))
                .with_assertion(Assertion::negative("route_a", "safe"))
                .with_anchor(authority);
            let out = m.assimilate(&state, &input, authority).map_err(|e| e.to_string())?;

            let (want_admit, want_reason) = if pinned {
                (false, Some(ReasonCode::ConflictWithPinned))
            } else if authority > anchor + eps {
                (true, None)
            } else {
                (false, Some(ReasonCode::AuthorityTooLow))
            };
            let case = format!("{rel} × {band}");
            ensure(out.admitted() == want_admit, || {
                format!("{case}: admitted={}", out.admitted())
            })?;
            if want_admit {
                ensure(out.retracted_ids == vec![old], || {
                    format!("{case}: retracted {:?}", out.retracted_ids)
                })?;
                ensure(
                    out.new_state.get(old).map(|f| f.status) == Some(Status::Retracted),
                    || format!("{case}: old fragment not retracted"),
                )?;
                ensure(out.new_state.active_count() == 2, || format!("{case}: active count"))?;
            } else {
                ensure(out.reason_codes == want_reason.into_iter().collect::<Vec<_>>(), || {
                    format!("{case}: reasons {:?}", out.reason_codes)
                })?;
                ensure(canonical_hash(&out.new_state) == canonical_hash(&state), || {
                    format!("{case}: rejected outcome changed the state")
                })?;
            }
            matched += 1;
        }
    }
    Ok(format!("{matched}/9 cells match"))
}

/// Independent reading of the context-aware gate.
fn appropriate_oracle(
    m: &Manifold,
    state: &BeliefState,
    ctx: &ContextSnapshot,
    bp: &FragmentBlueprint,
    priority: f64,
) -> bool {
    let relevant = matches!(
        bp.kind,
        FragmentKind::Constraint | FragmentKind::Correction | FragmentKind::ReflectivePrompt
    ) || bp
        .assertion
        .as_ref()
        .is_some_and(|a| ctx.agent.active_goal_topics.contains(&a.topic));
    let headroom = ctx.agent.load + 1.0 <= m.config().capacity as f64;
    let anchored_conflict = priority < 1.0
        && bp.assertion.as_ref().is_some_and(|a| {
            state.fragments().any(|f| {
                f.status == Status::Active
                    && f.anchor >= 0.75
                    && f.assertion
                        .as_ref()
                        .is_some_and(|b| b.topic == a.topic && b.predicate == a.predicate && b.polarity != a.polarity)
            })
        });
    let target_ok = m.sectors().contains(&bp.coord.sector) && bp.coord.k <= m.config().k_max;
    relevant && headroom && !anchored_conflict && target_ok
}

fn branch_equivalence() -> Outcome {
    let m = manifold(EngineConfig {
        capacity: 8,
        ..EngineConfig::default()
    });
    let k_max = m.config().k_max;
    let mut rng = ChaCha8Rng::seed_from_u64(0x0b1a_c0de);
    let (mut ok_cases, mut blocked_cases) = (0, 0);
    for case in 0..200 {
        let state = random_state(&mut rng, 8, k_max);
        let ctx = ContextSnapshot {
            agent: AgentContext {
                active_goal_topics: TOPICS
                    .iter()
                    .filter(|_| rng.random_bool(0.4))
                    .map(|t| t.to_string())
                    .collect::<BTreeSet<_>>(),
                load: rng.random_range(0..=8) as f64,
                kappa: coherence(&state),
            },
            env: Default::default(),
        };
        let mut bp = random_blueprint(&mut rng, k_max);
        bp.pinned = false;
        if rng.random_bool(0.1) {
            bp.coord = if rng.random_bool(0.5) {
                Coord::at("ghost", 0)
            } else {
                Coord::at("perc", k_max + 1)
            };
        }
        let priority = if rng.random_bool(0.15) {
            1.0
        } else {
            (rng.random_range(5..=99) as f64) / 100.0
        };
        let aware = InjectionRequest::new(bp.clone(), Strategy::ContextAware, "fuzz", priority);
        let direct = InjectionRequest::new(bp.clone(), Strategy::Direct, "fuzz", priority);

        let expect_ok = appropriate_oracle(&m, &state, &ctx, &aware.effective_blueprint(), priority);
        let gate = m.appropriate(&state, &ctx, &aware);
        ensure((gate == Appropriateness::Ok) == expect_ok, || {
            format!("case {case}: gate {gate:?}, oracle ok={expect_ok}")
        })?;
        let result = m
            .inject_context_aware(&state, &ctx, &aware)
            .map_err(|e| format!("case {case}: {e}"))?;
        if expect_ok {
            let direct_state = m
                .inject_direct(&state, &direct)
                .map_err(|e| format!("case {case}: direct {e}"))?
                .new_state;
            ensure(
                canonical_hash(result.new_state(&state)) == canonical_hash(&direct_state),
                || format!("case {case}: context-aware and direct diverge"),
            )?;
            ok_cases += 1;
        } else {
            ensure(matches!(result, InjectionResult::Deferred(_)), || {
                format!("case {case}: blocked request was not deferred")
            })?;
            ensure(
                canonical_hash(result.new_state(&state)) == canonical_hash(&state),
                || format!("case {case}: blocked request changed the state"),
            )?;
            blocked_cases += 1;
        }
    }
    ensure(ok_cases > 20 && blocked_cases > 20, || {
        format!("degenerate sample: {ok_cases} ok, {blocked_cases} blocked")
    })?;
    Ok(format!("200/200 ({ok_cases} appropriate, {blocked_cases} blocked)"))
}

fn fuzz_engine(config: EngineConfig, rng: &mut ChaCha8Rng) -> Engine {
    let k_max = config.k_max;
    let mut engine = Engine::new(manifold(config));
    engine
        .gate_mut()
        .sources
        .register(
            "fuzz",
            SourceEntry::new(
                "fuzz-token",
                1.0,
                Strategy::ALL.into_iter().filter(|s| *s != Strategy::Naive),
            ),
        )
        .expect("source");
    engine
        .restore(random_state(rng, 8, k_max))
        .expect("fresh engine accepts a valid state");
    engine
}

fn shadow_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x005a_d00e);
    let config = EngineConfig {
        kappa_floor: 0.0,
        kappa_drop_max: 1.0,
        ..EngineConfig::default()
    };
    let mut engine = fuzz_engine(config, &mut rng);
    let mut admitted = 0;
    for n in 0..200 {
        let mut bp = random_blueprint(&mut rng, 4);
        bp.pinned = rng.random_bool(0.05);
        let priority = (rng.random_range(5..=100) as f64) / 100.0;
        let request = InjectionRequest::new(bp, Strategy::Direct, "fuzz", priority);
        let shadow = engine
            .manifold()
            .shadow_assimilate(engine.state(), &request.effective_blueprint(), priority)
            .map_err(|e| format!("submission {n}: {e}"))?;
        let record = engine.submit(&request, "fuzz-token").record;
        if shadow.outcome.admitted() {
            let actual = engine.state();
            let (kappa, lambda) = (coherence_oracle(actual), actual.active_count() as f64);
            ensure(
                shadow.predicted_kappa == kappa && shadow.predicted_lambda == lambda,
                || {
                    format!(
                        "submission {n}: predicted ({}, {}), actual ({kappa}, {lambda})",
                        shadow.predicted_kappa, shadow.predicted_lambda
                    )
                },
            )?;
            ensure(record.kappa_after == kappa && record.lambda_after == lambda, || {
                format!("submission {n}: audit record disagrees with the state")
            })?;
            admitted += 1;
        }
        if rng.random_bool(0.2) {
            engine.tick();
        }
    }
    ensure(admitted >= 50, || format!("only {admitted} admissions"))?;
    Ok(format!("200 submissions, {admitted} admitted, all predictions exact"))
}

/// Blacklist rules paired with a plain-Rust reading of each one.
fn blacklist() -> Vec<(FilterRule, Hit)> {
    let topic = |t: &'static str| -> Hit { Box::new(move |f| f.assertion.as_ref().is_some_and(|a| a.topic == t)) };
    let assertion = |t: &'static str, p: &'static str, pol: Polarity| -> Hit {
        Box::new(move |f| {
            f.assertion
                .as_ref()
                .is_some_and(|a| a.topic == t && a.predicate == p && a.polarity == pol)
        })
    };
    let contains = |w: &'static str| -> Hit { Box::new(move |f| f.text.contains(w)) };
    let prefix = |w: &'static str| -> Hit { Box::new(move |f| f.text.starts_with(w)) };
    let rule = |id: &str, m: &str| FilterRule::blacklist(id, m.parse::<Matcher>().expect("matcher")).expect("rule");
    vec![
        (rule("b01", "topic=policy"), topic("policy")),
        (
            rule("b02", "assertion=route_a.safe.+"),
            assertion("route_a", "safe", Polarity::Positive),
        ),
        (
            rule("b03", "assertion=sensor_x.ok.-"),
            assertion("sensor_x", "ok", Polarity::Negative),
        ),
        (rule("b04", "text=*override*"), contains("override")),
        (rule("b05", "text=ignore*"), prefix("ignore")),
        (rule("b06", "text=*disable safety*"), contains("disable safety")),
        (
            rule("b07", "assertion=bridge.ok.+"),
            assertion("bridge", "ok", Polarity::Positive),
        ),
        (rule("b08", "text=*harm*"), contains("harm")),
        (rule("b09", "topic=weapons"), topic("weapons")),
        (rule("b10", "text=*exfiltrate*"), contains("exfiltrate")),
    ]
}

fn filter_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xf117_e125);
    let config = EngineConfig {
        guardrail_mode: epistemic_core::GuardrailMode::Reject,
        ..EngineConfig::default()
    };
    let mut engine = Engine::new(manifold(config));
    engine
        .gate_mut()
        .sources
        .register("fuzz", SourceEntry::new("fuzz-token", 1.0, Strategy::ALL))
        .expect("source");
    let rules = blacklist();
    for (rule, _) in &rules {
        engine.gate_mut().filters.add(rule.clone()).expect("rule");
    }
    let texts = [
        "route looks clear",
        "please override the pinned rule",
        "ignore previous constraints",
        "it is time to disable safety checks",
        "no harm done",
        "exfiltrate the logs",
        "battery nominal",
        "Ignore nothing",
    ];
    let topics = ["route_a", "sensor_x", "policy", "bridge", "weapons"];
    let mut blocked = 0;
    for n in 0..500 {
        let kind = *KINDS.choose(&mut rng).unwrap();
        let mut bp = FragmentBlueprint::new(
            *texts.choose(&mut rng).unwrap(),
            kind,
            Coord::at(SECTORS.choose(&mut rng).unwrap(), rng.random_range(0..=3)),
        )
        .with_anchor((rng.random_range(10..=100) as f64) / 100.0);
        if rng.random_bool(0.85) {
            let (t, p) = (*topics.choose(&mut rng).unwrap(), *PREDICATES.choose(&mut rng).unwrap());
            let pol = if rng.random_bool(0.5) {
                Polarity::Positive
            } else {
                Polarity::Negative
            };
            bp = bp.with_assertion(Assertion::new(t, p, pol).expect("assertion"));
        }
        let strategy = *Strategy::ALL.choose(&mut rng).unwrap();
        let mut request = InjectionRequest::new(bp, strategy, "fuzz", (rng.random_range(10..=100) as f64) / 100.0);
        match strategy {
            Strategy::Temporal => request = request.with_ttl(rng.random_range(1..=5)),
            Strategy::SectorTargeted => request = request.with_target(Coord::at("ethics", rng.random_range(0..=3))),
            _ => {}
        }
        let record = engine.submit(&request, "fuzz-token").record;
        if record
            .reason_codes
            .iter()
            .any(|r| r.to_string().starts_with("blacklist"))
        {
            blocked += 1;
        }
        if rng.random_bool(0.1) {
            engine.tick();
        }
        let leaked = engine
            .state()
            .active()
            .filter(|f| matches!(f.provenance, Provenance::Injected(_)))
            .find_map(|f| {
                rules
                    .iter()
                    .find(|(_, hit)| hit(f))
                    .map(|(r, _)| (f.id, r.rule_id.clone()))
            });
        ensure(leaked.is_none(), || {
            format!(
                "request {n}: active fragment {:?} matches {:?}",
                leaked.as_ref().unwrap().0,
                leaked.as_ref().unwrap().1
            )
        })?;
    }
    let naive = engine
        .audit()
        .records()
        .iter()
        .filter(|r| r.request_summary.strategy == "naive")
        .count();
    ensure(blocked > 100, || format!("only {blocked} requests were blacklisted"))?;
    Ok(format!(
        "500 requests, {blocked} blacklisted, {naive} naive refused, 0 blacklisted fragments active"
    ))
}

fn nullification_tick_oracle(a0: f64, delta: f64, theta: f64) -> u64 {
    let (mut a, mut t) = (a0, 0);
    loop {
        t += 1;
        a *= delta;
        if a < theta {
            return t;
        }
    }
}

fn lifecycle_arithmetic() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x11fe_c7c1e);
    for case in 0..100 {
        let delta = rng.random_range(0.5..0.99);
        let theta = rng.random_range(0.01..0.5);
        let a0 = rng.random_range(theta + 0.01..=1.0);
        let m = Manifold::new(EngineConfig {
            decay_rate: delta,
            null_threshold: theta,
            ..EngineConfig::default()
        })
        .map_err(|e| e.to_string())?;
        let mut state = BeliefState::vacuum();
        let id = state.insert_unchecked(
            &FragmentBlueprint::new("decaying", FragmentKind::Heuristic, Coord::at("plan", 0)).with_anchor(a0),
        );
        let expected = nullification_tick_oracle(a0, delta, theta);
        let actual = loop {
            let (next, report) = m.tick(&state);
            state = next;
            if report.nullified_ids.contains(&id) {
                break report.tick;
            }
            ensure(report.tick <= expected, || {
                format!("case {case} (a0={a0}, δ={delta}, θ={theta}): still active after tick {expected}")
            })?;
        };
        ensure(actual == expected, || {
            format!("case {case} (a0={a0}, δ={delta}, θ={theta}): nullified at {actual}, oracle {expected}")
        })?;
    }

    let m = Manifold::default();
    for ttl in [1u32, 3, 10] {
        for born in [0u64, 4] {
            let mut state = BeliefState::vacuum();
            for _ in 0..born {
                state = m.tick(&state).0;
            }
            let bp = FragmentBlueprint::new("scaffold", FragmentKind::Heuristic, Coord::at("plan", 0))
                .with_anchor(1.0)
                .with_ttl(ttl);
            let out = m.assimilate(&state, &bp, 1.0).map_err(|e| e.to_string())?;
            let id: FragmentId = out.admitted_ids[0];
            state = out.new_state;
            // Active through tick born + ttl, expired on the tick after.
            while state.tick() <= born + u64::from(ttl) + 1 {
                let status = state.get(id).unwrap().status;
                let want = if state.tick() <= born + u64::from(ttl) {
                    Status::Active
                } else {
                    Status::Expired
                };
                ensure(status == want, || {
                    format!(
                        "ttl {ttl} born {born}: {status:?} at tick {}, expected {want:?}",
                        state.tick()
                    )
                })?;
                state = m.tick(&state).0;
            }
        }
    }
    Ok("100/100 nullification ticks match; ttl 1, 3, 10 expire on schedule".into())
}

fn determinism() -> Outcome {
    let mut summary = Vec::new();
    for (name, text) in CORPUS {
        let runs = (0..3)
            .map(|_| run_script(text, &[]).map_err(|e| format!("{name}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        for run in &runs {
            ensure(run.passed(), || format!("{name}: {:?}", run.expect_failures))?;
        }
        ensure(runs.iter().all(|r| r.audit == runs[0].audit), || {
            format!("{name}: audit bytes differ")
        })?;
        ensure(runs.iter().all(|r| r.final_hash == runs[0].final_hash), || {
            format!("{name}: final hashes differ")
        })?;
        let scenario = epistemic_harness::parse(text).map_err(|e| e.to_string())?;
        let replay = replay_check(&scenario, &[], &runs[0].audit).map_err(|e| e.to_string())?;
        ensure(replay.matches, || {
            format!("{name}: replay mismatch {:?}", replay.first_mismatch)
        })?;
        summary.push(format!("{name}={}", &runs[0].final_hash[..12]));
    }
    Ok(summary.join(" "))
}

fn self_records(audit: &str) -> Vec<&str> {
    audit
        .lines()
        .filter(|l| l.split('\t').nth(2).is_some_and(|s| s.starts_with("self,")))
        .collect()
}

fn self_injection_demo() -> Outcome {
    let conflict = run_demo(
        &Seed::Conflict.blueprints(),
        EngineConfig::default(),
        DemoConfig::default(),
    );
    let converged = conflict.converged_at();
    ensure(converged.is_some_and(|t| t <= 2), || {
        format!("conflict seed converged at {converged:?}")
    })?;
    let records = self_records(&conflict.audit);
    ensure(records.len() == 1, || {
        format!("conflict seed: {} self records", records.len())
    })?;
    ensure(records[0].split('\t').nth(3) == Some("admitted"), || {
        "conflict seed: correction not admitted".into()
    })?;
    ensure(
        conflict
            .kappa_trace
            .iter()
            .skip_while(|(_, k)| *k < 1.0)
            .all(|(_, k)| *k == 1.0),
        || "conflict seed: coherence regressed".into(),
    )?;

    let pinned = run_demo(
        &Seed::PinnedConflict.blueprints(),
        EngineConfig::default(),
        DemoConfig::default(),
    );
    let records = self_records(&pinned.audit);
    ensure(records.len() == 10, || {
        format!("pinned seed: {} self records", records.len())
    })?;
    let admitted = records
        .iter()
        .filter(|l| l.split('\t').nth(3) == Some("admitted"))
        .count();
    ensure(admitted == 0, || format!("pinned seed: {admitted} admissions"))?;
    ensure(pinned.attempts_per_tick.iter().all(|n| *n <= 1), || {
        "more than one attempt in a tick".into()
    })?;

    let healthy = run_demo(
        &Seed::Healthy.blueprints(),
        EngineConfig::default(),
        DemoConfig::default(),
    );
    ensure(self_records(&healthy.audit).is_empty(), || {
        "healthy seed self-injected".into()
    })?;
    Ok(format!(
        "conflict: κ=1.0 at tick {}, 1 self record; pinned-conflict: 10 attempts, 0 admitted; healthy: 0",
        converged.unwrap()
    ))
}

/// Witness: `sensor_x.ok` perceived as true at 0.3, then contradicted at 0.9.
/// Naive insertion keeps both and the pair is fully incoherent; direct
/// injection retracts the weaker belief.
fn naive_vs_direct() -> Outcome {
    let m = manifold(EngineConfig {
        allow_naive: true,
        ..EngineConfig::default()
    });
    let fragments = [
        (Assertion::positive("sensor_x", "ok"), 0.3),
        (Assertion::negative("sensor_x", "ok"), 0.9),
    ];
    let (mut naive, mut direct, mut retracted) = (BeliefState::vacuum(), BeliefState::vacuum(), Vec::new());
    for (assertion, priority) in fragments {
        let bp = FragmentBlueprint::new("sensor_x reading", FragmentKind::Observation, Coord::at("perc", 0))
            .with_assertion(assertion)
            .with_anchor(priority);
        naive = m
            .inject_naive(
                &naive,
                &InjectionRequest::new(bp.clone(), Strategy::Naive, "sim", priority),
            )
            .map_err(|e| e.to_string())?;
        let out = m
            .inject_direct(&direct, &InjectionRequest::new(bp, Strategy::Direct, "sim", priority))
            .map_err(|e| e.to_string())?;
        retracted.extend(out.retracted_ids);
        direct = out.new_state;
    }
    let (kn, kd) = (coherence(&naive), coherence(&direct));
    ensure(kn == 0.0 && coherence_oracle(&naive) == 0.0, || format!("naive κ={kn}"))?;
    ensure(kd == 1.0 && coherence_oracle(&direct) == 1.0, || {
        format!("direct κ={kd}")
    })?;
    ensure(retracted.len() == 1, || format!("{} retractions", retracted.len()))?;
    ensure(load(&naive) == 2.0 && load(&direct) == 1.0, || "unexpected load".into())?;
    Ok("naive κ=0.0 (2 active), direct κ=1.0 (1 retraction)".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("conflict-resolution table", resolution_table),
        ("branch equivalence", branch_equivalence),
        ("shadow oracle", shadow_oracle),
        ("filter soundness", filter_soundness),
        ("lifecycle arithmetic", lifecycle_arithmetic),
        ("determinism and replay", determinism),
        ("self-injection demo", self_injection_demo),
        ("naive-vs-direct witness", naive_vs_direct),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

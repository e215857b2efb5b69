use epistemic_core::safety::AUDIT_HEADER;
use epistemic_core::{canonical_hash, BeliefState, EngineConfig};
use epistemic_harness::{parse, replay_check, run, run_demo, run_script, DemoConfig, RunError, Seed, CORPUS};

#[test]
fn corpus_scenarios_meet_their_expectations() {
    for (name, text) in CORPUS {
        let out = run_script(text, &[]).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(out.passed(), "{name}: {:?}", out.expect_failures);
        assert!(out.audit.starts_with(AUDIT_HEADER), "{name}");
        assert!(
            out.audit.ends_with(&format!("final-hash {}\n", out.final_hash)),
            "{name}"
        );
    }
}

#[test]
fn empty_scenario_ends_in_the_vacuum() {
    let out = run_script("", &[]).unwrap();
    assert_eq!(out.final_hash, canonical_hash(&BeliefState::vacuum()));
    assert_eq!(
        out.final_hash,
        "4d5eddd6c2330881e68526d5b0ea56bcae3a2c3e5ea9caa9d08fdb77e8ee583c"
    );
    assert!(out.engine.audit().is_empty());
    assert_eq!(out.audit.lines().count(), 2);
}

#[test]
fn metrics_trace_has_one_line_per_tick_plus_final() {
    let out = run_script("@3 expect metric=lambda cmp== value=0\n", &[]).unwrap();
    let lines: Vec<_> = out.metrics.lines().collect();
    assert_eq!(lines[0], "epistemic-metrics v1");
    assert_eq!(
        &lines[1..],
        [
            "0 1.000000 0.000000 0 0",
            "1 1.000000 0.000000 0 0",
            "2 1.000000 0.000000 0 0",
            "3 1.000000 0.000000 0 0"
        ]
    );
}

#[test]
fn failed_expectation_is_reported_with_its_line() {
    let out = run_script("# comment\n@0 expect metric=active_count cmp== value=1\n", &[]).unwrap();
    assert_eq!(out.expect_failures.len(), 1);
    assert!(
        out.expect_failures[0].starts_with("line 2:"),
        "{}",
        out.expect_failures[0]
    );
}

#[test]
fn replay_detects_config_drift_and_edits() {
    let (_, text) = CORPUS.iter().find(|(n, _)| *n == "bootstrap").unwrap();
    let scenario = parse(text).unwrap();
    let recorded = run(&scenario, &[]).unwrap().audit;
    assert!(replay_check(&scenario, &[], &recorded).unwrap().matches);

    let drift = vec![("decay_rate".to_string(), "0.9".to_string())];
    let report = replay_check(&scenario, &drift, &recorded).unwrap();
    assert!(!report.matches);
    assert!(report.first_mismatch.is_some());

    let edited = recorded.replacen("admitted", "rejected", 1);
    let report = replay_check(&scenario, &[], &edited).unwrap();
    let mismatch = report.first_mismatch.unwrap();
    assert_eq!(mismatch.line, 2);
    assert!(mismatch.recorded.unwrap().contains("rejected"));

    let truncated: String = recorded.lines().take(2).map(|l| format!("{l}\n")).collect();
    let mismatch = replay_check(&scenario, &[], &truncated)
        .unwrap()
        .first_mismatch
        .unwrap();
    assert_eq!(mismatch.line, 3);
}

#[test]
fn past_events_and_bad_config_are_errors() {
    let err = run_script("@3 tick\n@3 reflect\n", &[]).unwrap_err();
    assert!(matches!(err, RunError::Script { line: 2, .. }), "{err}");

    let err = run_script("config decay_rate=2\n", &[]).unwrap_err();
    assert!(matches!(err, RunError::Config(_)));

    let err = run_script("@0 frobnicate\n", &[]).unwrap_err();
    assert!(matches!(err, RunError::Parse(_)));
}

#[test]
fn config_overrides_beat_script_lines() {
    let script = "config capacity=1\n@0 perceive text=\"a\" kind=observation sector=perc\n@0 perceive text=\"b\" kind=observation sector=perc\n@0 expect metric=active_count cmp== value=2\n";
    assert!(!run_script(script, &[]).unwrap().passed());
    let overrides = vec![("capacity".to_string(), "4".to_string())];
    assert!(run_script(script, &overrides).unwrap().passed());
}

#[test]
fn demo_seeds() {
    let conflict = run_demo(
        &Seed::Conflict.blueprints(),
        EngineConfig::default(),
        DemoConfig::default(),
    );
    assert_eq!(conflict.attempts(), 1);
    assert_eq!(conflict.admissions(), 1);
    assert_eq!(conflict.converged_at(), Some(1));
    assert_eq!(conflict.attempts_per_tick.len(), 16);

    let pinned = run_demo(
        &Seed::PinnedConflict.blueprints(),
        EngineConfig::default(),
        DemoConfig::default(),
    );
    assert_eq!(pinned.attempts(), 10);
    assert_eq!(pinned.admissions(), 0);
    assert!(pinned
        .self_records
        .iter()
        .all(|r| r.reason_codes[0].to_string().contains("conflict_with_pinned")));
    assert_eq!(pinned.attempts_per_tick[..10], [1; 10]);
    assert_eq!(pinned.attempts_per_tick[10..], [0; 6]);

    let capped = run_demo(
        &Seed::PinnedConflict.blueprints(),
        EngineConfig::default(),
        DemoConfig {
            ticks: 4,
            ..DemoConfig::default()
        },
    );
    assert_eq!(capped.attempts(), 4);

    let healthy = run_demo(
        &Seed::Healthy.blueprints(),
        EngineConfig::default(),
        DemoConfig::default(),
    );
    assert_eq!(healthy.attempts(), 0);

    let again = run_demo(
        &Seed::Conflict.blueprints(),
        EngineConfig::default(),
        DemoConfig::default(),
    );
    assert_eq!(again.audit, conflict.audit);
    assert_eq!(again.final_hash, conflict.final_hash);
}

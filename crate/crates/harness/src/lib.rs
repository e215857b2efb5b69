//! Scenario harness for the epistemic engine: a line-oriented script format,
//! a deterministic runner that emits audit logs, metric traces and final
//! state hashes, replay checking, and the self-injection demo.

pub mod demo;
pub mod runner;
pub mod scenario;

pub use demo::{run_demo, DemoConfig, DemoReport, Seed};
pub use runner::{
    build_engine, config_overrides, replay_check, run, run_script, Mismatch, ReplayReport, RunError, RunOutput,
};
pub use scenario::{parse, ParseError, Scenario};

/// The bundled use-case scenarios, by name.
pub const CORPUS: [(&str, &str); 5] = [
    ("bootstrap", include_str!("../scenarios/bootstrap.scn")),
    (
        "realtime_adjustment",
        include_str!("../scenarios/realtime_adjustment.scn"),
    ),
    ("ethics", include_str!("../scenarios/ethics.scn")),
    ("impasse", include_str!("../scenarios/impasse.scn")),
    ("loop_breaking", include_str!("../scenarios/loop_breaking.scn")),
];

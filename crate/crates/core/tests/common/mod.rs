#![allow(dead_code)]

use epistemic_core::{Assertion, BeliefState, Coord, FragmentBlueprint, FragmentKind, Polarity, SectorId};
use proptest::prelude::*;

pub const SECTORS: [&str; 6] = ["perc", "plan", "mem", "refl", "know", "ethics"];
pub const TOPICS: [&str; 3] = ["route_a", "sensor_x", "policy"];
pub const PREDICATES: [&str; 2] = ["safe", "ok"];

pub const KINDS: [FragmentKind; 6] = [
    FragmentKind::Observation,
    FragmentKind::Goal,
    FragmentKind::Constraint,
    FragmentKind::Heuristic,
    FragmentKind::Correction,
    FragmentKind::ReflectivePrompt,
];

pub fn assertion() -> impl Strategy<Value = Option<Assertion>> {
    prop_oneof![
        1 => Just(None),
        4 => (0..TOPICS.len(), 0..PREDICATES.len(), any::<bool>()).prop_map(|(t, p, pos)| {
            let polarity = if pos { Polarity::Positive } else { Polarity::Negative };
            Some(Assertion::new(TOPICS[t], PREDICATES[p], polarity).unwrap())
        }),
    ]
}

pub fn blueprint() -> impl Strategy<Value = FragmentBlueprint> {
    (
        assertion(),
        0..KINDS.len(),
        0..SECTORS.len(),
        0u8..=4,
        0.0f64..=1.0,
        prop::bool::weighted(0.15),
    )
        .prop_map(|(a, kind, sector, k, anchor, pinned)| {
            let mut bp =
                FragmentBlueprint::new("fragment", KINDS[kind], Coord::at(SECTORS[sector], k)).with_anchor(anchor);
            if let Some(a) = a {
                bp = bp.with_assertion(a);
            }
            if pinned {
                bp = bp.pinned();
            }
            bp
        })
}

/// A state of up to `max` fragments built without any admission checks, so
/// it may hold conflicts.
pub fn raw_state(max: usize) -> impl Strategy<Value = BeliefState> {
    prop::collection::vec(blueprint(), 0..=max).prop_map(|bps| {
        let mut s = BeliefState::vacuum();
        for bp in &bps {
            s.insert_unchecked(bp);
        }
        s
    })
}

/// Coherence by enumerating every unordered pair of active asserted fragments.
pub fn coherence_oracle(state: &BeliefState) -> f64 {
    let asserted: Vec<_> = state.active().filter_map(|f| f.assertion.clone()).collect();
    let (mut comparable, mut conflicting) = (0usize, 0usize);
    for i in 0..asserted.len() {
        for j in i + 1..asserted.len() {
            let (a, b) = (&asserted[i], &asserted[j]);
            if a.topic == b.topic && a.predicate == b.predicate {
                comparable += 1;
                if a.polarity != b.polarity {
                    conflicting += 1;
                }
            }
        }
    }
    if comparable == 0 {
        1.0
    } else {
        1.0 - conflicting as f64 / comparable as f64
    }
}

pub fn sector(name: &str) -> SectorId {
    SectorId::new(name).unwrap()
}

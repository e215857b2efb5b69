//! Global state metrics: coherence (kappa) and load (lambda).
//!
//! Both are replaceable hooks. Coherence is pairwise over comparable
//! assertions of active fragments; load is an unweighted active count.

use std::collections::BTreeMap;

use crate::fragment::Polarity;
use crate::state::BeliefState;

/// `1 - conflicting / comparable` over active fragments with assertions;
/// 1.0 when nothing is comparable.
pub fn coherence(state: &BeliefState) -> f64 {
    let mut groups: BTreeMap<(&str, &str), (u64, u64)> = BTreeMap::new();
    for assertion in state.active().filter_map(|f| f.assertion.as_ref()) {
        let entry = groups
            .entry((assertion.topic.as_str(), assertion.predicate.as_str()))
            .or_default();
        match assertion.polarity {
            Polarity::Positive => entry.0 += 1,
            Polarity::Negative => entry.1 += 1,
        }
    }
    let (mut comparable, mut conflicting) = (0u64, 0u64);
    for (pos, neg) in groups.into_values() {
        let n = pos + neg;
        comparable += n * (n - 1) / 2;
        conflicting += pos * neg;
    }
    if comparable == 0 {
        1.0
    } else {
        1.0 - conflicting as f64 / comparable as f64
    }
}

/// Number of active fragments.
pub fn load(state: &BeliefState) -> f64 {
    state.active_count() as f64
}

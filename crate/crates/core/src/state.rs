use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::fragment::{BeliefFragment, FragmentBlueprint, FragmentId};

/// The ensemble of belief fragments held by an agent at one tick.
///
/// A `BeliefState` is a value: engine operations take a snapshot and return a
/// new one. The empty state at tick 0 is the epistemic vacuum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    fragments: BTreeMap<FragmentId, BeliefFragment>,
    next_id: u64,
    tick: u64,
}

impl Default for BeliefState {
    fn default() -> Self {
        Self::vacuum()
    }
}

impl BeliefState {
    pub fn vacuum() -> Self {
        Self {
            fragments: BTreeMap::new(),
            next_id: 1,
            tick: 0,
        }
    }

    pub fn is_vacuum(&self) -> bool {
        self.fragments.is_empty() && self.tick == 0
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Id the next admitted fragment will receive.
    pub fn next_id(&self) -> FragmentId {
        FragmentId(self.next_id)
    }

    pub fn get(&self, id: FragmentId) -> Option<&BeliefFragment> {
        self.fragments.get(&id)
    }

    /// All fragments in id order, whatever their status.
    pub fn fragments(&self) -> impl Iterator<Item = &BeliefFragment> {
        self.fragments.values()
    }

    pub fn active(&self) -> impl Iterator<Item = &BeliefFragment> {
        self.fragments.values().filter(|f| f.is_active())
    }

    pub fn active_count(&self) -> usize {
        self.active().count()
    }

    pub fn len(&self) -> usize {
        self.fragments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }

    /// Inserts a fragment with a fresh id, skipping every admission check.
    ///
    /// This is the naive insertion path; it is also how tests and demos seed
    /// states that assimilation would never produce (e.g. live conflicts).
    pub fn insert_unchecked(&mut self, blueprint: &FragmentBlueprint) -> FragmentId {
        let id = FragmentId(self.next_id);
        self.next_id += 1;
        self.fragments.insert(id, blueprint.instantiate(id, self.tick));
        id
    }

    pub(crate) fn get_mut(&mut self, id: FragmentId) -> Option<&mut BeliefFragment> {
        self.fragments.get_mut(&id)
    }

    pub(crate) fn fragments_mut(&mut self) -> impl Iterator<Item = &mut BeliefFragment> {
        self.fragments.values_mut()
    }

    pub(crate) fn advance_tick(&mut self) {
        self.tick += 1;
    }

    pub(crate) fn from_parts(fragments: Vec<BeliefFragment>, tick: u64) -> Self {
        let next_id = fragments.iter().map(|f| f.id.0 + 1).max().unwrap_or(1);
        Self {
            fragments: fragments.into_iter().map(|f| (f.id, f)).collect(),
            next_id,
            tick,
        }
    }
}

//! Belief lifecycle: per-tick expiry and decay, reinforcement, operator
//! retirement, sector annihilation, and the reflection pass.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fragment::{FragmentBlueprint, FragmentId, FragmentKind, Provenance, Status};
use crate::manifold::Manifold;
use crate::metrics::{coherence, load};
use crate::reason::ReasonCode;
use crate::sector::{Coord, SectorId};
use crate::state::BeliefState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickReport {
    pub tick: u64,
    /// `(id, old_anchor, new_anchor)` for every fragment that decayed.
    pub decayed: Vec<(FragmentId, f64, f64)>,
    pub expired_ids: Vec<FragmentId>,
    pub nullified_ids: Vec<FragmentId>,
    pub kappa: f64,
    pub lambda: f64,
}

/// Measurements written into a meta-report fragment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaReport {
    pub kappa: f64,
    pub lambda: f64,
    pub sector_counts: BTreeMap<String, usize>,
}

impl MetaReport {
    const PREFIX: &'static str = "meta_report";

    pub fn measure(manifold: &Manifold, state: &BeliefState) -> Self {
        let mut sector_counts: BTreeMap<String, usize> =
            manifold.sectors().iter().map(|s| (s.to_string(), 0)).collect();
        for f in state.active() {
            *sector_counts.entry(f.coord.sector.to_string()).or_default() += 1;
        }
        Self {
            kappa: coherence(state),
            lambda: load(state),
            sector_counts,
        }
    }

    /// `meta_report kappa=1.000000 lambda=3 active.plan=2 ...`
    pub fn to_text(&self) -> String {
        let mut out = format!("{} kappa={:.6} lambda={}", Self::PREFIX, self.kappa, self.lambda);
        for (sector, n) in &self.sector_counts {
            let _ = write!(out, " active.{sector}={n}");
        }
        out
    }

    pub fn parse(text: &str) -> Option<Self> {
        let mut words = text.split(' ');
        if words.next()? != Self::PREFIX {
            return None;
        }
        let mut kappa = None;
        let mut lambda = None;
        let mut sector_counts = BTreeMap::new();
        for word in words {
            let (key, value) = word.split_once('=')?;
            match key {
                "kappa" => kappa = value.parse().ok(),
                "lambda" => lambda = value.parse().ok(),
                _ => {
                    let sector = key.strip_prefix("active.")?;
                    sector_counts.insert(sector.to_string(), value.parse().ok()?);
                }
            }
        }
        Some(Self {
            kappa: kappa?,
            lambda: lambda?,
            sector_counts,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectOutcome {
    pub new_state: BeliefState,
    pub meta_report_id: Option<FragmentId>,
    pub report: MetaReport,
    pub reason_codes: Vec<ReasonCode>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Retirement {
    pub new_state: BeliefState,
    pub id: FragmentId,
    pub was_pinned: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Annihilation {
    pub new_state: BeliefState,
    pub annihilated_ids: Vec<FragmentId>,
}

impl Manifold {
    /// Advances the clock by one tick and applies, per active fragment in id
    /// order: TTL expiry, then decay (unless pinned), then nullification.
    ///
    /// A fragment born at tick `t` with ttl `n` is active through tick `t+n`
    /// and expires on the boundary into tick `t+n+1`.
    pub fn tick(&self, state: &BeliefState) -> (BeliefState, TickReport) {
        let cfg = &self.config;
        let mut next = state.clone();
        next.advance_tick();
        let now = next.tick();
        let mut report = TickReport {
            tick: now,
            decayed: Vec::new(),
            expired_ids: Vec::new(),
            nullified_ids: Vec::new(),
            kappa: 0.0,
            lambda: 0.0,
        };
        for f in next.fragments_mut().filter(|f| f.is_active()) {
            if f.ttl.is_some_and(|ttl| now - f.born_tick > u64::from(ttl)) {
                f.transition(Status::Expired);
                report.expired_ids.push(f.id);
                continue;
            }
            if f.pinned {
                continue;
            }
            let old = f.anchor;
            f.anchor *= if f.fast_decay { cfg.fast_decay } else { cfg.decay_rate };
            report.decayed.push((f.id, old, f.anchor));
            if f.anchor < cfg.null_threshold {
                f.transition(Status::Nullified);
                report.nullified_ids.push(f.id);
            }
        }
        report.kappa = coherence(&next);
        report.lambda = load(&next);
        (next, report)
    }

    pub fn reinforce(&self, state: &BeliefState, id: FragmentId) -> Result<BeliefState> {
        let mut next = state.clone();
        let f = next.get_mut(id).ok_or(Error::UnknownFragment(id))?;
        if !f.is_active() {
            return Err(Error::NotActive(id));
        }
        f.anchor = (f.anchor + self.config.reinforce_step).min(1.0);
        Ok(next)
    }

    /// Retracts an active fragment on an operator's behalf. Pinned fragments
    /// may be retired this way; nothing else can remove them.
    pub fn retire(&self, state: &BeliefState, id: FragmentId) -> Result<Retirement> {
        let mut next = state.clone();
        let f = next.get_mut(id).ok_or(Error::UnknownFragment(id))?;
        if !f.is_active() {
            return Err(Error::NotActive(id));
        }
        f.transition(Status::Retracted);
        let was_pinned = f.pinned;
        Ok(Retirement {
            new_state: next,
            id,
            was_pinned,
        })
    }

    /// Annihilates every active fragment in `sector`.
    pub fn annihilate_sector(&self, state: &BeliefState, sector: &SectorId) -> Result<Annihilation> {
        self.sectors.ensure(sector)?;
        let mut next = state.clone();
        let mut annihilated_ids = Vec::new();
        for f in next
            .fragments_mut()
            .filter(|f| f.is_active() && &f.coord.sector == sector)
        {
            f.transition(Status::Annihilated);
            annihilated_ids.push(f.id);
        }
        Ok(Annihilation {
            new_state: next,
            annihilated_ids,
        })
    }

    /// Reflection pass at the default layer (refl, 1).
    pub fn reflect(&self, state: &BeliefState) -> ReflectOutcome {
        self.reflect_at(state, 1.min(self.config.k_max))
    }

    /// Measures the state, then admits a meta-report describing it at
    /// `(refl, layer)`. The report's own admission is not part of what it
    /// reports.
    pub fn reflect_at(&self, state: &BeliefState, layer: u8) -> ReflectOutcome {
        let report = MetaReport::measure(self, state);
        let blueprint = FragmentBlueprint::new(
            report.to_text(),
            FragmentKind::MetaReport,
            Coord::new(SectorId::refl(), layer),
        )
        .with_anchor(1.0)
        .with_provenance(Provenance::Reflected);
        let outcome = self
            .assimilate(state, &blueprint, 1.0)
            .expect("refl is built in and layer is within k_max");
        if outcome.rejected {
            ReflectOutcome {
                new_state: state.clone(),
                meta_report_id: None,
                report,
                reason_codes: outcome.reason_codes,
            }
        } else {
            ReflectOutcome {
                meta_report_id: outcome.admitted_ids.first().copied(),
                new_state: outcome.new_state,
                report,
                reason_codes: outcome.reason_codes,
            }
        }
    }
}

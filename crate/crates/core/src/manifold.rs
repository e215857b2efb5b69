use crate::assimilation::ElaborationRule;
use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::fragment::{BeliefFragment, Status};
use crate::sector::{Coord, SectorId, SectorRegistry};
use crate::state::BeliefState;

/// Engine-scoped context shared by the pure state operations: parameters,
/// the sector registry, and registered elaboration rules.
///
/// The registry and rules are set up before serving and read-only afterwards.
#[derive(Clone, Default)]
pub struct Manifold {
    pub(crate) config: EngineConfig,
    pub(crate) sectors: SectorRegistry,
    pub(crate) rules: Vec<ElaborationRule>,
}

impl std::fmt::Debug for Manifold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Manifold")
            .field("config", &self.config)
            .field("sectors", &self.sectors)
            .field("rules", &self.rules.iter().map(|r| r.name()).collect::<Vec<_>>())
            .finish()
    }
}

impl Manifold {
    pub fn new(config: EngineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            ..Self::default()
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn sectors(&self) -> &SectorRegistry {
        &self.sectors
    }

    pub fn sectors_mut(&mut self) -> &mut SectorRegistry {
        &mut self.sectors
    }

    pub fn register_sector(&mut self, name: &str) -> Result<SectorId> {
        self.sectors.register(name)
    }

    /// Checks that a coordinate names a registered sector and a level within k_max.
    pub fn check_coord(&self, coord: &Coord) -> Result<()> {
        self.sectors.ensure(&coord.sector)?;
        if coord.k > self.config.k_max {
            return Err(Error::LayerOutOfRange {
                level: coord.k,
                k_max: self.config.k_max,
            });
        }
        Ok(())
    }

    /// Fragments matching every provided filter, in id order.
    pub fn query<'s>(
        &self,
        state: &'s BeliefState,
        sector: Option<&SectorId>,
        k: Option<u8>,
        status: Option<Status>,
    ) -> Result<Vec<&'s BeliefFragment>> {
        if let Some(sector) = sector {
            self.sectors.ensure(sector)?;
        }
        Ok(state
            .fragments()
            .filter(|f| sector.is_none_or(|s| &f.coord.sector == s))
            .filter(|f| k.is_none_or(|k| f.coord.k == k))
            .filter(|f| status.is_none_or(|st| f.status == st))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fragment::{FragmentBlueprint, FragmentKind};

    fn state() -> BeliefState {
        let mut s = BeliefState::vacuum();
        s.insert_unchecked(&FragmentBlueprint::new("g", FragmentKind::Goal, Coord::at("plan", 1)));
        s.insert_unchecked(&FragmentBlueprint::new(
            "r",
            FragmentKind::ReflectivePrompt,
            Coord::at("refl", 2),
        ));
        s
    }

    #[test]
    fn query_on_vacuum_is_empty() {
        let m = Manifold::default();
        let plan = SectorId::plan();
        assert!(m
            .query(&BeliefState::vacuum(), Some(&plan), None, None)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn query_filters_by_sector_and_level() {
        let m = Manifold::default();
        let s = state();
        let plan = m.query(&s, Some(&SectorId::plan()), None, None).unwrap();
        assert_eq!(plan.len(), 1);
        assert_eq!(plan[0].coord, Coord::at("plan", 1));
        assert_eq!(m.query(&s, None, Some(2), None).unwrap()[0].text, "r");
        assert_eq!(m.query(&s, None, None, None).unwrap().len(), 2);
    }

    #[test]
    fn query_filters_by_status() {
        let m = Manifold::default();
        let mut s = state();
        s.get_mut(crate::FragmentId(1)).unwrap().transition(Status::Expired);
        let active = m.query(&s, None, None, Some(Status::Active)).unwrap();
        assert_eq!(active.len(), 1);
        assert_eq!(active[0].text, "r");
    }

    #[test]
    fn query_unknown_sector_fails() {
        let m = Manifold::default();
        let bogus = SectorId::new("robotics").unwrap();
        assert_eq!(
            m.query(&state(), Some(&bogus), None, None).unwrap_err(),
            Error::UnknownSector("robotics".into())
        );
    }

    #[test]
    fn coords_are_checked_against_k_max() {
        let m = Manifold::default();
        m.check_coord(&Coord::at("plan", 4)).unwrap();
        assert!(matches!(
            m.check_coord(&Coord::at("plan", 5)),
            Err(Error::LayerOutOfRange { level: 5, k_max: 4 })
        ));
    }
}

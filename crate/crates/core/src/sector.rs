//! Sectors, abstraction levels and manifold coordinates.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Returns true for `[a-z][a-z0-9_]*` with at most 32 characters.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    s.len() <= 32 && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

pub(crate) fn identifier(s: &str) -> Result<String> {
    if is_identifier(s) {
        Ok(s.to_string())
    } else {
        Err(Error::InvalidIdentifier(s.to_string()))
    }
}

/// Name of a functional domain of the manifold.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SectorId(String);

impl SectorId {
    pub const PERCEPTION: &'static str = "perc";
    pub const PLANNING: &'static str = "plan";
    pub const MEMORY: &'static str = "mem";
    pub const REFLECTION: &'static str = "refl";
    pub const KNOWLEDGE: &'static str = "know";
    pub const ETHICS: &'static str = "ethics";

    pub const BUILTIN: [&'static str; 6] = [
        Self::PERCEPTION,
        Self::PLANNING,
        Self::MEMORY,
        Self::REFLECTION,
        Self::KNOWLEDGE,
        Self::ETHICS,
    ];

    pub fn new(name: &str) -> Result<Self> {
        identifier(name).map(SectorId)
    }

    pub fn plan() -> Self {
        SectorId(Self::PLANNING.to_string())
    }

    pub fn refl() -> Self {
        SectorId(Self::REFLECTION.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_builtin(&self) -> bool {
        Self::BUILTIN.contains(&self.0.as_str())
    }
}

impl fmt::Display for SectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for SectorId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SectorId::new(s)
    }
}

impl TryFrom<String> for SectorId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        SectorId::new(&s)
    }
}

impl From<SectorId> for String {
    fn from(s: SectorId) -> String {
        s.0
    }
}

/// Position of a fragment in the manifold: sector and abstraction level.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Coord {
    pub sector: SectorId,
    pub k: u8,
}

impl Coord {
    pub fn new(sector: SectorId, k: u8) -> Self {
        Self { sector, k }
    }

    /// Convenience constructor that panics on an invalid sector name.
    pub fn at(sector: &str, k: u8) -> Self {
        Self::new(SectorId::new(sector).expect("valid sector name"), k)
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.sector, self.k)
    }
}

impl FromStr for Coord {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (sector, k) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidRequest(format!("coordinate {s:?} is not sector:k")))?;
        let k = k
            .parse()
            .map_err(|_| Error::InvalidRequest(format!("bad abstraction level in {s:?}")))?;
        Ok(Coord::new(SectorId::new(sector)?, k))
    }
}

/// Set of sectors known to an engine. Built-ins are always present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorRegistry {
    sectors: BTreeSet<SectorId>,
}

impl Default for SectorRegistry {
    fn default() -> Self {
        Self {
            sectors: SectorId::BUILTIN.iter().map(|s| SectorId(s.to_string())).collect(),
        }
    }
}

impl SectorRegistry {
    pub fn register(&mut self, name: &str) -> Result<SectorId> {
        let id = SectorId::new(name)?;
        self.sectors.insert(id.clone());
        Ok(id)
    }

    pub fn unregister(&mut self, id: &SectorId) -> Result<bool> {
        if id.is_builtin() {
            return Err(Error::BuiltinSector(id.to_string()));
        }
        Ok(self.sectors.remove(id))
    }

    pub fn contains(&self, id: &SectorId) -> bool {
        self.sectors.contains(id)
    }

    pub fn ensure(&self, id: &SectorId) -> Result<()> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(Error::UnknownSector(id.to_string()))
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &SectorId> {
        self.sectors.iter()
    }
}

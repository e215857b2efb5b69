//! Belief fragments and their structured assertions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sector::{identifier, Coord};

/// Engine-assigned fragment identifier. Monotone, never reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FragmentId(pub u64);

impl fmt::Display for FragmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn opposite(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }

    pub fn sign(self) -> char {
        match self {
            Polarity::Positive => '+',
            Polarity::Negative => '-',
        }
    }
}

/// Structured, machine-comparable content of a fragment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assertion {
    pub topic: String,
    pub predicate: String,
    pub polarity: Polarity,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<(String, String)>,
}

impl Assertion {
    pub fn new(topic: &str, predicate: &str, polarity: Polarity) -> Result<Self> {
        Ok(Self {
            topic: identifier(topic)?,
            predicate: identifier(predicate)?,
            polarity,
            params: Vec::new(),
        })
    }

    pub fn positive(topic: &str, predicate: &str) -> Self {
        Self::new(topic, predicate, Polarity::Positive).expect("valid identifiers")
    }

    pub fn negative(topic: &str, predicate: &str) -> Self {
        Self::new(topic, predicate, Polarity::Negative).expect("valid identifiers")
    }

    pub fn with_param(mut self, key: &str, value: &str) -> Result<Self> {
        if self.params.iter().any(|(k, _)| k == key) {
            return Err(Error::InvalidRequest(format!("duplicate param key {key:?}")));
        }
        self.params.push((key.to_string(), value.to_string()));
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        identifier(&self.topic)?;
        identifier(&self.predicate)?;
        for (i, (key, _)) in self.params.iter().enumerate() {
            if key.is_empty() || self.params[..i].iter().any(|(k, _)| k == key) {
                return Err(Error::InvalidRequest(format!("bad or duplicate param key {key:?}")));
            }
        }
        Ok(())
    }

    /// Same topic and predicate.
    pub fn comparable(&self, other: &Assertion) -> bool {
        self.topic == other.topic && self.predicate == other.predicate
    }

    /// Comparable with opposite polarity.
    pub fn conflicts_with(&self, other: &Assertion) -> bool {
        self.comparable(other) && self.polarity != other.polarity
    }

    pub fn negated(&self) -> Assertion {
        Assertion {
            polarity: self.polarity.opposite(),
            ..self.clone()
        }
    }
}

/// Short textual form `topic.predicate.+` (params are not included).
impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.topic, self.predicate, self.polarity.sign())
    }
}

impl FromStr for Assertion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split('.');
        let (Some(topic), Some(predicate), Some(sign), None) = (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(Error::InvalidRequest(format!(
                "assertion {s:?} is not topic.predicate.(+|-)"
            )));
        };
        let polarity = match sign {
            "+" => Polarity::Positive,
            "-" => Polarity::Negative,
            _ => return Err(Error::InvalidRequest(format!("bad polarity in {s:?}"))),
        };
        Assertion::new(topic, predicate, polarity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FragmentKind {
    Observation,
    Goal,
    Constraint,
    Correction,
    Heuristic,
    ReflectivePrompt,
    MetaReport,
}

impl FragmentKind {
    pub const ALL: [FragmentKind; 7] = [
        FragmentKind::Observation,
        FragmentKind::Goal,
        FragmentKind::Constraint,
        FragmentKind::Correction,
        FragmentKind::Heuristic,
        FragmentKind::ReflectivePrompt,
        FragmentKind::MetaReport,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FragmentKind::Observation => "observation",
            FragmentKind::Goal => "goal",
            FragmentKind::Constraint => "constraint",
            FragmentKind::Correction => "correction",
            FragmentKind::Heuristic => "heuristic",
            FragmentKind::ReflectivePrompt => "reflective_prompt",
            FragmentKind::MetaReport => "meta_report",
        }
    }
}

impl fmt::Display for FragmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FragmentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FragmentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidRequest(format!("unknown fragment kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Perceived,
    Injected(String),
    Elaborated(FragmentId),
    Reflected,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Perceived => f.write_str("perceived"),
            Provenance::Injected(source) => write!(f, "injected:{source}"),
            Provenance::Elaborated(parent) => write!(f, "elaborated:{parent}"),
            Provenance::Reflected => f.write_str("reflected"),
        }
    }
}

impl FromStr for Provenance {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidRequest(format!("bad provenance {s:?}"));
        match s.split_once(':') {
            None if s == "perceived" => Ok(Provenance::Perceived),
            None if s == "reflected" => Ok(Provenance::Reflected),
            Some(("injected", source)) => Ok(Provenance::Injected(source.to_string())),
            Some(("elaborated", parent)) => Ok(Provenance::Elaborated(FragmentId(parent.parse().map_err(|_| bad())?))),
            _ => Err(bad()),
        }
    }
}

/// Lifecycle status. Every status other than `Active` is terminal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Active,
    Expired,
    Nullified,
    Retracted,
    Annihilated,
}

impl Status {
    pub const ALL: [Status; 5] = [
        Status::Active,
        Status::Expired,
        Status::Nullified,
        Status::Retracted,
        Status::Annihilated,
    ];

    pub fn is_terminal(self) -> bool {
        self != Status::Active
    }

    /// Edges of the lifecycle graph: active to any terminal status, nothing else.
    pub fn can_transition_to(self, next: Status) -> bool {
        self == Status::Active && next.is_terminal()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Active => "active",
            Status::Expired => "expired",
            Status::Nullified => "nullified",
            Status::Retracted => "retracted",
            Status::Annihilated => "annihilated",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Status {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Status::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::InvalidRequest(format!("unknown status {s:?}")))
    }
}

/// One belief held in a [`crate::BeliefState`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefFragment {
    pub id: FragmentId,
    pub text: String,
    pub assertion: Option<Assertion>,
    pub kind: FragmentKind,
    pub coord: Coord,
    pub anchor: f64,
    pub pinned: bool,
    pub provenance: Provenance,
    pub born_tick: u64,
    pub ttl: Option<u32>,
    pub status: Status,
    /// Decays with the config's `fast_decay` multiplier instead of `decay_rate`.
    #[serde(default)]
    pub fast_decay: bool,
}

impl BeliefFragment {
    pub fn is_active(&self) -> bool {
        self.status == Status::Active
    }

    pub fn conflicts_with(&self, assertion: &Assertion) -> bool {
        self.assertion.as_ref().is_some_and(|own| own.conflicts_with(assertion))
    }

    pub fn topic(&self) -> Option<&str> {
        self.assertion.as_ref().map(|a| a.topic.as_str())
    }

    pub(crate) fn transition(&mut self, next: Status) {
        debug_assert!(
            self.status.can_transition_to(next),
            "illegal lifecycle transition {} -> {}",
            self.status,
            next
        );
        self.status = next;
    }
}

/// Everything needed to admit a fragment; the engine assigns id, tick and status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragmentBlueprint {
    pub text: String,
    #[serde(default)]
    pub assertion: Option<Assertion>,
    pub kind: FragmentKind,
    pub coord: Coord,
    pub anchor: f64,
    #[serde(default)]
    pub pinned: bool,
    pub provenance: Provenance,
    #[serde(default)]
    pub ttl: Option<u32>,
    #[serde(default)]
    pub fast_decay: bool,
}

impl FragmentBlueprint {
    pub fn new(text: impl Into<String>, kind: FragmentKind, coord: Coord) -> Self {
        Self {
            text: text.into(),
            assertion: None,
            kind,
            coord,
            anchor: 0.5,
            pinned: false,
            provenance: Provenance::Perceived,
            ttl: None,
            fast_decay: false,
        }
    }

    pub fn with_assertion(mut self, assertion: Assertion) -> Self {
        self.assertion = Some(assertion);
        self
    }

    pub fn with_anchor(mut self, anchor: f64) -> Self {
        self.anchor = anchor;
        self
    }

    pub fn pinned(mut self) -> Self {
        self.pinned = true;
        self.anchor = 1.0;
        self
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn with_ttl(mut self, ttl: u32) -> Self {
        self.ttl = Some(ttl);
        self
    }

    pub fn with_fast_decay(mut self) -> Self {
        self.fast_decay = true;
        self
    }

    /// Anchor actually stored on admission: pinned forces 1.0, otherwise clamped to [0, 1].
    pub fn effective_anchor(&self) -> f64 {
        if self.pinned {
            1.0
        } else {
            self.anchor.clamp(0.0, 1.0)
        }
    }

    /// Checks the content invariants that do not depend on engine config.
    pub fn validate(&self) -> Result<()> {
        if let Some(assertion) = &self.assertion {
            assertion.validate()?;
        }
        if self.ttl == Some(0) {
            return Err(Error::InvalidRequest("ttl must be at least 1".into()));
        }
        if !self.anchor.is_finite() {
            return Err(Error::InvalidRequest("anchor must be finite".into()));
        }
        Ok(())
    }

    pub(crate) fn instantiate(&self, id: FragmentId, born_tick: u64) -> BeliefFragment {
        BeliefFragment {
            id,
            text: self.text.clone(),
            assertion: self.assertion.clone(),
            kind: self.kind,
            coord: self.coord.clone(),
            anchor: self.effective_anchor(),
            pinned: self.pinned,
            provenance: self.provenance.clone(),
            born_tick,
            ttl: self.ttl,
            status: Status::Active,
            fast_decay: self.fast_decay,
        }
    }
}

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::injection::{InjectionRequest, Strategy};
use crate::reason::AuthFailure;
use crate::sector::identifier;

/// Source id reserved for the agent's own self-injections.
pub const SELF_SOURCE: &str = "self";

/// Hex SHA-256 of a presented token.
pub fn token_digest(token: &str) -> String {
    hex::encode(Sha256::digest(token.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceEntry {
    pub token_digest: String,
    pub max_priority: f64,
    pub allowed_strategies: BTreeSet<Strategy>,
    /// May resolve pending requests, retire beliefs and annihilate sectors.
    #[serde(default)]
    pub review: bool,
}

impl SourceEntry {
    pub fn new(token: &str, max_priority: f64, allowed_strategies: impl IntoIterator<Item = Strategy>) -> Self {
        Self {
            token_digest: token_digest(token),
            max_priority,
            allowed_strategies: allowed_strategies.into_iter().collect(),
            review: false,
        }
    }

    pub fn with_review(mut self) -> Self {
        self.review = true;
        self
    }
}

/// Known injection sources. Tokens are held only as digests.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceRegistry {
    sources: BTreeMap<String, SourceEntry>,
}

impl SourceRegistry {
    pub fn register(&mut self, id: &str, entry: SourceEntry) -> Result<()> {
        if id == SELF_SOURCE {
            return Err(Error::ReservedSource(id.to_string()));
        }
        self.insert(id, entry)
    }

    /// Registers the reserved `self` source.
    pub fn register_self(&mut self, entry: SourceEntry) -> Result<()> {
        self.insert(SELF_SOURCE, entry)
    }

    fn insert(&mut self, id: &str, entry: SourceEntry) -> Result<()> {
        if !(0.0..=1.0).contains(&entry.max_priority) {
            return Err(Error::InvalidConfig(format!(
                "source {id}: max_priority must be in [0, 1]"
            )));
        }
        self.sources.insert(identifier(id)?, entry);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&SourceEntry> {
        self.sources.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &SourceEntry)> {
        self.sources.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn authenticate(&self, request: &InjectionRequest, token: &str) -> Result<(), AuthFailure> {
        self.authenticate_digest(request, &token_digest(token))
    }

    /// As [`Self::authenticate`], for a token already reduced to its digest.
    pub fn authenticate_digest(&self, request: &InjectionRequest, digest: &str) -> Result<(), AuthFailure> {
        let entry = self.sources.get(&request.source).ok_or(AuthFailure::UnknownSource)?;
        if entry.token_digest != digest {
            return Err(AuthFailure::BadToken);
        }
        if request.priority > entry.max_priority {
            return Err(AuthFailure::PriorityExceeded);
        }
        if !entry.allowed_strategies.contains(&request.strategy) {
            return Err(AuthFailure::StrategyNotAllowed);
        }
        Ok(())
    }

    /// Checks that `actor` presents its token and holds the review capability.
    pub fn authorize_reviewer(&self, actor: &str, token: &str) -> Result<()> {
        match self.sources.get(actor) {
            Some(entry) if entry.review && entry.token_digest == token_digest(token) => Ok(()),
            _ => Err(Error::Unauthorized(actor.to_string())),
        }
    }
}

use std::net::SocketAddr;
use std::time::Duration;

use epistemic_core::safety::{FilterRule, SourceEntry};
use epistemic_core::{Engine, EngineConfig, Manifold, Strategy};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TickMode {
    /// Ticks only advance through `POST /v1/tick`.
    #[default]
    Manual,
    /// The writer ticks every this many milliseconds, between commands.
    Interval(u64),
}

impl TickMode {
    pub fn period(self) -> Option<Duration> {
        match self {
            TickMode::Manual => None,
            TickMode::Interval(ms) => Some(Duration::from_millis(ms.max(1))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub id: String,
    pub token: String,
    pub max_priority: f64,
    pub strategies: Vec<Strategy>,
    #[serde(default)]
    pub review: bool,
}

/// Service settings, usually read from a TOML file:
///
/// ```toml
/// bind = "127.0.0.1:7878"
/// tick_mode = { interval = 500 }   # or "manual"
/// sectors = ["ethics"]
///
/// [engine]
/// kappa_floor = 0.8
///
/// [[sources]]
/// id = "ops"
/// token = "change-me"
/// max_priority = 1.0
/// strategies = ["direct", "context_aware"]
/// review = true
///
/// [[filters]]
/// rule_id = "no_harm"
/// mode = "blacklist"
/// match = { text_glob = "*harm*" }
/// ```
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_bind")]
    pub bind: SocketAddr,
    #[serde(default)]
    pub tick_mode: TickMode,
    /// Commands that may wait for the writer before requests get 429.
    #[serde(default = "default_queue_capacity")]
    pub queue_capacity: usize,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default)]
    pub sectors: Vec<String>,
    #[serde(default)]
    pub sources: Vec<SourceConfig>,
    #[serde(default)]
    pub filters: Vec<FilterRule>,
}

fn default_bind() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 7878))
}

fn default_queue_capacity() -> usize {
    64
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: default_bind(),
            tick_mode: TickMode::Manual,
            queue_capacity: default_queue_capacity(),
            engine: EngineConfig::default(),
            sectors: Vec::new(),
            sources: Vec::new(),
            filters: Vec::new(),
        }
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn build_engine(&self) -> epistemic_core::Result<Engine> {
        let mut manifold = Manifold::new(self.engine.clone())?;
        for name in &self.sectors {
            manifold.register_sector(name)?;
        }
        let mut engine = Engine::new(manifold);
        let gate = engine.gate_mut();
        for s in &self.sources {
            let mut entry = SourceEntry::new(&s.token, s.max_priority, s.strategies.iter().copied());
            entry.review = s.review;
            gate.sources.register(&s.id, entry)?;
        }
        for rule in &self.filters {
            gate.filters.add(rule.clone())?;
        }
        Ok(engine)
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What the safety pipeline does when a guardrail check fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuardrailMode {
    Reject,
    FlagForReview,
}

/// Tunable engine parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Highest abstraction level a fragment may occupy.
    pub k_max: u8,
    /// Maximum number of active fragments (the load ceiling).
    pub capacity: usize,
    /// Per-tick anchor multiplier for non-pinned fragments.
    pub decay_rate: f64,
    /// Multiplier used instead of `decay_rate` for fast-decay fragments.
    pub fast_decay: f64,
    /// Anchors strictly below this are nullified.
    pub null_threshold: f64,
    pub reinforce_step: f64,
    /// Tie band when comparing injection authority with an existing anchor.
    pub authority_epsilon: f64,
    pub kappa_floor: f64,
    pub kappa_drop_max: f64,
    pub guardrail_mode: GuardrailMode,
    /// Anchors at or above this are treated as highly anchored by the
    /// context-aware relevance gate.
    pub high_anchor_band: f64,
    /// Enables the unsafe naive insertion path.
    pub allow_naive: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            k_max: 4,
            capacity: 256,
            decay_rate: 0.95,
            fast_decay: 0.5,
            null_threshold: 0.05,
            reinforce_step: 0.1,
            authority_epsilon: 0.05,
            kappa_floor: 0.8,
            kappa_drop_max: 0.1,
            guardrail_mode: GuardrailMode::Reject,
            high_anchor_band: 0.75,
            allow_naive: false,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, what: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidConfig(what.to_string()))
            }
        }
        check(
            self.decay_rate > 0.0 && self.decay_rate <= 1.0,
            "decay_rate must be in (0, 1]",
        )?;
        check(
            self.fast_decay > 0.0 && self.fast_decay <= 1.0,
            "fast_decay must be in (0, 1]",
        )?;
        check(
            (0.0..1.0).contains(&self.null_threshold),
            "null_threshold must be in [0, 1)",
        )?;
        check(
            self.reinforce_step > 0.0 && self.reinforce_step <= 1.0,
            "reinforce_step must be in (0, 1]",
        )?;
        check(
            (0.0..=1.0).contains(&self.authority_epsilon),
            "authority_epsilon must be in [0, 1]",
        )?;
        check((0.0..=1.0).contains(&self.kappa_floor), "kappa_floor must be in [0, 1]")?;
        check(
            (0.0..=1.0).contains(&self.kappa_drop_max),
            "kappa_drop_max must be in [0, 1]",
        )?;
        check(
            (0.0..=1.0).contains(&self.high_anchor_band),
            "high_anchor_band must be in [0, 1]",
        )?;
        check(self.capacity > 0, "capacity must be positive")?;
        Ok(())
    }

    /// Sets one parameter from its textual `key=value` form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse {value:?}")))
        }
        match key {
            "k_max" => self.k_max = num(key, value)?,
            "capacity" => self.capacity = num(key, value)?,
            "decay_rate" => self.decay_rate = num(key, value)?,
            "fast_decay" => self.fast_decay = num(key, value)?,
            "null_threshold" => self.null_threshold = num(key, value)?,
            "reinforce_step" => self.reinforce_step = num(key, value)?,
            "authority_epsilon" => self.authority_epsilon = num(key, value)?,
            "kappa_floor" => self.kappa_floor = num(key, value)?,
            "kappa_drop_max" => self.kappa_drop_max = num(key, value)?,
            "high_anchor_band" => self.high_anchor_band = num(key, value)?,
            "allow_naive" => self.allow_naive = num(key, value)?,
            "guardrail_mode" => {
                self.guardrail_mode = match value {
                    "reject" => GuardrailMode::Reject,
                    "flag_for_review" => GuardrailMode::FlagForReview,
                    other => return Err(Error::InvalidConfig(format!("guardrail_mode: unknown mode {other:?}"))),
                }
            }
            other => return Err(Error::InvalidConfig(format!("unknown key {other:?}"))),
        }
        Ok(())
    }
}

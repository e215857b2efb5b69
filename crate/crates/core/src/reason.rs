use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Why an authentication attempt failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AuthFailure {
    UnknownSource,
    BadToken,
    PriorityExceeded,
    StrategyNotAllowed,
}

impl AuthFailure {
    fn as_str(self) -> &'static str {
        match self {
            AuthFailure::UnknownSource => "unknown_source",
            AuthFailure::BadToken => "bad_token",
            AuthFailure::PriorityExceeded => "priority_exceeded",
            AuthFailure::StrategyNotAllowed => "strategy_not_allowed",
        }
    }
}

/// Machine-readable reason attached to outcomes and audit records.
///
/// Safety-pipeline stage failures render as `<stage>:<detail>`
/// (`auth:bad_token`, `blacklist:<rule_id>`, `guardrail:kappa_drop`), so the
/// first failing stage is visible from the code alone.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ReasonCode {
    // assimilation
    ConflictWithPinned,
    AuthorityTooLow,
    CapacityExceeded,
    LayerOutOfRange,
    UnknownSector,
    // context-aware gate
    Irrelevant,
    OverCapacity,
    ConflictsWithAnchored,
    BadTarget,
    // strategy bookkeeping
    GoalRefined,
    WrongKind,
    MissingTtl,
    MissingTarget,
    InvalidRequest,
    NaiveDisabled,
    NaiveBypass,
    PolicyDeferred,
    PolicyDropped,
    // safety pipeline stages
    Auth(AuthFailure),
    WhitelistNoMatch,
    Blacklist(String),
    GuardrailPinned,
    GuardrailKappaFloor,
    GuardrailKappaDrop,
    // operator actions
    HumanReview,
    ManualRetirement,
    PinnedRetired,
    SectorAnnihilation,
}

impl ReasonCode {
    /// The safety-pipeline stage this code belongs to, if any.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            ReasonCode::Auth(_) => Some("auth"),
            ReasonCode::WhitelistNoMatch => Some("whitelist"),
            ReasonCode::Blacklist(_) => Some("blacklist"),
            ReasonCode::GuardrailPinned | ReasonCode::GuardrailKappaFloor | ReasonCode::GuardrailKappaDrop => {
                Some("guardrail")
            }
            _ => None,
        }
    }
}

impl fmt::Display for ReasonCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ReasonCode::ConflictWithPinned => "conflict_with_pinned",
            ReasonCode::AuthorityTooLow => "authority_too_low",
            ReasonCode::CapacityExceeded => "capacity_exceeded",
            ReasonCode::LayerOutOfRange => "layer_out_of_range",
            ReasonCode::UnknownSector => "unknown_sector",
            ReasonCode::Irrelevant => "irrelevant",
            ReasonCode::OverCapacity => "over_capacity",
            ReasonCode::ConflictsWithAnchored => "conflicts_with_anchored",
            ReasonCode::BadTarget => "bad_target",
            ReasonCode::GoalRefined => "goal_refined",
            ReasonCode::WrongKind => "wrong_kind",
            ReasonCode::MissingTtl => "missing_ttl",
            ReasonCode::MissingTarget => "missing_target",
            ReasonCode::InvalidRequest => "invalid_request",
            ReasonCode::NaiveDisabled => "naive_disabled",
            ReasonCode::NaiveBypass => "naive_bypass",
            ReasonCode::PolicyDeferred => "policy_deferred",
            ReasonCode::PolicyDropped => "policy_dropped",
            ReasonCode::Auth(why) => return write!(f, "auth:{}", why.as_str()),
            ReasonCode::WhitelistNoMatch => "whitelist:no_match",
            ReasonCode::Blacklist(rule) => return write!(f, "blacklist:{rule}"),
            ReasonCode::GuardrailPinned => "guardrail:conflict_with_pinned",
            ReasonCode::GuardrailKappaFloor => "guardrail:kappa_floor",
            ReasonCode::GuardrailKappaDrop => "guardrail:kappa_drop",
            ReasonCode::HumanReview => "human_review",
            ReasonCode::ManualRetirement => "manual_retirement",
            ReasonCode::PinnedRetired => "pinned_retired",
            ReasonCode::SectorAnnihilation => "sector_annihilation",
        };
        f.write_str(s)
    }
}

impl FromStr for ReasonCode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if let Some(rule) = s.strip_prefix("blacklist:") {
            return Ok(ReasonCode::Blacklist(rule.to_string()));
        }
        if let Some(why) = s.strip_prefix("auth:") {
            let why = [
                AuthFailure::UnknownSource,
                AuthFailure::BadToken,
                AuthFailure::PriorityExceeded,
                AuthFailure::StrategyNotAllowed,
            ]
            .into_iter()
            .find(|w| w.as_str() == why)
            .ok_or_else(|| Error::InvalidRequest(format!("unknown reason code {s:?}")))?;
            return Ok(ReasonCode::Auth(why));
        }
        use ReasonCode::*;
        let plain = [
            ConflictWithPinned,
            AuthorityTooLow,
            CapacityExceeded,
            LayerOutOfRange,
            UnknownSector,
            Irrelevant,
            OverCapacity,
            ConflictsWithAnchored,
            BadTarget,
            GoalRefined,
            WrongKind,
            MissingTtl,
            MissingTarget,
            InvalidRequest,
            NaiveDisabled,
            NaiveBypass,
            PolicyDeferred,
            PolicyDropped,
            WhitelistNoMatch,
            GuardrailPinned,
            GuardrailKappaFloor,
            GuardrailKappaDrop,
            HumanReview,
            ManualRetirement,
            PinnedRetired,
            SectorAnnihilation,
        ];
        plain
            .into_iter()
            .find(|code| code.to_string() == s)
            .ok_or_else(|| Error::InvalidRequest(format!("unknown reason code {s:?}")))
    }
}

impl TryFrom<String> for ReasonCode {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ReasonCode> for String {
    fn from(code: ReasonCode) -> String {
        code.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_codes_are_prefixed() {
        assert_eq!(ReasonCode::Auth(AuthFailure::BadToken).to_string(), "auth:bad_token");
        assert_eq!(ReasonCode::Blacklist("no_harm".into()).to_string(), "blacklist:no_harm");
        assert_eq!(ReasonCode::GuardrailKappaDrop.stage(), Some("guardrail"));
        assert_eq!(ReasonCode::AuthorityTooLow.stage(), None);
    }

    #[test]
    fn text_form_round_trips() {
        for code in [
            ReasonCode::ConflictWithPinned,
            ReasonCode::Auth(AuthFailure::StrategyNotAllowed),
            ReasonCode::Blacklist("r1".into()),
            ReasonCode::GuardrailPinned,
            ReasonCode::SectorAnnihilation,
        ] {
            assert_eq!(code.to_string().parse::<ReasonCode>().unwrap(), code);
        }
        assert!("bogus".parse::<ReasonCode>().is_err());
    }
}

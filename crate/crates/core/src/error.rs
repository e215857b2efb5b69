use thiserror::Error;

use crate::fragment::FragmentId;

/// Precondition violations raised by engine operations.
///
/// In-band outcomes (a rejected assimilation, a guardrail failure) are not
/// errors; they are reported through [`crate::ReasonCode`]s instead.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid identifier {0:?}: expected [a-z][a-z0-9_]* of at most 32 characters")]
    InvalidIdentifier(String),
    #[error("unknown sector {0:?}")]
    UnknownSector(String),
    #[error("built-in sector {0:?} cannot be unregistered")]
    BuiltinSector(String),
    #[error("abstraction level {level} exceeds k_max {k_max}")]
    LayerOutOfRange { level: u8, k_max: u8 },
    #[error("elaboration rule {0:?} is already registered")]
    DuplicateRule(String),
    #[error("naive injection is disabled (set allow_naive to enable it)")]
    NaiveDisabled,
    #[error("strategy {expected} required, got {actual}")]
    WrongStrategy { expected: String, actual: String },
    #[error("fragment kind {0} is not accepted by this strategy")]
    WrongKind(String),
    #[error("temporal injection requires a ttl")]
    MissingTtl,
    #[error("sector-targeted injection requires a target")]
    MissingTarget,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("unknown fragment {0}")]
    UnknownFragment(FragmentId),
    #[error("fragment {0} is not active")]
    NotActive(FragmentId),
    #[error("actor {0:?} is not authorized for this operation")]
    Unauthorized(String),
    #[error("unknown pending request {0}")]
    UnknownPending(u64),
    #[error("pending request {0} is already resolved")]
    AlreadyResolved(u64),
    #[error("source id {0:?} is reserved")]
    ReservedSource(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    /// Stable machine-readable code, used by the service's error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidIdentifier(_) => "invalid_identifier",
            Error::UnknownSector(_) => "unknown_sector",
            Error::BuiltinSector(_) => "builtin_sector",
            Error::LayerOutOfRange { .. } => "layer_out_of_range",
            Error::DuplicateRule(_) => "duplicate_rule",
            Error::NaiveDisabled => "naive_disabled",
            Error::WrongStrategy { .. } => "wrong_strategy",
            Error::WrongKind(_) => "wrong_kind",
            Error::MissingTtl => "missing_ttl",
            Error::MissingTarget => "missing_target",
            Error::InvalidRequest(_) => "invalid_request",
            Error::UnknownFragment(_) => "unknown_fragment",
            Error::NotActive(_) => "not_active",
            Error::Unauthorized(_) => "unauthorized",
            Error::UnknownPending(_) => "unknown_pending",
            Error::AlreadyResolved(_) => "already_resolved",
            Error::ReservedSource(_) => "reserved_source",
            Error::InvalidConfig(_) => "invalid_config",
            Error::Parse { .. } => "parse_error",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

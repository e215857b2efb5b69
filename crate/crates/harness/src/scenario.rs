//! Scenario scripts.
//!
//! A script is a prologue of setup lines followed by timed events:
//!
//! ```text
//! # comment
//! sector robotics
//! config decay_rate=0.9
//! source ops token=t0k max_priority=1.0 strategies=direct,temporal review=true
//! blacklist no_harm assertion=content_policy.allow_harm.+
//! whitelist nav_only topic=nav
//! elaborate goal_subgoal
//!
//! @0 inject strategy=direct source=ops token=t0k priority=0.9 sector=plan k=0 kind=goal assert=nav.reach.+ "Reach the dock."
//! @3 tick
//! @5 expect metric=active_count cmp== value=1
//! ```
//!
//! Values may be double-quoted (`text="a b"`); a bare quoted token is the
//! fragment text. Events are applied in tick order, file order within a tick.

use std::collections::BTreeMap;
use std::fmt;

use epistemic_core::safety::{FilterMode, Matcher};
use epistemic_core::{Assertion, Coord, FragmentKind, SectorId, Strategy};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line,
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceDecl {
    pub id: String,
    pub token: String,
    pub max_priority: f64,
    pub strategies: Vec<Strategy>,
    pub review: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterDecl {
    pub rule_id: String,
    pub mode: FilterMode,
    pub matcher: Matcher,
}

/// Fields describing a fragment, shared by `perceive` and `inject`.
#[derive(Debug, Clone, PartialEq)]
pub struct FragmentSpec {
    pub text: String,
    pub kind: FragmentKind,
    pub coord: Coord,
    pub assertion: Option<Assertion>,
    pub anchor: Option<f64>,
    pub pinned: bool,
    pub ttl: Option<u32>,
    pub fast_decay: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Kappa,
    Lambda,
    ActiveCount,
    PendingCount,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Kappa => "kappa",
            Metric::Lambda => "lambda",
            Metric::ActiveCount => "active_count",
            Metric::PendingCount => "pending_count",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Cmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cmp::Le => "<=",
            Cmp::Ge => ">=",
            Cmp::Eq => "==",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    Perceive(FragmentSpec),
    Inject {
        fragment: FragmentSpec,
        strategy: Strategy,
        source: String,
        token: String,
        priority: f64,
        target: Option<Coord>,
    },
    Tick {
        count: u32,
    },
    Reinforce {
        id: u64,
    },
    Retire {
        id: u64,
        actor: String,
        token: String,
    },
    Annihilate {
        sector: SectorId,
        actor: String,
        token: String,
    },
    Reflect,
    Expect {
        metric: Metric,
        cmp: Cmp,
        value: f64,
    },
    SetEnv {
        key: String,
        value: String,
    },
    Review {
        id: u64,
        approve: bool,
        actor: String,
        token: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub line: usize,
    pub at_tick: u64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scenario {
    pub sectors: Vec<String>,
    pub config: Vec<(String, String)>,
    pub sources: Vec<SourceDecl>,
    pub filters: Vec<FilterDecl>,
    pub elaborations: Vec<String>,
    /// Sorted by tick, stable within a tick.
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq)]
struct Token {
    key: Option<String>,
    value: String,
}

fn tokenize(line_no: usize, line: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = line.chars().peekable();
    loop {
        while chars.next_if(|c| c.is_whitespace()).is_some() {}
        let Some(&first) = chars.peek() else { break };
        let mut key = None;
        let mut value = String::new();
        if first != '"' {
            while let Some(c) = chars.next_if(|c| !c.is_whitespace() && *c != '"') {
                if c == '=' && key.is_none() {
                    key = Some(std::mem::take(&mut value));
                } else {
                    value.push(c);
                }
            }
        }
        if chars.peek() == Some(&'"') {
            if !value.is_empty() {
                return err(line_no, "quote in the middle of a value");
            }
            chars.next();
            let mut closed = false;
            while let Some(c) = chars.next() {
                match c {
                    '"' => {
                        closed = true;
                        break;
                    }
                    '\\' => match chars.next() {
                        Some(e @ ('"' | '\\')) => value.push(e),
                        Some('n') => value.push('\n'),
                        Some('t') => value.push('\t'),
                        _ => return err(line_no, "bad escape in quoted string"),
                    },
                    c => value.push(c),
                }
            }
            if !closed {
                return err(line_no, "unterminated quoted string");
            }
            if chars.peek().is_some_and(|c| !c.is_whitespace()) {
                return err(line_no, "text after closing quote");
            }
        }
        tokens.push(Token { key, value });
    }
    Ok(tokens)
}

/// Key/value arguments of one line, consumed as they are read so leftovers
/// can be reported.
struct Args {
    line: usize,
    positional: Vec<String>,
    keyed: BTreeMap<String, String>,
}

impl Args {
    fn new(line: usize, tokens: Vec<Token>) -> Result<Self, ParseError> {
        let mut positional = Vec::new();
        let mut keyed = BTreeMap::new();
        for t in tokens {
            match t.key {
                Some(k) => {
                    if keyed.insert(k.clone(), t.value).is_some() {
                        return err(line, format!("duplicate key {k:?}"));
                    }
                }
                None => positional.push(t.value),
            }
        }
        Ok(Self {
            line,
            positional,
            keyed,
        })
    }

    fn opt(&mut self, key: &str) -> Option<String> {
        self.keyed.remove(key)
    }

    fn req(&mut self, key: &str) -> Result<String, ParseError> {
        self.opt(key)
            .map_or_else(|| err(self.line, format!("missing {key}=")), Ok)
    }

    fn parse_opt<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, ParseError>
    where
        T::Err: fmt::Display,
    {
        match self.opt(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).or_else(|e| err(self.line, format!("{key}: {e}"))),
        }
    }

    fn parse_req<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, ParseError>
    where
        T::Err: fmt::Display,
    {
        self.parse_opt(key)?
            .map_or_else(|| err(self.line, format!("missing {key}=")), Ok)
    }

    fn flag(&mut self, key: &str) -> Result<bool, ParseError> {
        Ok(self.parse_opt(key)?.unwrap_or(false))
    }

    fn text(&mut self) -> Result<String, ParseError> {
        match (self.opt("text"), self.positional.len()) {
            (Some(t), 0) => Ok(t),
            (None, 1) => Ok(self.positional.remove(0)),
            (None, 0) => err(self.line, "missing fragment text"),
            _ => err(self.line, "more than one fragment text"),
        }
    }

    fn finish(self) -> Result<(), ParseError> {
        if let Some(p) = self.positional.first() {
            return err(self.line, format!("unexpected argument {p:?}"));
        }
        if let Some(k) = self.keyed.keys().next() {
            return err(self.line, format!("unknown key {k:?}"));
        }
        Ok(())
    }

    fn fragment(&mut self, default_kind: FragmentKind) -> Result<FragmentSpec, ParseError> {
        let sector: SectorId = self.parse_req("sector")?;
        let k: u8 = self.parse_opt("k")?.unwrap_or(0);
        Ok(FragmentSpec {
            text: self.text()?,
            kind: self.parse_opt("kind")?.unwrap_or(default_kind),
            coord: Coord::new(sector, k),
            assertion: self.parse_opt("assert")?,
            anchor: self.parse_opt("anchor")?,
            pinned: self.flag("pinned")?,
            ttl: self.parse_opt("ttl")?,
            fast_decay: self.flag("fast_decay")?,
        })
    }
}

fn parse_prologue(line: usize, head: &str, mut args: Args, sc: &mut Scenario) -> Result<(), ParseError> {
    match head {
        "sector" => {
            if args.positional.len() != 1 {
                return err(line, "usage: sector <name>");
            }
            sc.sectors.push(args.positional.remove(0));
        }
        "config" => {
            let pairs: Vec<_> = std::mem::take(&mut args.keyed).into_iter().collect();
            if pairs.is_empty() {
                return err(line, "usage: config <key>=<value>");
            }
            sc.config.extend(pairs);
        }
        "source" => {
            if args.positional.len() != 1 {
                return err(line, "usage: source <id> token=.. max_priority=.. strategies=..");
            }
            let id = args.positional.remove(0);
            let strategies = args
                .req("strategies")?
                .split(',')
                .map(|s| s.parse::<Strategy>().or_else(|e| err(line, e.to_string())))
                .collect::<Result<_, _>>()?;
            sc.sources.push(SourceDecl {
                id,
                token: args.req("token")?,
                max_priority: args.parse_req("max_priority")?,
                strategies,
                review: args.flag("review")?,
            });
        }
        "whitelist" | "blacklist" => {
            if args.positional.len() != 1 || args.keyed.len() != 1 {
                return err(line, format!("usage: {head} <rule_id> topic=..|text=..|assertion=.."));
            }
            let rule_id = args.positional.remove(0);
            let (key, value) = std::mem::take(&mut args.keyed).into_iter().next().expect("one key");
            let matcher = format!("{key}={value}")
                .parse::<Matcher>()
                .or_else(|e| err(line, e.to_string()))?;
            let mode = if head == "whitelist" {
                FilterMode::Whitelist
            } else {
                FilterMode::Blacklist
            };
            sc.filters.push(FilterDecl { rule_id, mode, matcher });
        }
        "elaborate" => {
            if args.positional.len() != 1 {
                return err(line, "usage: elaborate <rule>");
            }
            sc.elaborations.push(args.positional.remove(0));
        }
        other => return err(line, format!("unknown prologue directive {other:?}")),
    }
    args.finish()
}

fn parse_event(line: usize, kind: &str, mut a: Args) -> Result<EventKind, ParseError> {
    let event = match kind {
        "perceive" => EventKind::Perceive(a.fragment(FragmentKind::Observation)?),
        "inject" => {
            let strategy = a.parse_req("strategy")?;
            let source = a.req("source")?;
            let token = a.req("token")?;
            let priority = a.parse_req("priority")?;
            let target = a.parse_opt("target")?;
            // The fragment's own coordinate defaults to the target's.
            if !a.keyed.contains_key("sector") {
                if let Some(Coord { sector, k }) = &target {
                    a.keyed.insert("sector".into(), sector.to_string());
                    a.keyed.entry("k".into()).or_insert(k.to_string());
                }
            }
            EventKind::Inject {
                fragment: a.fragment(FragmentKind::Heuristic)?,
                strategy,
                source,
                token,
                priority,
                target,
            }
        }
        "tick" => EventKind::Tick {
            count: a.parse_opt("count")?.unwrap_or(1),
        },
        "reinforce" => EventKind::Reinforce { id: a.parse_req("id")? },
        "retire" => EventKind::Retire {
            id: a.parse_req("id")?,
            actor: a.req("actor")?,
            token: a.req("token")?,
        },
        "annihilate" => EventKind::Annihilate {
            sector: a.parse_req("sector")?,
            actor: a.req("actor")?,
            token: a.req("token")?,
        },
        "reflect" => EventKind::Reflect,
        "expect" => {
            let metric = match a.req("metric")?.as_str() {
                "kappa" => Metric::Kappa,
                "lambda" => Metric::Lambda,
                "active_count" => Metric::ActiveCount,
                "pending_count" => Metric::PendingCount,
                other => return err(line, format!("unknown metric {other:?}")),
            };
            let cmp = match a.req("cmp")?.as_str() {
                "<=" => Cmp::Le,
                ">=" => Cmp::Ge,
                "==" | "=" => Cmp::Eq,
                other => return err(line, format!("unknown comparison {other:?}")),
            };
            EventKind::Expect {
                metric,
                cmp,
                value: a.parse_req("value")?,
            }
        }
        "set_env" => EventKind::SetEnv {
            key: a.req("key")?,
            value: a.req("value")?,
        },
        "review" => EventKind::Review {
            id: a.parse_req("id")?,
            approve: match a.req("verdict")?.as_str() {
                "approve" => true,
                "reject" => false,
                other => return err(line, format!("unknown verdict {other:?}")),
            },
            actor: a.req("actor")?,
            token: a.req("token")?,
        },
        other => return err(line, format!("unknown event kind {other:?}")),
    };
    a.finish()?;
    Ok(event)
}

/// `cmp==` tokenizes as key `cmp`, value `=`; put the comparison back together.
fn fix_cmp(tokens: &mut [Token]) {
    for t in tokens {
        if t.key.as_deref() == Some("cmp") && t.value == "=" {
            t.value = "==".into();
        }
    }
}

pub fn parse(text: &str) -> Result<Scenario, ParseError> {
    let mut sc = Scenario::default();
    let mut in_events = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = tokenize(line, trimmed)?;
        fix_cmp(&mut tokens);
        let head = tokens.remove(0);
        if head.key.is_some() {
            return err(line, "line must start with a directive or @tick");
        }
        if let Some(at) = head.value.strip_prefix('@') {
            in_events = true;
            let at_tick: u64 = at.parse().or_else(|_| err(line, format!("bad tick {at:?}")))?;
            if tokens.is_empty() || tokens[0].key.is_some() {
                return err(line, "missing event kind");
            }
            let kind = tokens.remove(0).value;
            let args = Args::new(line, tokens)?;
            sc.events.push(Event {
                line,
                at_tick,
                kind: parse_event(line, &kind, args)?,
            });
        } else {
            if in_events {
                return err(line, "prologue directive after the first event");
            }
            let args = Args::new(line, tokens)?;
            parse_prologue(line, &head.value, args, &mut sc)?;
        }
    }
    sc.events.sort_by_key(|e| e.at_tick);
    Ok(sc)
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fragment::{FragmentBlueprint, Polarity};
use crate::reason::ReasonCode;
use crate::sector::identifier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    Whitelist,
    Blacklist,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Matcher {
    TopicExact(String),
    /// `*` and `?` over the fragment text.
    TextGlob(String),
    Assertion {
        topic: String,
        predicate: String,
        polarity: Polarity,
    },
}

impl Matcher {
    pub fn matches(&self, bp: &FragmentBlueprint) -> bool {
        match self {
            Matcher::TopicExact(topic) => bp.assertion.as_ref().is_some_and(|a| &a.topic == topic),
            Matcher::TextGlob(pattern) => glob_match(pattern, &bp.text),
            Matcher::Assertion {
                topic,
                predicate,
                polarity,
            } => bp
                .assertion
                .as_ref()
                .is_some_and(|a| &a.topic == topic && &a.predicate == predicate && a.polarity == *polarity),
        }
    }
}

impl fmt::Display for Matcher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Matcher::TopicExact(t) => write!(f, "topic={t}"),
            Matcher::TextGlob(g) => write!(f, "text={g:?}"),
            Matcher::Assertion {
                topic,
                predicate,
                polarity,
            } => write!(f, "assertion={topic}.{predicate}.{}", polarity.sign()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterRule {
    pub rule_id: String,
    pub mode: FilterMode,
    #[serde(rename = "match")]
    pub matcher: Matcher,
}

impl FilterRule {
    pub fn new(rule_id: &str, mode: FilterMode, matcher: Matcher) -> Result<Self> {
        Ok(Self {
            rule_id: identifier(rule_id)?,
            mode,
            matcher,
        })
    }

    pub fn whitelist(rule_id: &str, matcher: Matcher) -> Result<Self> {
        Self::new(rule_id, FilterMode::Whitelist, matcher)
    }

    pub fn blacklist(rule_id: &str, matcher: Matcher) -> Result<Self> {
        Self::new(rule_id, FilterMode::Blacklist, matcher)
    }
}

/// The content filter: whitelist and blacklist rules in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterSet {
    rules: Vec<FilterRule>,
}

impl FilterSet {
    pub fn add(&mut self, rule: FilterRule) -> Result<()> {
        if self.rules.iter().any(|r| r.rule_id == rule.rule_id) {
            return Err(Error::InvalidConfig(format!("duplicate filter rule {}", rule.rule_id)));
        }
        self.rules.push(rule);
        Ok(())
    }

    pub fn remove(&mut self, rule_id: &str) -> bool {
        let before = self.rules.len();
        self.rules.retain(|r| r.rule_id != rule_id);
        self.rules.len() != before
    }

    pub fn rules(&self) -> &[FilterRule] {
        &self.rules
    }

    fn by_mode(&self, mode: FilterMode) -> impl Iterator<Item = &FilterRule> {
        self.rules.iter().filter(move |r| r.mode == mode)
    }

    /// With any whitelist rules present, at least one must match.
    pub fn check_whitelist(&self, bp: &FragmentBlueprint) -> Result<(), ReasonCode> {
        let mut rules = self.by_mode(FilterMode::Whitelist).peekable();
        if rules.peek().is_none() || rules.any(|r| r.matcher.matches(bp)) {
            Ok(())
        } else {
            Err(ReasonCode::WhitelistNoMatch)
        }
    }

    /// Fails with the first matching blacklist rule.
    pub fn check_blacklist(&self, bp: &FragmentBlueprint) -> Result<(), ReasonCode> {
        match self.by_mode(FilterMode::Blacklist).find(|r| r.matcher.matches(bp)) {
            Some(rule) => Err(ReasonCode::Blacklist(rule.rule_id.clone())),
            None => Ok(()),
        }
    }
}

/// Glob match supporting only `*` (any run, possibly empty) and `?` (one char).
pub fn glob_match(pattern: &str, text: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let t: Vec<char> = text.chars().collect();
    let (mut pi, mut ti) = (0, 0);
    let mut backtrack: Option<(usize, usize)> = None;
    while ti < t.len() {
        match p.get(pi) {
            Some('*') => {
                backtrack = Some((pi, ti));
                pi += 1;
            }
            Some(&c) if c == '?' || c == t[ti] => {
                pi += 1;
                ti += 1;
            }
            _ => match backtrack {
                Some((star, matched)) => {
                    pi = star + 1;
                    ti = matched + 1;
                    backtrack = Some((star, matched + 1));
                }
                None => return false,
            },
        }
    }
    p[pi..].iter().all(|&c| c == '*')
}

impl FromStr for Matcher {
    type Err = Error;

    /// `topic=<t>`, `text=<glob>` or `assertion=<topic>.<predicate>.<+|->`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidRequest(format!("bad filter matcher {s:?}"));
        let (key, value) = s.split_once('=').ok_or_else(bad)?;
        match key {
            "topic" => Ok(Matcher::TopicExact(identifier(value)?)),
            "text" => Ok(Matcher::TextGlob(value.to_string())),
            "assertion" => {
                let a: crate::fragment::Assertion = value.parse()?;
                Ok(Matcher::Assertion {
                    topic: a.topic,
                    predicate: a.predicate,
                    polarity: a.polarity,
                })
            }
            _ => Err(bad()),
        }
    }
}

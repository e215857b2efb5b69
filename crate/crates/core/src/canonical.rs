//! Canonical line-oriented serialization of a belief state, and its SHA-256.
//!
//! ```text
//! epistemic-state v1 tick=<n>
//! id  text  assertion  kind  sector:k  anchor  pinned  provenance  born_tick  ttl  status  fast_decay
//! ```
//!
//! Fields are tab-separated, fragments sorted by id, anchors at 6 decimal
//! places, absent optionals written as `-`. Text is escaped so that a
//! fragment always occupies exactly one line.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fragment::{Assertion, BeliefFragment, FragmentId};
use crate::state::BeliefState;

pub const STATE_HEADER: &str = "epistemic-state v1";

/// Backslash-escapes control characters plus any of `extra`.
pub fn escape(s: &str, extra: &[char]) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c if extra.contains(&c) => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out
}

pub fn unescape(s: &str) -> Result<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            None => return Err(parse_err(0, "dangling escape")),
        }
    }
    Ok(out)
}

/// Splits on `sep` where it is not preceded by an escaping backslash.
fn split_escaped(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut start = 0;
    let mut escaped = false;
    for (i, c) in s.char_indices() {
        if escaped {
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c == sep {
            parts.push(&s[start..i]);
            start = i + c.len_utf8();
        }
    }
    parts.push(&s[start..]);
    parts
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

const PARAM_SPECIALS: &[char] = &[',', '=', '{', '}'];

fn assertion_field(assertion: &Option<Assertion>) -> String {
    let Some(a) = assertion else {
        return "-".to_string();
    };
    let mut out = a.to_string();
    if !a.params.is_empty() {
        let params: Vec<String> = a
            .params
            .iter()
            .map(|(k, v)| format!("{}={}", escape(k, PARAM_SPECIALS), escape(v, PARAM_SPECIALS)))
            .collect();
        out.push('{');
        out.push_str(&params.join(","));
        out.push('}');
    }
    out
}

fn parse_assertion_field(field: &str, line: usize) -> Result<Option<Assertion>> {
    if field == "-" {
        return Ok(None);
    }
    let (head, params) = match field.find('{') {
        Some(i) => {
            let body = field[i + 1..]
                .strip_suffix('}')
                .ok_or_else(|| parse_err(line, "unterminated assertion params"))?;
            (&field[..i], Some(body))
        }
        None => (field, None),
    };
    let mut assertion: Assertion = head.parse().map_err(|e: Error| parse_err(line, e.to_string()))?;
    if let Some(body) = params {
        for pair in split_escaped(body, ',') {
            let kv = split_escaped(pair, '=');
            let [k, v] = kv.as_slice() else {
                return Err(parse_err(line, format!("bad param {pair:?}")));
            };
            assertion = assertion
                .with_param(&unescape(k)?, &unescape(v)?)
                .map_err(|e| parse_err(line, e.to_string()))?;
        }
    }
    Ok(Some(assertion))
}

pub fn fragment_line(f: &BeliefFragment) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}\t{:.6}\t{}\t{}\t{}\t{}\t{}\t{}",
        f.id,
        escape(&f.text, &[]),
        assertion_field(&f.assertion),
        f.kind,
        f.coord,
        f.anchor,
        f.pinned,
        escape(&f.provenance.to_string(), &[]),
        f.born_tick,
        f.ttl.map_or_else(|| "-".to_string(), |t| t.to_string()),
        f.status,
        f.fast_decay,
    )
}

/// Canonical text of a state. The header carries the tick.
pub fn serialize(state: &BeliefState) -> String {
    let mut out = format!("{STATE_HEADER} tick={}\n", state.tick());
    for f in state.fragments() {
        out.push_str(&fragment_line(f));
        out.push('\n');
    }
    out
}

/// Lowercase hex SHA-256 of [`serialize`].
pub fn canonical_hash(state: &BeliefState) -> String {
    hex::encode(Sha256::digest(serialize(state).as_bytes()))
}

/// Parses a canonical export back into a state. Anchors come back at 6 dp.
pub fn parse(text: &str) -> Result<BeliefState> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let tick = header
        .strip_prefix(STATE_HEADER)
        .and_then(|rest| rest.strip_prefix(" tick="))
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| parse_err(1, format!("bad header {header:?}")))?;

    let mut fragments: Vec<BeliefFragment> = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let fields: Vec<&str> = raw.split('\t').collect();
        let [id, text, assertion, kind, coord, anchor, pinned, provenance, born, ttl, status, fast] = fields.as_slice()
        else {
            return Err(parse_err(line, format!("expected 12 fields, got {}", fields.len())));
        };
        let field_err = |e: Error| parse_err(line, e.to_string());
        let num = |s: &str, what: &str| -> Result<u64> {
            s.parse().map_err(|_| parse_err(line, format!("bad {what} {s:?}")))
        };
        let flag = |s: &str| -> Result<bool> { s.parse().map_err(|_| parse_err(line, format!("bad flag {s:?}"))) };
        let id = FragmentId(num(id, "id")?);
        if fragments.last().is_some_and(|prev| prev.id >= id) {
            return Err(parse_err(line, "fragment ids must be strictly increasing"));
        }
        let anchor: f64 = anchor
            .parse()
            .map_err(|_| parse_err(line, format!("bad anchor {anchor:?}")))?;
        let pinned = flag(pinned)?;
        if !(0.0..=1.0).contains(&anchor) || (pinned && anchor != 1.0) {
            return Err(parse_err(line, "anchor out of range"));
        }
        let ttl = match *ttl {
            "-" => None,
            n => Some(
                u32::try_from(num(n, "ttl")?)
                    .ok()
                    .filter(|t| *t >= 1)
                    .ok_or_else(|| parse_err(line, "ttl must be in 1..=u32::MAX"))?,
            ),
        };
        fragments.push(BeliefFragment {
            id,
            text: unescape(text)?,
            assertion: parse_assertion_field(assertion, line)?,
            kind: kind.parse().map_err(field_err)?,
            coord: coord.parse().map_err(field_err)?,
            anchor,
            pinned,
            provenance: unescape(provenance)?.parse().map_err(field_err)?,
            born_tick: num(born, "born_tick")?,
            ttl,
            status: status.parse().map_err(field_err)?,
            fast_decay: flag(fast)?,
        });
    }
    Ok(BeliefState::from_parts(fragments, tick))
}

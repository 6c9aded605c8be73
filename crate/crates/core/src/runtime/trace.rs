//! Trace events, their log-line format and order-normalised fingerprints.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    SendRecv,
    ReplicateClone,
    ChoiceCommit,
    Spawn,
    Block,
    Terminate,
    Assign,
    Compose,
    Decompose,
    ConstraintViolation,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::SendRecv => "SEND_RECV",
            EventKind::ReplicateClone => "REPLICATE_CLONE",
            EventKind::ChoiceCommit => "CHOICE_COMMIT",
            EventKind::Spawn => "SPAWN",
            EventKind::Block => "BLOCK",
            EventKind::Terminate => "TERMINATE",
            EventKind::Assign => "ASSIGN",
            EventKind::Compose => "COMPOSE",
            EventKind::Decompose => "DECOMPOSE",
            EventKind::ConstraintViolation => "CONSTRAINT_VIOLATION",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step: u64,
    pub kind: EventKind,
    /// Handles such as `b3`, `b3.t7`, `c2` or `l5`.
    pub subjects: Vec<String>,
    pub payload: Option<String>,
}

impl TraceEvent {
    pub fn new(step: u64, kind: EventKind, subjects: Vec<String>, payload: Option<String>) -> Self {
        TraceEvent { step, kind, subjects, payload }
    }
}

/// `<step> <KIND> <subjects> [payload]`
impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.step, self.kind, self.subjects.join(","))?;
        if let Some(p) = &self.payload {
            write!(f, " {p}")?;
        }
        Ok(())
    }
}

pub fn format_log(events: &[TraceEvent]) -> String {
    let mut s = String::new();
    for e in events {
        s.push_str(&e.to_string());
        s.push('\n');
    }
    s
}

/// SHA-256 over the exact log lines, including step numbers.
pub fn trace_hash(events: &[TraceEvent]) -> String {
    hex::encode(Sha256::digest(format_log(events).as_bytes()))
}

/// Rewrites handle numbers in order of first appearance, per prefix, so
/// that traces of systems that differ only in allocation order compare
/// equal. Step numbers are dropped.
pub fn normalise(events: &[TraceEvent]) -> Vec<String> {
    let mut maps: BTreeMap<char, BTreeMap<String, usize>> = BTreeMap::new();
    let mut rename = |tok: &str| -> String {
        let mut c = tok.chars();
        let Some(prefix) = c.next() else { return String::new() };
        let rest = c.as_str();
        if rest.is_empty() || !rest.chars().all(|d| d.is_ascii_digit()) {
            return tok.to_string();
        }
        let m = maps.entry(prefix).or_default();
        let n = m.len();
        let id = *m.entry(rest.to_string()).or_insert(n);
        format!("{prefix}{id}")
    };
    events
        .iter()
        .map(|e| {
            let subjects: Vec<String> =
                e.subjects.iter().map(|s| s.split('.').map(&mut rename).collect::<Vec<_>>().join(".")).collect();
            match &e.payload {
                Some(p) => format!("{} {} {}", e.kind, subjects.join(","), p),
                None => format!("{} {}", e.kind, subjects.join(",")),
            }
        })
        .collect()
}

pub fn fingerprint(events: &[TraceEvent]) -> String {
    hex::encode(Sha256::digest(normalise(events).join("\n").as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_line_format() {
        let e = TraceEvent::new(
            3,
            EventKind::SendRecv,
            vec!["b1.t2".into(), "b4.t5".into(), "c0".into()],
            Some("42".into()),
        );
        assert_eq!(e.to_string(), "3 SEND_RECV b1.t2,b4.t5,c0 42");
    }

    #[test]
    fn normalisation_ignores_allocation_order() {
        let a = vec![
            TraceEvent::new(1, EventKind::Spawn, vec!["b7".into()], None),
            TraceEvent::new(2, EventKind::SendRecv, vec!["b7.t9".into(), "b8.t10".into(), "c3".into()], None),
        ];
        let b = vec![
            TraceEvent::new(5, EventKind::Spawn, vec!["b1".into()], None),
            TraceEvent::new(9, EventKind::SendRecv, vec!["b1.t1".into(), "b2.t2".into(), "c0".into()], None),
        ];
        assert_eq!(fingerprint(&a), fingerprint(&b));
        assert_ne!(trace_hash(&a), trace_hash(&b));
    }
}

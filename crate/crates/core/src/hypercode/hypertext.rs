//! The hyper-text interchange document and segment-level edit scripts.

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::syntax::{Segment, SourceSegmentList};

pub const HYPERTEXT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HyperTextError {
    #[error("malformed hyper-text document: {0}")]
    Malformed(String),
    #[error("unsupported hyper-text version {0}")]
    Version(u64),
    #[error("range {start}..{end} is out of bounds (length {len})")]
    OutOfBounds { start: usize, end: usize, len: usize },
    #[error("offset {0} falls inside a link")]
    SplitsLink(usize),
    #[error("no segment {0}")]
    NoSegment(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: u64,
    pub name: String,
}

/// Distinct link identifiers in first-appearance order, with display names.
pub fn manifest(src: &SourceSegmentList) -> Vec<ManifestEntry> {
    let mut out: Vec<ManifestEntry> = Vec::new();
    for s in &src.segments {
        if let Segment::Link { id, display } = s {
            if !out.iter().any(|m| m.id == *id) {
                out.push(ManifestEntry { id: *id, name: display.clone() });
            }
        }
    }
    out
}

pub fn to_json(src: &SourceSegmentList) -> serde_json::Value {
    let segments: Vec<serde_json::Value> = src
        .segments
        .iter()
        .map(|s| match s {
            Segment::Text(t) => json!({ "t": t }),
            Segment::Link { id, display } => json!({ "l": id, "d": display }),
        })
        .collect();
    json!({ "version": HYPERTEXT_VERSION, "segments": segments, "manifest": manifest(src) })
}

pub fn to_json_string(src: &SourceSegmentList) -> String {
    to_json(src).to_string()
}

/// Read an interchange document. Display names missing from a link are
/// taken from the manifest, or left empty.
pub fn from_json(v: &serde_json::Value) -> Result<SourceSegmentList, HyperTextError> {
    let bad = |m: &str| HyperTextError::Malformed(m.to_string());
    let obj = v.as_object().ok_or_else(|| bad("expected an object"))?;
    let version = obj.get("version").and_then(|x| x.as_u64()).ok_or_else(|| bad("missing version"))?;
    if version != HYPERTEXT_VERSION {
        return Err(HyperTextError::Version(version));
    }
    let manifest: Vec<ManifestEntry> = match obj.get("manifest") {
        Some(m) => serde_json::from_value(m.clone()).map_err(|e| bad(&e.to_string()))?,
        None => vec![],
    };
    let segs = obj.get("segments").and_then(|s| s.as_array()).ok_or_else(|| bad("missing segments"))?;
    let mut out = SourceSegmentList::new();
    for s in segs {
        if let Some(t) = s.get("t") {
            out.push_text(t.as_str().ok_or_else(|| bad("text segment must be a string"))?);
        } else if let Some(l) = s.get("l") {
            let id = l.as_u64().ok_or_else(|| bad("link id must be an unsigned integer"))?;
            let display = match s.get("d").and_then(|d| d.as_str()) {
                Some(d) => d.to_string(),
                None => manifest.iter().find(|m| m.id == id).map(|m| m.name.clone()).unwrap_or_default(),
            };
            out.push_link(id, display);
        } else {
            return Err(bad("segment must have `t` or `l`"));
        }
    }
    Ok(out)
}

pub fn from_json_str(s: &str) -> Result<SourceSegmentList, HyperTextError> {
    let v: serde_json::Value = serde_json::from_str(s).map_err(|e| HyperTextError::Malformed(e.to_string()))?;
    from_json(&v)
}

/// One edit. Offsets count characters of the displayed text, where a link
/// occupies the width of its display name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "camelCase")]
pub enum EditOp {
    ReplaceTextRange { start: usize, end: usize, text: String },
    InsertLink { at: usize, id: u64, display: String },
    RemoveSegment { index: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditScript {
    pub ops: Vec<EditOp>,
}

#[derive(Clone)]
enum Atom {
    Char(char),
    Link(u64, String),
}

impl Atom {
    fn width(&self) -> usize {
        match self {
            Atom::Char(_) => 1,
            Atom::Link(_, d) => d.chars().count(),
        }
    }
}

fn atoms(src: &SourceSegmentList) -> Vec<Atom> {
    let mut out = Vec::new();
    for s in &src.segments {
        match s {
            Segment::Text(t) => out.extend(t.chars().map(Atom::Char)),
            Segment::Link { id, display } => out.push(Atom::Link(*id, display.clone())),
        }
    }
    out
}

fn from_atoms(atoms: &[Atom]) -> SourceSegmentList {
    let mut out = SourceSegmentList::new();
    for a in atoms {
        match a {
            Atom::Char(c) => out.push_text(c.to_string()),
            Atom::Link(id, d) => out.push_link(*id, d.clone()),
        }
    }
    out
}

/// Index of the atom starting at display offset `off`.
fn atom_index(atoms: &[Atom], off: usize) -> Result<usize, HyperTextError> {
    let mut pos = 0;
    for (i, a) in atoms.iter().enumerate() {
        if pos == off {
            return Ok(i);
        }
        pos += a.width();
        if pos > off {
            return Err(HyperTextError::SplitsLink(off));
        }
    }
    if pos == off {
        Ok(atoms.len())
    } else {
        Err(HyperTextError::OutOfBounds { start: off, end: off, len: pos })
    }
}

fn apply_op(src: &SourceSegmentList, op: &EditOp) -> Result<SourceSegmentList, HyperTextError> {
    let len: usize = src.segments.iter().map(|s| s.display().chars().count()).sum();
    match op {
        EditOp::ReplaceTextRange { start, end, text } => {
            if start > end || *end > len {
                return Err(HyperTextError::OutOfBounds { start: *start, end: *end, len });
            }
            let mut a = atoms(src);
            let i = atom_index(&a, *start)?;
            let j = atom_index(&a, *end)?;
            a.splice(i..j, text.chars().map(Atom::Char));
            Ok(from_atoms(&a))
        }
        EditOp::InsertLink { at, id, display } => {
            if *at > len {
                return Err(HyperTextError::OutOfBounds { start: *at, end: *at, len });
            }
            let mut a = atoms(src);
            let i = atom_index(&a, *at)?;
            a.insert(i, Atom::Link(*id, display.clone()));
            Ok(from_atoms(&a))
        }
        EditOp::RemoveSegment { index } => {
            if *index >= src.segments.len() {
                return Err(HyperTextError::NoSegment(*index));
            }
            let mut out = SourceSegmentList::new();
            for (k, s) in src.segments.iter().enumerate() {
                match s {
                    _ if k == *index => {}
                    Segment::Text(t) => out.push_text(t.clone()),
                    Segment::Link { id, display } => out.push_link(*id, display.clone()),
                }
            }
            Ok(out)
        }
    }
}

/// Apply an edit script. Links outside the edited ranges keep their
/// identifiers.
pub fn transform(src: &SourceSegmentList, script: &EditScript) -> Result<SourceSegmentList, HyperTextError> {
    let mut cur = src.clone();
    for op in &script.ops {
        cur = apply_op(&cur, op)?;
    }
    Ok(cur)
}

/// Edit script that replaces the first occurrence of `from` in the
/// displayed text with `to`.
pub fn replace_first(src: &SourceSegmentList, from: &str, to: &str) -> Option<EditScript> {
    let text = src.display_text();
    let byte = text.find(from)?;
    let start = text[..byte].chars().count();
    let end = start + from.chars().count();
    Some(EditScript { ops: vec![EditOp::ReplaceTextRange { start, end, text: to.to_string() }] })
}

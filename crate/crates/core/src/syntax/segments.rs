//! Hyper-text sources: ordered runs of literal text and links to extant values.

use serde::{Deserialize, Serialize};

pub const LINK_OPEN: char = '⟦';
pub const LINK_CLOSE: char = '⟧';

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Segment {
    Text(String),
    Link { id: u64, display: String },
}

impl Segment {
    /// Text shown to the user for this segment.
    pub fn display(&self) -> &str {
        match self {
            Segment::Text(t) => t,
            Segment::Link { display, .. } => display,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSegmentList {
    pub segments: Vec<Segment>,
}

impl SourceSegmentList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_text(text: impl Into<String>) -> Self {
        let mut s = Self::new();
        s.push_text(text);
        s
    }

    /// Append text, merging with a trailing text segment.
    pub fn push_text(&mut self, text: impl Into<String>) {
        let text = text.into();
        if text.is_empty() {
            return;
        }
        if let Some(Segment::Text(last)) = self.segments.last_mut() {
            last.push_str(&text);
        } else {
            self.segments.push(Segment::Text(text));
        }
    }

    pub fn push_link(&mut self, id: u64, display: impl Into<String>) {
        self.segments.push(Segment::Link { id, display: display.into() });
    }

    /// Identifiers of every link, in order, with repeats.
    pub fn link_ids(&self) -> Vec<u64> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Link { id, .. } => Some(*id),
                Segment::Text(_) => None,
            })
            .collect()
    }

    /// Concatenated display text (links shown by their display names).
    pub fn display_text(&self) -> String {
        self.segments.iter().map(Segment::display).collect()
    }

    /// Plain-text carrier: links written as `⟦name#id⟧`.
    pub fn to_plain_text(&self) -> String {
        let mut out = String::new();
        for seg in &self.segments {
            match seg {
                Segment::Text(t) => out.push_str(t),
                Segment::Link { id, display } => {
                    out.push(LINK_OPEN);
                    out.push_str(display);
                    out.push('#');
                    out.push_str(&id.to_string());
                    out.push(LINK_CLOSE);
                }
            }
        }
        out
    }

    /// Split plain text into segments, recognising `⟦name#id⟧` links outside
    /// string literals and comments. Malformed links stay as text and are
    /// reported by the lexer.
    pub fn from_plain_text(src: &str) -> Self {
        let mut out = Self::new();
        let mut text = String::new();
        let mut chars = src.char_indices().peekable();
        let mut in_string = false;
        let mut in_comment = false;
        while let Some((i, c)) = chars.next() {
            if in_comment {
                text.push(c);
                if c == '\n' {
                    in_comment = false;
                }
                continue;
            }
            if in_string {
                text.push(c);
                if c == '\\' {
                    if let Some((_, n)) = chars.next() {
                        text.push(n);
                    }
                } else if c == '"' {
                    in_string = false;
                }
                continue;
            }
            match c {
                '"' => {
                    in_string = true;
                    text.push(c);
                }
                '!' => {
                    in_comment = true;
                    text.push(c);
                }
                LINK_OPEN => match parse_link(&src[i..]) {
                    Some((id, display, len)) => {
                        out.push_text(std::mem::take(&mut text));
                        out.push_link(id, display);
                        while let Some(&(j, _)) = chars.peek() {
                            if j < i + len {
                                chars.next();
                            } else {
                                break;
                            }
                        }
                    }
                    None => text.push(c),
                },
                _ => text.push(c),
            }
        }
        out.push_text(text);
        out
    }
}

/// Parse `⟦name#id⟧` at the start of `s`, returning (id, name, byte length).
pub fn parse_link(s: &str) -> Option<(u64, String, usize)> {
    let rest = s.strip_prefix(LINK_OPEN)?;
    let close = rest.find(LINK_CLOSE)?;
    let inner = &rest[..close];
    let hash = inner.rfind('#')?;
    let id = inner[hash + 1..].parse().ok()?;
    let display = inner[..hash].to_string();
    Some((id, display, LINK_OPEN.len_utf8() + close + LINK_CLOSE.len_utf8()))
}

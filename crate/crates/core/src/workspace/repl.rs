//! Line-oriented read-eval-print loop over a workspace.

use std::io::{BufRead, Write};

use super::{EvalResult, Workspace, WsError};
use crate::syntax::SourceSegmentList;

pub struct Repl {
    pub ws: Workspace,
    pending: String,
}

pub const HELP: &str = "\
:bindings            list workspace bindings
:behaviours          list behaviours and their status
:reify <name>        show the hyper-code of a binding
:seed <n>            reseed the scheduler
:save <file>         write a snapshot
:load <file>         replace the workspace with a snapshot
:trace               print the event log
:help                this text
:quit                leave
A line ending in `\\` continues on the next line.";

pub fn format_error(e: &WsError) -> String {
    match e.position() {
        Some((l, c)) => format!("{} error at {l}:{c}: {e}", e.phase()),
        None => format!("{} error: {e}", e.phase()),
    }
}

/// Binding lines, the value if any, and a one-line run summary.
pub fn format_result(r: &EvalResult) -> String {
    let mut out = Vec::new();
    for b in &r.bindings {
        out.push(format!("{} : {} = {}", b.name, b.ty, b.rendered));
    }
    if let Some(v) = &r.value {
        out.push(v.clone());
    }
    let sends = r.events.iter().filter(|e| e.kind == crate::runtime::EventKind::SendRecv).count();
    out.push(format!(
        "[{} events, {} communications, {}]",
        r.events.len(),
        sends,
        if r.quiescent { "quiescent" } else { "step budget reached" }
    ));
    out.join("\n")
}

impl Repl {
    pub fn new(ws: Workspace) -> Self {
        Repl { ws, pending: String::new() }
    }

    /// Handle one line of input; returns the text to print, or `None` to quit.
    pub fn handle_line(&mut self, line: &str) -> Option<String> {
        if let Some(stripped) = line.strip_suffix('\\') {
            self.pending.push_str(stripped);
            self.pending.push('\n');
            return Some(String::new());
        }
        let input = std::mem::take(&mut self.pending) + line;
        let trimmed = input.trim();
        if trimmed.is_empty() {
            return Some(String::new());
        }
        if let Some(cmd) = trimmed.strip_prefix(':') {
            return self.meta(cmd);
        }
        Some(match self.ws.eval(&SourceSegmentList::from_plain_text(&input)) {
            Ok(r) => format_result(&r),
            Err(e) => format_error(&e),
        })
    }

    fn meta(&mut self, cmd: &str) -> Option<String> {
        let mut parts = cmd.split_whitespace();
        let name = parts.next().unwrap_or("");
        let arg = parts.next();
        Some(match (name, arg) {
            ("quit" | "q", _) => return None,
            ("help", _) => HELP.to_string(),
            ("bindings", _) => {
                let bs = self.ws.bindings();
                if bs.is_empty() {
                    "(no bindings)".to_string()
                } else {
                    bs.iter()
                        .map(|b| format!("{} #{} : {} = {}", b.name, b.id, b.ty, b.rendered))
                        .collect::<Vec<_>>()
                        .join("\n")
                }
            }
            ("behaviours", _) => {
                let bs = self.ws.behaviours();
                if bs.is_empty() {
                    "(no behaviours)".to_string()
                } else {
                    bs.iter()
                        .map(|b| {
                            format!(
                                "b{} {} {}{}",
                                b.handle,
                                b.label.as_deref().unwrap_or("-"),
                                b.status.as_str(),
                                if b.suspended { " (detached)" } else { "" }
                            )
                        })
                        .collect::<Vec<_>>()
                        .join("\n")
                }
            }
            ("reify", Some(n)) => match self.ws.binding_id(n) {
                Some(id) => match self.ws.machine.reify_id(id) {
                    Ok(h) => h.to_plain_text(),
                    Err(e) => format_error(&WsError::Runtime(e)),
                },
                None => format!("no binding `{n}`"),
            },
            ("seed", Some(n)) => match n.parse() {
                Ok(s) => {
                    self.ws.reseed(s);
                    format!("seed {s}")
                }
                Err(_) => format!("bad seed `{n}`"),
            },
            ("save", Some(f)) => match self.ws.save_to(std::path::Path::new(f)) {
                Ok(()) => format!("saved {f}"),
                Err(e) => format_error(&e),
            },
            ("load", Some(f)) => match Workspace::load_from(std::path::Path::new(f)) {
                Ok(w) => {
                    self.ws = w;
                    format!("loaded {f}")
                }
                Err(e) => format_error(&e),
            },
            ("trace", _) => crate::runtime::format_log(&self.ws.machine.trace),
            _ => format!("unknown command `:{cmd}` (try :help)"),
        })
    }

    /// Drive the loop over arbitrary input and output streams.
    pub fn run(&mut self, input: impl BufRead, mut output: impl Write, prompt: bool) -> std::io::Result<()> {
        if prompt {
            write!(output, "> ")?;
            output.flush()?;
        }
        for line in input.lines() {
            let line = line?;
            match self.handle_line(&line) {
                Some(s) => {
                    if !s.is_empty() {
                        writeln!(output, "{s}")?;
                    }
                }
                None => break,
            }
            if prompt {
                write!(output, "> ")?;
                output.flush()?;
            }
        }
        Ok(())
    }
}

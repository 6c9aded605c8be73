//! The persistent workspace: bindings, transactional evaluation of inputs,
//! and snapshots.

pub mod repl;
pub mod snapshot;

pub use snapshot::SNAPSHOT_MAGIC;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypercode::MachineLinks;
use crate::runtime::{BehId, EventKind, Fault, Machine, Outcome, Status, TraceEvent, Value};
use crate::syntax::{parse, ParseError, SourceSegmentList, Term, TermKind, TermRef};
use crate::typesys::{check_program, TypeError};

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WsError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Type(#[from] TypeError),
    #[error("{0}")]
    Runtime(#[from] Fault),
    #[error("snapshot: {0}")]
    Snapshot(String),
}

impl WsError {
    pub fn phase(&self) -> &'static str {
        match self {
            WsError::Parse(_) => "parse",
            WsError::Type(_) => "type",
            WsError::Runtime(_) | WsError::Snapshot(_) => "runtime",
        }
    }

    pub fn position(&self) -> Option<(u32, u32)> {
        match self {
            WsError::Parse(e) => Some(e.position()),
            WsError::Type(e) => Some((e.line, e.col)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BindingInfo {
    pub name: String,
    pub id: u64,
    #[serde(rename = "type")]
    pub ty: String,
    pub rendered: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviourInfo {
    pub handle: BehId,
    pub label: Option<String>,
    pub status: Status,
    pub composite: bool,
    pub parts: Vec<BehId>,
    pub parent: Option<BehId>,
    pub suspended: bool,
    pub connections: Vec<(String, u64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub bindings: Vec<BindingInfo>,
    /// Rendering of the last expression statement's value, if any.
    pub value: Option<String>,
    pub events: Vec<TraceEvent>,
    pub quiescent: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Workspace {
    pub machine: Machine,
    pub seed: u64,
    pub step_budget: u64,
    /// Binding name to store id, in definition order; redefinition moves a
    /// name to the end.
    bindings: Vec<(String, u64)>,
}

fn decompose_target(t: &Term) -> Option<&TermRef> {
    match &t.kind {
        TermKind::Decompose(e) => Some(e),
        TermKind::ValueDecl { init, .. } => match &init.kind {
            TermKind::Decompose(e) => Some(e),
            _ => None,
        },
        _ => None,
    }
}

fn mentions_evolution(t: &Term) -> bool {
    matches!(t.kind, TermKind::Compose { .. } | TermKind::Decompose(_) | TermKind::Reflect(_))
        || t.children().iter().any(|c| mentions_evolution(c))
}

impl Workspace {
    pub fn new(seed: u64) -> Self {
        Workspace { machine: Machine::new(seed), seed, step_budget: DEFAULT_STEP_BUDGET, bindings: vec![] }
    }

    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        self.machine.reseed(seed);
    }

    pub fn eval_str(&mut self, src: &str) -> Result<EvalResult, WsError> {
        self.eval(&SourceSegmentList::from_plain_text(src))
    }

    /// Parse, check and run one input. On any error the workspace is left
    /// exactly as it was.
    pub fn eval(&mut self, src: &SourceSegmentList) -> Result<EvalResult, WsError> {
        let saved_machine = self.machine.clone();
        let saved_bindings = self.bindings.clone();
        let start = self.machine.trace.len();
        match self.eval_inner(src) {
            Ok(mut r) => {
                r.events = self.machine.trace[start..].to_vec();
                Ok(r)
            }
            Err(e) => {
                self.machine = saved_machine;
                self.bindings = saved_bindings;
                Err(e)
            }
        }
    }

    fn eval_inner(&mut self, src: &SourceSegmentList) -> Result<EvalResult, WsError> {
        let term = parse(src)?;
        let checked = check_program(&term, &self.machine.global_type_env(), &MachineLinks(&self.machine))?;
        for (n, t) in &checked.aliases {
            self.machine.aliases.insert(n.clone(), t.clone());
        }
        let mut new_bindings = Vec::new();
        let mut value = None;
        for typed in &checked.stmts {
            let t = &typed.term;
            let globals = self.machine.globals.clone();
            if let Some(target) = decompose_target(t) {
                if let Value::Behaviour(h) = self.machine.eval(target, &globals, None)? {
                    self.machine.quiesce(h)?;
                }
                let (_, env) = self.machine.eval_stmt(t, &globals, None)?;
                self.machine.globals = env;
            } else if typed.blocking {
                let spawn = Term::synth(TermKind::Spawn(t.clone()));
                self.machine.eval(&spawn, &globals, None)?;
            } else {
                let (v, env) = self.machine.eval_stmt(t, &globals, None)?;
                self.machine.globals = env;
                if !matches!(v, Value::Unit) {
                    value = Some(v.to_string());
                }
            }
            if let TermKind::ValueDecl { name, .. } = &t.kind {
                let v = self.machine.globals.lookup(name).cloned().unwrap_or(Value::Unit);
                let id = self.machine.store.intern(&v, name);
                self.bindings.retain(|(n, _)| n != name);
                self.bindings.push((name.clone(), id));
                new_bindings.push(self.binding_info(name, id));
            }
            if mentions_evolution(t) {
                self.check_styles()?;
            }
        }
        let outcome = self.machine.run(self.step_budget)?;
        Ok(EvalResult { bindings: new_bindings, value, events: vec![], quiescent: outcome == Outcome::Quiescent })
    }

    fn binding_info(&self, name: &str, id: u64) -> BindingInfo {
        let v = self.machine.store.value(id).cloned().unwrap_or(Value::Unit);
        BindingInfo { name: name.to_string(), id, ty: self.machine.type_of(&v).to_string(), rendered: v.to_string() }
    }

    pub fn bindings(&self) -> Vec<BindingInfo> {
        self.bindings.iter().map(|(n, id)| self.binding_info(n, *id)).collect()
    }

    pub fn binding(&self, name: &str) -> Option<Value> {
        self.bindings.iter().find(|(n, _)| n == name).and_then(|(_, id)| self.machine.store.value(*id).cloned())
    }

    pub fn binding_id(&self, name: &str) -> Option<u64> {
        self.bindings.iter().find(|(n, _)| n == name).map(|(_, id)| *id)
    }

    /// Bind `name` in the workspace scope to an existing value.
    pub fn bind(&mut self, name: &str, v: Value) -> u64 {
        self.machine.set_global(name, v.clone());
        let id = self.machine.store.intern(&v, name);
        self.bindings.retain(|(n, _)| n != name);
        self.bindings.push((name.to_string(), id));
        id
    }

    pub fn behaviours(&mut self) -> Vec<BehaviourInfo> {
        let ids: Vec<BehId> = self.machine.behaviours.keys().copied().collect();
        ids.into_iter()
            .filter_map(|b| {
                let beh = self.machine.behaviours[&b].clone();
                if beh.dissolved {
                    return None;
                }
                Some(BehaviourInfo {
                    handle: b,
                    label: beh.label.clone(),
                    status: self.machine.status(b),
                    composite: beh.is_composite(),
                    parts: beh.parts().to_vec(),
                    parent: beh.parent,
                    suspended: beh.suspended,
                    connections: beh.interface.clone(),
                })
            })
            .collect()
    }

    /// Check every registered style against each live top-level composite
    /// that has a component tagged with one of the style's elements.
    pub fn check_styles(&mut self) -> Result<Vec<crate::styles::ConformanceReport>, WsError> {
        let roots: Vec<BehId> = self
            .machine
            .behaviours
            .values()
            .filter(|b| b.is_composite() && !b.dissolved && b.parent.is_none())
            .map(|b| b.id)
            .collect();
        let styles: Vec<_> = self.machine.styles.all().filter(|s| !s.constraints.is_empty()).cloned().collect();
        let mut reports = Vec::new();
        for h in roots {
            let topo = self.machine.topology(h)?;
            for s in &styles {
                let mut names: BTreeSet<&str> = s.elements.iter().map(|e| e.name.as_str()).collect();
                names.insert(&s.name);
                if !topo.components.iter().any(|c| c.tags.iter().any(|t| names.contains(t.as_str()))) {
                    continue;
                }
                let report = crate::styles::check_constraints(s, &self.machine.styles, &topo)
                    .map_err(|e| WsError::Runtime(Fault::Style(e)))?;
                for v in &report.violations {
                    let w: Vec<String> = v.witness.iter().map(|(a, b)| format!("{a}={b}")).collect();
                    self.machine.emit(
                        EventKind::ConstraintViolation,
                        vec![format!("b{h}")],
                        Some(format!("{}: {} [{}]", v.style, v.constraint, w.join(","))),
                    );
                }
                reports.push(report);
            }
        }
        Ok(reports)
    }

    /// Reports for one style against one behaviour's topology.
    pub fn check_style(&self, style: &str, h: BehId) -> Result<crate::styles::ConformanceReport, WsError> {
        let s = self
            .machine
            .styles
            .get(style)
            .ok_or_else(|| WsError::Runtime(Fault::Style(format!("unknown style `{style}`"))))?;
        let topo = self.machine.topology(h)?;
        crate::styles::check_constraints(s, &self.machine.styles, &topo).map_err(|e| WsError::Runtime(Fault::Style(e)))
    }

    /// Run one machine-level operation transactionally, then schedule.
    pub fn command<T>(
        &mut self,
        f: impl FnOnce(&mut Workspace) -> Result<T, WsError>,
    ) -> Result<(T, Vec<TraceEvent>), WsError> {
        let saved = (self.machine.clone(), self.bindings.clone());
        let start = self.machine.trace.len();
        let r = f(self).and_then(|x| {
            self.machine.run(self.step_budget)?;
            Ok(x)
        });
        match r {
            Ok(x) => Ok((x, self.machine.trace[start..].to_vec())),
            Err(e) => {
                self.machine = saved.0;
                self.bindings = saved.1;
                Err(e)
            }
        }
    }

    pub fn trace_hash(&self) -> String {
        crate::runtime::trace_hash(&self.machine.trace)
    }
}

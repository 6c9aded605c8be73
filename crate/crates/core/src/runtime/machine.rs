//! Machine state: behaviours, threads, channels, locations and closures held
//! in id-keyed arenas. Cloning a machine yields an independent snapshot.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::trace::{EventKind, TraceEvent};
use super::unify::Unifier;
use super::value::*;
use crate::hypercode::ValueStore;
use crate::styles::StyleRegistry;
use crate::syntax::{PathExpr, PathSegment, Term, TermKind, TermRef};
use crate::typesys::{decompose_view_type, TypeRep};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Config {
    /// Steps a decompose may wait for its composite to quiesce.
    pub decompose_timeout: u64,
    /// Check every communicated value against the channel's payload types.
    pub dynamic_types: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config { decompose_timeout: 10_000, dynamic_types: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Error)]
pub enum Fault {
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow")]
    Overflow,
    #[error("sequence index {index} out of range (length {len})")]
    Index { index: u64, len: usize },
    #[error("projection failed: {0}")]
    Projection(String),
    #[error("decompose of b{0} timed out: the composite did not quiesce within {1} steps")]
    QuiescenceTimeout(BehId, u64),
    #[error("behaviour b{0} is not quiescent")]
    NotQuiescent(BehId),
    #[error("cannot resolve unification path `{0}`")]
    UnresolvedPath(String),
    #[error("cannot unify: {0}")]
    UnificationType(String),
    #[error("behaviour b{0} is not a live composite")]
    NotComposite(BehId),
    #[error("behaviour b{0} is already part of composite b{1}")]
    AlreadyComposed(BehId, BehId),
    #[error("runtime type fault: {0}")]
    DynamicType(String),
    #[error("reflect failed: {0}")]
    Reflect(String),
    #[error("step budget of {0} exhausted before the command finished")]
    StepBudget(u64),
    #[error("no stored value with id {0}")]
    UnknownValue(u64),
    #[error("not executable: {0}")]
    NotExecutable(String),
    #[error("style error: {0}")]
    Style(String),
    #[error("internal fault: {0}")]
    Internal(String),
}

impl Fault {
    pub fn code(&self) -> &'static str {
        match self {
            Fault::DivisionByZero => "DivisionByZero",
            Fault::Overflow => "Overflow",
            Fault::Index { .. } => "IndexError",
            Fault::Projection(_) => "ProjectionError",
            Fault::QuiescenceTimeout(..) => "QuiescenceTimeout",
            Fault::NotQuiescent(_) => "NotQuiescent",
            Fault::UnresolvedPath(_) => "UnresolvedPathError",
            Fault::UnificationType(_) => "UnificationTypeError",
            Fault::NotComposite(_) => "NotComposite",
            Fault::AlreadyComposed(..) => "AlreadyComposed",
            Fault::DynamicType(_) => "DynamicTypeError",
            Fault::Reflect(_) => "ReflectError",
            Fault::StepBudget(_) => "StepBudget",
            Fault::UnknownValue(_) => "UnknownValue",
            Fault::NotExecutable(_) => "NotExecutable",
            Fault::Style(_) => "StyleError",
            Fault::Internal(_) => "InternalError",
        }
    }
}

pub type RunResult<T> = Result<T, Fault>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Running,
    Blocked,
    Terminated,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Running => "RUNNING",
            Status::Blocked => "BLOCKED",
            Status::Terminated => "TERMINATED",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum BehKind {
    Simple,
    Composite { parts: Vec<BehId> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Behaviour {
    pub id: BehId,
    pub kind: BehKind,
    pub label: Option<String>,
    pub parent: Option<BehId>,
    /// Connections declared at the start of the body, by name.
    pub interface: Vec<(String, ChanId)>,
    /// Bindings made available with `free`.
    pub exports: Vec<(String, Value)>,
    /// Detached by a decompose and not yet recomposed.
    pub suspended: bool,
    /// A decomposed composite; its parts have been released.
    pub dissolved: bool,
    pub style_tags: BTreeSet<String>,
}

impl Behaviour {
    pub fn parts(&self) -> &[BehId] {
        match &self.kind {
            BehKind::Composite { parts } => parts,
            BehKind::Simple => &[],
        }
    }

    pub fn is_composite(&self) -> bool {
        matches!(self.kind, BehKind::Composite { .. })
    }
}

/// A block being executed: statement index and the scope built so far.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Frame {
    pub block: TermRef,
    pub idx: usize,
    pub env: Env,
}

impl Frame {
    pub fn new(block: TermRef, env: Env) -> Self {
        Frame { block, idx: 0, env }
    }

    pub fn stmts(&self) -> &[TermRef] {
        match &self.block.kind {
            TermKind::Block(s) => s,
            _ => std::slice::from_ref(&self.block),
        }
    }

    pub fn current(&self) -> Option<&TermRef> {
        self.stmts().get(self.idx)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Thread {
    pub id: ThreadId,
    pub behaviour: BehId,
    pub frames: Vec<Frame>,
    /// Composite this thread is waiting to decompose, and since which step.
    pub pending_decompose: Option<(BehId, u64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Machine {
    pub config: Config,
    pub step: u64,
    pub(crate) rng: ChaCha8Rng,
    pub locations: Vec<Location>,
    pub channels: Vec<Channel>,
    pub unifier: Unifier,
    pub closures: Vec<Closure>,
    pub behaviours: BTreeMap<BehId, Behaviour>,
    pub threads: BTreeMap<ThreadId, Thread>,
    next_behaviour: BehId,
    next_thread: ThreadId,
    pub trace: Vec<TraceEvent>,
    pub store: ValueStore,
    pub styles: StyleRegistry,
    /// Workspace bindings; the newest binding of a name wins.
    pub globals: Env,
    pub aliases: BTreeMap<String, TypeRep>,
    pub(crate) blocked_reported: BTreeSet<BehId>,
}

pub fn thread_subject(b: BehId, t: ThreadId) -> String {
    format!("b{b}.t{t}")
}

impl Machine {
    pub fn new(seed: u64) -> Self {
        let mut globals = Env::new();
        for b in Builtin::ALL {
            globals = globals.bind(b.name(), Value::Builtin(b));
        }
        Machine {
            config: Config::default(),
            step: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            locations: vec![],
            channels: vec![],
            unifier: Unifier::default(),
            closures: vec![],
            behaviours: BTreeMap::new(),
            threads: BTreeMap::new(),
            next_behaviour: 1,
            next_thread: 1,
            trace: vec![],
            store: ValueStore::default(),
            styles: StyleRegistry::default(),
            globals,
            aliases: BTreeMap::new(),
            blocked_reported: BTreeSet::new(),
        }
    }

    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    pub fn emit(&mut self, kind: EventKind, subjects: Vec<String>, payload: Option<String>) {
        self.trace.push(TraceEvent::new(self.step, kind, subjects, payload));
    }

    // ---- allocation ----

    pub fn new_location(&mut self, value: Value, ty: TypeRep) -> Value {
        self.locations.push(Location { value, ty });
        Value::Loc(self.locations.len() as u64 - 1)
    }

    pub fn new_channel(&mut self, payload: Vec<TypeRep>, style: Option<&str>) -> Value {
        let styles = style.map(|s| BTreeSet::from([s.to_string()])).unwrap_or_default();
        self.channels.push(Channel { payload, styles });
        Value::Chan(self.channels.len() as u64 - 1)
    }

    pub fn new_closure(&mut self, c: Closure) -> Value {
        self.closures.push(c);
        Value::Closure(self.closures.len() as u64 - 1)
    }

    pub fn closure(&self, id: ClosureId) -> &Closure {
        &self.closures[id as usize]
    }

    pub fn location(&self, id: LocId) -> &Location {
        &self.locations[id as usize]
    }

    pub fn channel(&self, id: ChanId) -> &Channel {
        &self.channels[id as usize]
    }

    pub fn canonical(&self, c: ChanId) -> ChanId {
        self.unifier.canonical(c)
    }

    /// Style tags of a connector: the union over its unification group.
    pub fn channel_styles(&self, c: ChanId) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for m in self.unifier.group(c) {
            out.extend(self.channel(m).styles.iter().cloned());
        }
        out
    }

    fn new_behaviour(&mut self, kind: BehKind, tags: BTreeSet<String>) -> BehId {
        let id = self.next_behaviour;
        self.next_behaviour += 1;
        self.behaviours.insert(
            id,
            Behaviour {
                id,
                kind,
                label: None,
                parent: None,
                interface: vec![],
                exports: vec![],
                suspended: false,
                dissolved: false,
                style_tags: tags,
            },
        );
        id
    }

    pub(crate) fn new_thread(&mut self, behaviour: BehId, frames: Vec<Frame>) -> ThreadId {
        let id = self.next_thread;
        self.next_thread += 1;
        self.threads.insert(id, Thread { id, behaviour, frames, pending_decompose: None });
        id
    }

    pub fn behaviour(&self, id: BehId) -> Option<&Behaviour> {
        self.behaviours.get(&id)
    }

    // ---- types ----

    pub fn type_of(&self, v: &Value) -> TypeRep {
        match v {
            Value::Int(_) => TypeRep::Integer,
            Value::Real(_) => TypeRep::Real,
            Value::Bool(_) => TypeRep::Boolean,
            Value::Str(_) => TypeRep::String,
            Value::Any(..) => TypeRep::Any,
            Value::Loc(id) => TypeRep::location(self.location(*id).ty.clone()),
            Value::Chan(id) => TypeRep::Connection(self.channel(*id).payload.clone()),
            Value::Behaviour(_) => TypeRep::Behaviour,
            Value::Seq(t, _) => TypeRep::sequence(t.clone()),
            Value::View(fs) => TypeRep::View(fs.iter().map(|(n, v)| (n.clone(), self.type_of(v))).collect()),
            Value::Closure(id) => self.closure(*id).ty.clone(),
            Value::Builtin(b) => b.ty(),
            Value::Unit => TypeRep::Behaviour,
        }
    }

    /// Static environment for checking code against the workspace bindings.
    pub fn global_type_env(&self) -> crate::typesys::TypeEnv {
        let mut env = crate::typesys::TypeEnv::new();
        for (n, t) in &self.aliases {
            env = env.bind_alias(n, t.clone());
        }
        let mut visible = self.globals.visible();
        visible.reverse();
        for (n, v) in visible {
            env = env.bind(&n, self.type_of(&v));
        }
        env
    }

    // ---- behaviours ----

    /// Start a new behaviour running `body` in `env`. Leading declarations,
    /// `free` clauses and `parallel` forks run immediately so that the
    /// behaviour's interface is available for composition.
    pub fn spawn_term(&mut self, body: TermRef, env: Env, tags: BTreeSet<String>) -> RunResult<BehId> {
        let b = self.new_behaviour(BehKind::Simple, tags);
        let t = self.new_thread(b, vec![Frame::new(body, env)]);
        self.emit(EventKind::Spawn, vec![format!("b{b}"), thread_subject(b, t)], None);
        self.eager_prefix(t)?;
        Ok(b)
    }

    /// Apply an abstraction in value position.
    pub fn instantiate(&mut self, abs: ClosureId, args: Vec<Value>) -> RunResult<BehId> {
        let c = self.closure(abs).clone();
        if c.kind != ClosureKind::Abstraction || c.params.len() != args.len() {
            return Err(Fault::Internal("instantiate needs an abstraction of matching arity".into()));
        }
        let env = self.closure_env(abs, args);
        let tags = c.style.iter().cloned().collect();
        self.spawn_term(c.body.clone(), env, tags)
    }

    pub fn closure_env(&self, id: ClosureId, args: Vec<Value>) -> Env {
        let c = self.closure(id);
        let mut env = c.env.clone();
        if let Some(n) = &c.self_name {
            env = env.bind(n, Value::Closure(id));
        }
        for (p, a) in c.params.iter().zip(args) {
            env = env.bind(p, a);
        }
        env
    }

    fn eager_prefix(&mut self, t: ThreadId) -> RunResult<()> {
        loop {
            if !self.normalise_thread(t) {
                return Ok(());
            }
            let th = &self.threads[&t];
            let frame = th.frames.last().unwrap();
            let stmt = frame.current().unwrap().clone();
            match &stmt.kind {
                TermKind::ValueDecl { init, .. } if !matches!(init.kind, TermKind::Decompose(_)) => {}
                TermKind::Free(_) | TermKind::TypeDecl { .. } | TermKind::Parallel(_) => {}
                _ => return Ok(()),
            }
            let b = th.behaviour;
            let bound = self.exec_simple(t, &stmt)?;
            if let Some((name, Value::Chan(c))) = bound {
                let beh = self.behaviours.get_mut(&b).unwrap();
                beh.interface.retain(|(n, _)| *n != name);
                beh.interface.push((name, c));
            }
        }
    }

    pub fn apply_free(&mut self, b: BehId, names: &[String], env: &Env) -> RunResult<()> {
        for n in names {
            let v = env.lookup(n).cloned().ok_or_else(|| Fault::Internal(format!("free of unbound `{n}`")))?;
            let beh = self.behaviours.get_mut(&b).unwrap();
            beh.exports.retain(|(m, _)| m != n);
            beh.exports.push((n.clone(), v.clone()));
            if let Value::Chan(c) = v {
                if !beh.interface.iter().any(|(m, _)| m == n) {
                    beh.interface.push((n.clone(), c));
                }
            }
        }
        Ok(())
    }

    /// Threads of `b` and of every behaviour beneath it.
    pub fn threads_under(&self, b: BehId) -> Vec<ThreadId> {
        let mut behs = BTreeSet::new();
        let mut stack = vec![b];
        while let Some(x) = stack.pop() {
            if behs.insert(x) {
                if let Some(beh) = self.behaviours.get(&x) {
                    stack.extend(beh.parts().iter().copied());
                }
            }
        }
        self.threads.values().filter(|t| behs.contains(&t.behaviour)).map(|t| t.id).collect()
    }

    /// A thread is suspended when its behaviour or an enclosing one is.
    pub fn thread_suspended(&self, t: &Thread) -> bool {
        let mut cur = Some(t.behaviour);
        while let Some(b) = cur {
            let beh = &self.behaviours[&b];
            if beh.suspended {
                return true;
            }
            cur = beh.parent;
        }
        false
    }

    pub fn status(&mut self, b: BehId) -> Status {
        let threads = self.threads_under(b);
        if threads.is_empty() {
            return Status::Terminated;
        }
        let enabled = self.enabled_threads();
        if threads.iter().any(|t| enabled.contains(t)) {
            Status::Running
        } else {
            Status::Blocked
        }
    }

    // ---- composition ----

    pub fn compose(
        &mut self,
        parts: Vec<(Option<String>, BehId)>,
        unifications: &[crate::syntax::Unification],
        env: &Env,
    ) -> RunResult<BehId> {
        for (_, p) in &parts {
            if let Some(parent) = self.behaviours[p].parent {
                return Err(Fault::AlreadyComposed(*p, parent));
            }
        }
        let ids: Vec<BehId> = parts.iter().map(|(_, p)| *p).collect();
        let h = self.new_behaviour(BehKind::Composite { parts: ids.clone() }, BTreeSet::new());
        for (label, p) in &parts {
            let beh = self.behaviours.get_mut(p).unwrap();
            beh.parent = Some(h);
            beh.label = label.clone();
            beh.suspended = false;
            self.blocked_reported.remove(p);
        }
        let mut pairs = Vec::new();
        for u in unifications {
            let l = self.resolve_path(h, &u.left, env)?;
            let r = self.resolve_path(h, &u.right, env)?;
            let (lt, rt) = (&self.channel(l).payload, &self.channel(r).payload);
            if lt != rt {
                return Err(Fault::UnificationType(format!(
                    "`{}` carries {} but `{}` carries {}",
                    u.left,
                    TypeRep::Connection(lt.clone()),
                    u.right,
                    TypeRep::Connection(rt.clone())
                )));
            }
            self.unifier.unify(l, r, h);
            pairs.push(format!("c{l}=c{r}"));
        }
        let mut subjects = vec![format!("b{h}")];
        subjects.extend(ids.iter().map(|p| format!("b{p}")));
        let labels: Vec<String> = parts.iter().map(|(l, _)| l.clone().unwrap_or_default()).collect();
        let mut payload = format!("[{}]", labels.join(","));
        if !pairs.is_empty() {
            payload.push_str(&format!(" {}", pairs.join(",")));
        }
        self.emit(EventKind::Compose, subjects, Some(payload));
        Ok(h)
    }

    /// Find the part of composite `h` with the given label.
    fn part_by_label(&self, h: BehId, label: &str) -> Option<BehId> {
        self.behaviours[&h].parts().iter().copied().find(|p| self.behaviours[p].label.as_deref() == Some(label))
    }

    /// Resolve `label(::name)*` against a composite's parts and interfaces,
    /// or else evaluate the path as an expression yielding a connection.
    pub fn resolve_path(&mut self, h: BehId, path: &PathExpr, env: &Env) -> RunResult<ChanId> {
        let unresolved = || Fault::UnresolvedPath(path.to_string());
        if let Some(mut cur) = self.part_by_label(h, &path.base) {
            let mut segs = path.segments.iter().peekable();
            while let Some(seg) = segs.next() {
                let PathSegment::Label(name) = seg else { return Err(unresolved()) };
                if let Some(p) = self.part_by_label(cur, name) {
                    cur = p;
                    continue;
                }
                if segs.peek().is_some() {
                    return Err(unresolved());
                }
                let beh = &self.behaviours[&cur];
                let found = beh.interface.iter().find(|(n, _)| n == name).map(|(_, c)| *c).or_else(|| {
                    beh.exports.iter().find_map(|(n, v)| match v {
                        Value::Chan(c) if n == name => Some(*c),
                        _ => None,
                    })
                });
                return found.ok_or_else(unresolved);
            }
            return Err(unresolved());
        }
        let mut term: TermRef = Term::synth(TermKind::Ident(path.base.clone()));
        for seg in &path.segments {
            term = Term::synth(match seg {
                PathSegment::Index(i) => TermKind::SeqIndex { target: term, index: *i },
                PathSegment::Label(l) => TermKind::LabelQualify { target: term, label: l.clone() },
                PathSegment::Field(f) => TermKind::FieldAccess { target: term, field: f.clone() },
            });
        }
        if env.lookup(&path.base).is_none() {
            return Err(unresolved());
        }
        let mut v = self.eval(&term, env, None)?;
        loop {
            match v {
                Value::Chan(c) => return Ok(c),
                Value::Any(inner, _) => v = *inner,
                Value::Loc(l) => v = self.location(l).value.clone(),
                _ => return Err(unresolved()),
            }
        }
    }

    /// `::label` on a behaviour value: a part, interface connection or
    /// exported binding, packaged as `any`.
    pub fn qualify(&self, b: BehId, label: &str) -> RunResult<Value> {
        if let Some(p) = self.part_by_label(b, label) {
            return Ok(inject_any(Value::Behaviour(p), TypeRep::Behaviour));
        }
        let beh = &self.behaviours[&b];
        if let Some((_, c)) = beh.interface.iter().find(|(n, _)| n == label) {
            let v = Value::Chan(*c);
            return Ok(inject_any(v.clone(), self.type_of(&v)));
        }
        if let Some((_, v)) = beh.exports.iter().find(|(n, _)| n == label) {
            return Ok(inject_any(v.clone(), self.type_of(v)));
        }
        Err(Fault::UnresolvedPath(format!("b{b}::{label}")))
    }

    /// Split a quiescent composite into labelled views, undoing its
    /// unifications and detaching its parts.
    pub fn decompose_now(&mut self, h: BehId) -> RunResult<Value> {
        let live = self.behaviours.get(&h).map(|b| b.is_composite() && !b.dissolved).unwrap_or(false);
        if !live {
            return Err(Fault::NotComposite(h));
        }
        let removed = self.unifier.undo(h);
        let parts = self.behaviours[&h].parts().to_vec();
        let mut views = Vec::new();
        for p in &parts {
            let beh = self.behaviours.get_mut(p).unwrap();
            beh.parent = None;
            beh.suspended = true;
            let beh = self.behaviours[p].clone();
            let conns: Vec<Value> = beh
                .interface
                .iter()
                .map(|(n, c)| {
                    let cv = Value::Chan(*c);
                    Value::View(vec![
                        ("name".into(), Value::Str(n.clone())),
                        ("channel".into(), inject_any(cv.clone(), self.type_of(&cv))),
                    ])
                })
                .collect();
            let exports: Vec<Value> = beh
                .exports
                .iter()
                .map(|(n, v)| {
                    Value::View(vec![
                        ("name".into(), Value::Str(n.clone())),
                        ("entity".into(), inject_any(v.clone(), self.type_of(v))),
                    ])
                })
                .collect();
            let TypeRep::View(vt) = decompose_view_type() else { unreachable!() };
            let conn_ty = match &vt[2].1 {
                TypeRep::Sequence(t) => (**t).clone(),
                _ => unreachable!(),
            };
            let exp_ty = match &vt[3].1 {
                TypeRep::Sequence(t) => (**t).clone(),
                _ => unreachable!(),
            };
            views.push(Value::View(vec![
                ("label".into(), Value::Str(beh.label.clone().unwrap_or_default())),
                ("bhvr".into(), Value::Behaviour(*p)),
                ("connections".into(), Value::Seq(conn_ty, conns)),
                ("exports".into(), Value::Seq(exp_ty, exports)),
            ]));
        }
        self.behaviours.get_mut(&h).unwrap().dissolved = true;
        let mut subjects = vec![format!("b{h}")];
        subjects.extend(parts.iter().map(|p| format!("b{p}")));
        let undone: Vec<String> = removed.iter().map(|(a, b)| format!("c{a}=c{b}")).collect();
        self.emit(EventKind::Decompose, subjects, Some(format!("undo[{}]", undone.join(","))));
        Ok(Value::Seq(decompose_view_type(), views))
    }

    pub fn set_global(&mut self, name: &str, v: Value) {
        self.globals = self.globals.bind(name, v);
    }

    pub fn global(&self, name: &str) -> Option<&Value> {
        self.globals.lookup(name)
    }
}

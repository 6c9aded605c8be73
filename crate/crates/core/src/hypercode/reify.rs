//! Reify values to hyper-code text and reflect text back into values.

use super::subst::link_free;
use crate::runtime::{inject_any, BehId, ChanId, Env, Fault, Machine, RunResult, Status, Value};
use crate::syntax::{
    parse, render_plain, ComposePart, LinkRef, Literal, PathExpr, PathSegment, Segment, SourceSegmentList, Term,
    TermKind, TermRef, Unification,
};
use crate::typesys::{check_term, LinkTypes, TypeRep};

/// Link typing against a machine's value store.
pub struct MachineLinks<'a>(pub &'a Machine);

impl LinkTypes for MachineLinks<'_> {
    fn link_type(&self, id: u64) -> Option<TypeRep> {
        self.0.store.value(id).map(|v| self.0.type_of(v))
    }
}

fn synth(kind: TermKind) -> TermRef {
    Term::synth(kind)
}

impl Machine {
    /// Intern `v` in the value store and return a link to it.
    pub fn link_to(&mut self, v: &Value, display: &str) -> LinkRef {
        let id = self.store.intern(v, display);
        LinkRef { id, display: display.to_string() }
    }

    pub fn display_name(&self, v: &Value) -> String {
        if let Some((n, _)) = self.globals.visible().into_iter().find(|(_, g)| g == v) {
            return n;
        }
        match v {
            Value::Loc(id) => format!("l{id}"),
            Value::Chan(id) => format!("c{id}"),
            Value::Behaviour(id) => format!("b{id}"),
            Value::Closure(id) => format!("f{id}"),
            Value::Builtin(b) => b.name().to_string(),
            other => other.kind_name().to_string(),
        }
    }

    pub fn reify_value(&mut self, v: &Value) -> RunResult<String> {
        let t = self.reify_term(v)?;
        Ok(render_plain(&t))
    }

    /// Source form of a value. Data is written out literally; closures and
    /// quiescent behaviours are written as code whose free names are links;
    /// other references become links.
    pub fn reify_term(&mut self, v: &Value) -> RunResult<TermRef> {
        match v {
            Value::Closure(id) => {
                let c = self.closure(*id).clone();
                let env = self.closure_env_for_reify(*id);
                Ok(self.link_env(&c.literal, &env))
            }
            Value::Behaviour(b) => self.reify_behaviour(*b),
            other => self.reify_data(other),
        }
    }

    fn reify_data(&mut self, v: &Value) -> RunResult<TermRef> {
        Ok(match v {
            Value::Int(n) => synth(TermKind::Literal(Literal::Int(*n))),
            Value::Real(r) => synth(TermKind::Literal(Literal::Real(*r))),
            Value::Bool(b) => synth(TermKind::Literal(Literal::Bool(*b))),
            Value::Str(s) => synth(TermKind::Literal(Literal::Str(s.clone()))),
            Value::Any(inner, _) => synth(TermKind::AnyInject(self.reify_data(inner)?)),
            Value::Seq(t, items) => synth(TermKind::SeqLit {
                elem: Some(t.to_expr()),
                items: items.iter().map(|i| self.reify_data(i)).collect::<RunResult<_>>()?,
            }),
            Value::View(fs) => synth(TermKind::ViewLit(
                fs.iter().map(|(n, x)| Ok((n.clone(), self.reify_data(x)?))).collect::<RunResult<_>>()?,
            )),
            Value::Unit => return Err(Fault::Reflect("statements have no value to reify".into())),
            r => {
                let d = self.display_name(r);
                synth(TermKind::Link(self.link_to(r, &d)))
            }
        })
    }

    fn closure_env_for_reify(&self, id: u64) -> Env {
        let c = self.closure(id);
        match &c.self_name {
            Some(n) => c.env.bind(n, Value::Closure(id)),
            None => c.env.clone(),
        }
    }

    /// Replace the free names of `t` bound in `env` (or the workspace) by links.
    fn link_env(&mut self, t: &TermRef, env: &Env) -> TermRef {
        let mut pending: Vec<(String, Value)> = Vec::new();
        let _ = link_free(t, &mut |n| {
            if let Some(v) = env.lookup(n).or_else(|| self.globals.lookup(n)) {
                pending.push((n.to_string(), v.clone()));
            }
            None
        });
        let mut links = std::collections::BTreeMap::new();
        for (n, v) in pending {
            let l = self.link_to(&v, &n);
            links.insert(n, l);
        }
        link_free(t, &mut |n| links.get(n).cloned())
    }

    /// A composite is written as the composition that would build it, with
    /// its parts as links and its own unifications as label paths.
    fn reify_composite(&mut self, b: BehId, beh: &crate::runtime::Behaviour) -> TermRef {
        let mut parts = Vec::new();
        for p in beh.parts() {
            let label = self.behaviours[p].label.clone();
            let display = label.clone().unwrap_or_else(|| format!("b{p}"));
            let l = self.link_to(&Value::Behaviour(*p), &display);
            parts.push(ComposePart { label, expr: synth(TermKind::Link(l)) });
        }
        let mut unifications = Vec::new();
        for e in self.unifier.edges().iter().filter(|e| e.owner == b) {
            if let (Some(left), Some(right)) = (self.path_to(b, e.a), self.path_to(b, e.b)) {
                unifications.push(Unification { left, right });
            }
        }
        synth(TermKind::Compose { parts, unifications })
    }

    fn path_to(&self, h: BehId, c: ChanId) -> Option<PathExpr> {
        for p in self.behaviours[&h].parts() {
            let part = &self.behaviours[p];
            let Some(label) = part.label.clone() else { continue };
            if let Some((n, _)) = part.interface.iter().find(|(_, ch)| *ch == c) {
                return Some(PathExpr { base: label, segments: vec![PathSegment::Label(n.clone())] });
            }
            if part.is_composite() {
                if let Some(inner) = self.path_to(*p, c) {
                    let mut segments = vec![PathSegment::Label(inner.base)];
                    segments.extend(inner.segments);
                    return Some(PathExpr { base: label, segments });
                }
            }
        }
        None
    }

    fn reify_behaviour(&mut self, b: BehId) -> RunResult<TermRef> {
        let Some(beh) = self.behaviours.get(&b).cloned() else {
            return Err(Fault::Reflect(format!("no behaviour b{b}")));
        };
        if beh.is_composite() {
            return Ok(self.reify_composite(b, &beh));
        }
        if self.status(b) == Status::Running {
            return Err(Fault::NotQuiescent(b));
        }
        let mut stmts: Vec<TermRef> = Vec::new();
        let mut declared = Vec::new();
        for (n, c) in &beh.interface {
            declared.push((n.clone(), Value::Chan(*c)));
        }
        for (n, v) in &beh.exports {
            if !declared.iter().any(|(m, _)| m == n) {
                declared.push((n.clone(), v.clone()));
            }
        }
        for (n, v) in declared {
            let l = self.link_to(&v, &n);
            stmts.push(synth(TermKind::ValueDecl { name: n, ty: None, init: synth(TermKind::Link(l)) }));
        }
        if !beh.exports.is_empty() {
            stmts.push(synth(TermKind::Free(beh.exports.iter().map(|(n, _)| n.clone()).collect())));
        }
        let threads: Vec<_> = self.threads.values().filter(|t| t.behaviour == b).cloned().collect();
        let mut residuals = Vec::new();
        for th in threads {
            let mut acc: Option<TermRef> = None;
            for frame in th.frames.iter().rev() {
                let rest: Vec<TermRef> =
                    frame.stmts()[frame.idx..].iter().map(|s| self.link_env(s, &frame.env)).collect();
                let mut block = Vec::new();
                if let Some(a) = acc.take() {
                    block.push(a);
                }
                block.extend(rest);
                if !block.is_empty() {
                    acc = Some(if block.len() == 1 { block.pop().unwrap() } else { synth(TermKind::Block(block)) });
                }
            }
            if let Some(a) = acc {
                residuals.push(a);
            }
        }
        match residuals.len() {
            0 => {}
            1 => stmts.push(residuals.pop().unwrap()),
            _ => stmts.push(synth(TermKind::Parallel(residuals))),
        }
        Ok(synth(TermKind::Block(stmts)))
    }

    /// Parse, check and evaluate hyper-code text in the workspace scope.
    pub fn reflect_source(&mut self, src: &SourceSegmentList) -> RunResult<(Value, TypeRep)> {
        let mut src = src.clone();
        for seg in &mut src.segments {
            if let Segment::Link { id, display } = seg {
                if display.is_empty() {
                    if let Some(e) = self.store.get(*id) {
                        *display = e.display.clone();
                    }
                }
            }
        }
        let parsed = parse(&src).map_err(|e| Fault::Reflect(e.to_string()))?;
        let term = match &parsed.kind {
            TermKind::Block(s) if s.len() == 1 => s[0].clone(),
            _ => parsed.clone(),
        };
        let tenv = self.global_type_env();
        let typed = check_term(&term, &tenv, &MachineLinks(self)).map_err(|e| Fault::Reflect(e.to_string()))?;
        let globals = self.globals.clone();
        let v = match &typed.term.kind {
            TermKind::AbstractionLit { .. } | TermKind::FunctionLit { .. } => {
                self.make_closure(&typed.term, &globals, None)?
            }
            _ => self.eval(&typed.term, &globals, None)?,
        };
        Ok((v, typed.ty))
    }

    pub fn reflect_text(&mut self, text: &str) -> RunResult<Value> {
        let (v, t) = self.reflect_source(&SourceSegmentList::from_plain_text(text))?;
        Ok(inject_any(v, t))
    }
}

//! Static checking and elaboration. The checker returns a copy of the term
//! with aliases expanded, implicit location dereferences made explicit
//! (`Deref`) and behaviour terms in value position wrapped in `Spawn`.

use std::collections::BTreeSet;
use std::rc::Rc;

use super::{decompose_result_type, equivalent, TypeEnv, TypeError, TypeRep};
use crate::styles::StyleDef;
use crate::syntax::*;

/// Supplies the types of values referenced by hyper-code links.
pub trait LinkTypes {
    fn link_type(&self, id: u64) -> Option<TypeRep>;
}

pub struct NoLinks;

impl LinkTypes for NoLinks {
    fn link_type(&self, _: u64) -> Option<TypeRep> {
        None
    }
}

/// An elaborated term with its static type. `action` marks terms that are
/// statements of a behaviour (their type is `behaviour`); `blocking` marks
/// terms whose execution may wait for a communication partner.
#[derive(Debug, Clone)]
pub struct Typed {
    pub term: TermRef,
    pub ty: TypeRep,
    pub action: bool,
    pub blocking: bool,
}

#[derive(Debug, Clone)]
pub struct Checked {
    pub term: TermRef,
    /// One entry per top-level statement, in order.
    pub stmts: Vec<Typed>,
    pub env: TypeEnv,
    pub bindings: Vec<(String, TypeRep)>,
    pub aliases: Vec<(String, TypeRep)>,
    pub styles: Vec<Rc<StyleDef>>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Pos {
    Stmt,
    Value,
}

type R<T> = Result<T, TypeError>;

/// Check a top-level program. Declarations extend the returned environment;
/// blocking statements do not bind their receive variables at top level
/// because they run as separate behaviours.
pub fn check_program(t: &Term, env: &TypeEnv, links: &dyn LinkTypes) -> R<Checked> {
    let mut c = Checker { links, in_function: false };
    let stmts: Vec<TermRef> = match &t.kind {
        TermKind::Block(s) => s.clone(),
        _ => vec![Rc::new(t.clone())],
    };
    let mut env = env.clone();
    let mut out = Checked {
        term: Term::synth(TermKind::Block(vec![])),
        stmts: vec![],
        env: TypeEnv::new(),
        bindings: vec![],
        aliases: vec![],
        styles: vec![],
    };
    for s in &stmts {
        let (typed, binds) = c.stmt(s, &env)?;
        match &s.kind {
            TermKind::ValueDecl { .. } => {
                for (n, t) in &binds {
                    out.bindings.push((n.clone(), t.clone()));
                }
            }
            TermKind::TypeDecl { name, .. } => {
                if let TermKind::TypeDecl { ty, .. } = &typed.term.kind {
                    let rep = env.resolve(ty, s.span)?;
                    out.aliases.push((name.clone(), rep));
                }
            }
            TermKind::StyleDecl(def) => out.styles.push(def.clone()),
            _ => {}
        }
        if !matches!(s.kind, TermKind::Receive { .. }) {
            env = c.extend(&env, s, &typed, &binds)?;
        }
        out.stmts.push(typed);
    }
    out.term =
        Rc::new(Term { kind: TermKind::Block(out.stmts.iter().map(|t| t.term.clone()).collect()), span: t.span });
    out.env = env;
    Ok(out)
}

/// Check a single term in value position.
pub fn check_term(t: &Term, env: &TypeEnv, links: &dyn LinkTypes) -> R<Typed> {
    let mut c = Checker { links, in_function: false };
    c.value(t, env)
}

struct Checker<'a> {
    links: &'a dyn LinkTypes,
    in_function: bool,
}

fn mk(kind: TermKind, span: Span) -> TermRef {
    Rc::new(Term { kind, span })
}

fn plain(term: TermRef, ty: TypeRep) -> Typed {
    Typed { term, ty, action: false, blocking: false }
}

fn action(term: TermRef, blocking: bool) -> Typed {
    Typed { term, ty: TypeRep::Behaviour, action: true, blocking }
}

/// Does this statement (after elaboration) start with a communication guard?
fn first_is_guard(t: &Term) -> bool {
    match &t.kind {
        TermKind::Send { .. } | TermKind::Receive { .. } => true,
        TermKind::Block(s) => s.first().map(|f| first_is_guard(f)).unwrap_or(false),
        _ => false,
    }
}

fn guarded(body: &Term) -> bool {
    match &body.kind {
        TermKind::Block(s) => s.first().map(|f| guarded(f)).unwrap_or(false),
        TermKind::Choose(bs) => bs.iter().all(|b| first_is_guard(b)),
        _ => first_is_guard(body),
    }
}

/// First blocking construct that would run synchronously inside a function.
fn find_blocking(t: &Term) -> Option<Span> {
    match &t.kind {
        TermKind::Spawn(_) | TermKind::AbstractionLit { .. } | TermKind::FunctionLit { .. } => None,
        TermKind::Send { .. }
        | TermKind::Receive { .. }
        | TermKind::Replicate(_)
        | TermKind::Choose(_)
        | TermKind::Parallel(_)
        | TermKind::Decompose(_) => Some(t.span),
        _ => t.children().into_iter().find_map(|c| find_blocking(c)),
    }
}

fn is_simple_channel(t: &Term) -> bool {
    match &t.kind {
        TermKind::Ident(_) | TermKind::Link(_) => true,
        TermKind::FieldAccess { target, .. } | TermKind::SeqIndex { target, .. } | TermKind::Deref(target) => {
            is_simple_channel(target)
        }
        _ => false,
    }
}

impl<'a> Checker<'a> {
    fn resolve(&self, env: &TypeEnv, t: &TypeExpr, span: Span) -> R<TypeRep> {
        env.resolve(t, span)
    }

    /// Insert dereferences until the type has no outer location, so that
    /// a structural operation can be applied.
    fn strip(&self, mut t: Typed) -> Typed {
        while let TypeRep::Location(inner) = t.ty.clone() {
            let span = t.term.span;
            t = plain(mk(TermKind::Deref(t.term), span), *inner);
        }
        t
    }

    fn coerce(&self, t: Typed, expected: &TypeRep) -> R<TermRef> {
        if equivalent(&t.ty, expected) {
            return Ok(t.term);
        }
        if let TypeRep::Location(inner) = &t.ty {
            let span = t.term.span;
            let d = plain(mk(TermKind::Deref(t.term.clone()), span), (**inner).clone());
            if let Ok(r) = self.coerce(d, expected) {
                return Ok(r);
            }
        }
        Err(TypeError::mismatch(t.term.span, expected, &t.ty))
    }

    fn value(&mut self, t: &Term, env: &TypeEnv) -> R<Typed> {
        if let TermKind::Decompose(_) = t.kind {
            return Err(TypeError::new(
                t.span,
                "E_PLACEMENT",
                "decompose must be a statement or the whole initialiser of a value declaration",
            ));
        }
        let typed = self.term(t, env, Pos::Value)?;
        Ok(self.spawn_if_behaviour(typed))
    }

    fn spawn_if_behaviour(&self, typed: Typed) -> Typed {
        if typed.action || typed.blocking {
            let span = typed.term.span;
            plain(mk(TermKind::Spawn(typed.term), span), TypeRep::Behaviour)
        } else {
            typed
        }
    }

    fn value_as(&mut self, t: &Term, env: &TypeEnv, expected: &TypeRep) -> R<TermRef> {
        let v = self.value(t, env)?;
        self.coerce(v, expected)
    }

    /// Check a statement; returns names it binds for the rest of its block.
    fn stmt(&mut self, t: &Term, env: &TypeEnv) -> R<(Typed, Vec<(String, TypeRep)>)> {
        match &t.kind {
            TermKind::ValueDecl { name, ty, init } => {
                let declared = match ty {
                    Some(te) => Some(self.resolve(env, te, t.span)?),
                    None => None,
                };
                let inner_env = match (&init.kind, &declared) {
                    (TermKind::FunctionLit { .. } | TermKind::AbstractionLit { .. }, _) => {
                        let lit_ty = self.literal_type(init, env)?;
                        env.bind(name, declared.clone().unwrap_or(lit_ty))
                    }
                    _ => env.clone(),
                };
                let (init_t, blocking) = if let TermKind::Decompose(target) = &init.kind {
                    let d = self.decompose(init, target, env)?;
                    (d, true)
                } else {
                    (self.value(init, &inner_env)?, false)
                };
                let (init_term, bound_ty) = match &declared {
                    Some(d) => (self.coerce(init_t, d)?, d.clone()),
                    None => (init_t.term, init_t.ty),
                };
                let term = mk(
                    TermKind::ValueDecl {
                        name: name.clone(),
                        ty: declared.as_ref().map(TypeRep::to_expr),
                        init: init_term,
                    },
                    t.span,
                );
                Ok((action(term, blocking), vec![(name.clone(), bound_ty)]))
            }
            TermKind::Decompose(target) => {
                let mut d = self.decompose(t, target, env)?;
                d.blocking = true;
                Ok((d, vec![]))
            }
            TermKind::Ident(_) | TermKind::Link(_) => {
                let typed = self.term(t, env, Pos::Stmt)?;
                if typed.ty == TypeRep::Behaviour {
                    return Err(TypeError::new(
                        t.span,
                        "E_BEHAVIOUR_STMT",
                        "a behaviour value cannot be used as a statement; apply an abstraction instead",
                    ));
                }
                Ok((typed, vec![]))
            }
            TermKind::Receive { .. } => {
                let typed = self.term(t, env, Pos::Stmt)?;
                let binds = self.receive_binds(&typed)?;
                Ok((typed, binds))
            }
            _ => {
                let typed = self.term(t, env, Pos::Stmt)?;
                if self.in_function && typed.action && typed.blocking {
                    if let TermKind::Apply { .. } = typed.term.kind {
                        return Ok((self.spawn_if_behaviour(typed), vec![]));
                    }
                }
                Ok((typed, vec![]))
            }
        }
    }

    fn receive_binds(&self, typed: &Typed) -> R<Vec<(String, TypeRep)>> {
        let TermKind::Receive { binders, .. } = &typed.term.kind else { return Ok(vec![]) };
        let empty = TypeEnv::new();
        binders
            .iter()
            .map(|b| {
                let ty = b.ty.as_ref().expect("elaborated binders carry types");
                Ok((b.name.clone(), empty.resolve(ty, typed.term.span)?))
            })
            .collect()
    }

    fn extend(&self, env: &TypeEnv, s: &Term, typed: &Typed, binds: &[(String, TypeRep)]) -> R<TypeEnv> {
        let mut env = env.clone();
        if let TermKind::TypeDecl { name, ty } = &s.kind {
            let rep = env.resolve(ty, s.span)?;
            env = env.bind_alias(name, rep);
        }
        let _ = typed;
        for (n, t) in binds {
            env = env.bind(n, t.clone());
        }
        Ok(env)
    }

    fn check_placement(&self, stmts: &[TermRef], i: usize) -> R<()> {
        let s = &stmts[i];
        if i + 1 < stmts.len() {
            if let TermKind::Replicate(_) | TermKind::Parallel(_) = s.kind {
                return Err(TypeError::new(
                    s.span,
                    "E_PLACEMENT",
                    "replicate and parallel must be the last statement of their block",
                ));
            }
        }
        Ok(())
    }

    fn literal_type(&self, lit: &Term, env: &TypeEnv) -> R<TypeRep> {
        match &lit.kind {
            TermKind::FunctionLit { params, result, .. } => Ok(TypeRep::function(
                params.iter().map(|p| self.resolve(env, &p.ty, lit.span)).collect::<R<_>>()?,
                self.resolve(env, result, lit.span)?,
            )),
            TermKind::AbstractionLit { params, .. } => {
                Ok(TypeRep::Abstraction(params.iter().map(|p| self.resolve(env, &p.ty, lit.span)).collect::<R<_>>()?))
            }
            _ => unreachable!("literal_type on non-literal"),
        }
    }

    fn decompose(&mut self, t: &Term, target: &Term, env: &TypeEnv) -> R<Typed> {
        let tt = self.value_as(target, env, &TypeRep::Behaviour)?;
        Ok(Typed {
            term: mk(TermKind::Decompose(tt), t.span),
            ty: decompose_result_type(),
            action: false,
            blocking: true,
        })
    }

    fn block(&mut self, t: &Term, stmts: &[TermRef], env: &TypeEnv) -> R<Typed> {
        let mut env = env.clone();
        let mut out = Vec::with_capacity(stmts.len());
        let mut blocking = false;
        let mut last: Option<Typed> = None;
        for (i, s) in stmts.iter().enumerate() {
            self.check_placement(stmts, i)?;
            let (typed, binds) = self.stmt(s, &env)?;
            env = self.extend(&env, s, &typed, &binds)?;
            blocking |= typed.blocking;
            out.push(typed.term.clone());
            last = Some(typed);
        }
        let term = mk(TermKind::Block(out), t.span);
        let ends_in_action = match (&last, stmts.last()) {
            (None, _) => true,
            (Some(l), Some(s)) => {
                l.action
                    || matches!(
                        s.kind,
                        TermKind::ValueDecl { .. }
                            | TermKind::TypeDecl { .. }
                            | TermKind::Free(_)
                            | TermKind::StyleDecl(_)
                            | TermKind::Decompose(_)
                    )
            }
            _ => true,
        };
        if ends_in_action {
            return Ok(action(term, blocking));
        }
        let last = last.unwrap();
        if blocking {
            return Ok(action(term, true));
        }
        Ok(plain(term, last.ty))
    }

    fn term(&mut self, t: &Term, env: &TypeEnv, pos: Pos) -> R<Typed> {
        use TermKind as K;
        let span = t.span;
        match &t.kind {
            K::Literal(l) => {
                let ty = match l {
                    Literal::Int(_) => TypeRep::Integer,
                    Literal::Real(_) => TypeRep::Real,
                    Literal::Bool(_) => TypeRep::Boolean,
                    Literal::Str(_) => TypeRep::String,
                };
                Ok(plain(Rc::new(t.clone()), ty))
            }
            K::Ident(n) => match env.lookup(n) {
                Some(ty) => Ok(plain(Rc::new(t.clone()), ty.clone())),
                None => Err(TypeError::new(span, "E_UNBOUND", format!("unbound identifier `{n}`"))),
            },
            K::Link(l) => match self.links.link_type(l.id) {
                Some(ty) => Ok(plain(Rc::new(t.clone()), ty)),
                None => Err(TypeError::new(
                    span,
                    "E_UNBOUND_LINK",
                    format!("link `{}#{}` does not refer to a stored value", l.display, l.id),
                )),
            },
            K::Block(stmts) => self.block(t, stmts, env),
            K::ValueDecl { .. } | K::Decompose(_) | K::Receive { .. } if pos == Pos::Value => {
                if let K::Decompose(_) = t.kind {
                    return self.value(t, env);
                }
                let (typed, _) = self.stmt(t, env)?;
                Ok(typed)
            }
            K::ValueDecl { .. } | K::Decompose(_) => Ok(self.stmt(t, env)?.0),
            K::TypeDecl { name, ty } => {
                let rep = self.resolve(env, ty, span)?;
                let _ = rep;
                Ok(action(mk(K::TypeDecl { name: name.clone(), ty: ty.clone() }, span), false))
            }
            K::StyleDecl(_) => Ok(action(Rc::new(t.clone()), false)),
            K::Free(names) => {
                for n in names {
                    if env.lookup(n).is_none() {
                        return Err(TypeError::new(span, "E_UNBOUND", format!("cannot free unbound `{n}`")));
                    }
                }
                Ok(action(Rc::new(t.clone()), false))
            }
            K::Apply { callee, args } => {
                let c = self.value(callee, env)?;
                let c = self.strip(c);
                let (params, result) = match &c.ty {
                    TypeRep::Function(ps, r) => (ps.clone(), Some((**r).clone())),
                    TypeRep::Abstraction(ps) => (ps.clone(), None),
                    other => {
                        return Err(TypeError::new(
                            span,
                            "E_NOT_CALLABLE",
                            format!("cannot apply a value of type {other}"),
                        ))
                    }
                };
                if params.len() != args.len() {
                    return Err(TypeError::new(
                        span,
                        "E_ARITY",
                        format!("expected {} arguments, found {}", params.len(), args.len()),
                    ));
                }
                let args = args.iter().zip(&params).map(|(a, p)| self.value_as(a, env, p)).collect::<R<Vec<_>>>()?;
                let term = mk(K::Apply { callee: c.term, args }, span);
                Ok(match result {
                    Some(r) => plain(term, r),
                    None => action(term, true),
                })
            }
            K::AbstractionLit { params, style, body } => {
                let (ps, benv) = self.params(params, env, span)?;
                let saved = std::mem::replace(&mut self.in_function, false);
                let b = self.stmt(body, &benv);
                self.in_function = saved;
                let (b, _) = b?;
                let params =
                    params.iter().zip(&ps).map(|(p, t)| Param { name: p.name.clone(), ty: t.to_expr() }).collect();
                Ok(plain(
                    mk(K::AbstractionLit { params, style: style.clone(), body: b.term }, span),
                    TypeRep::Abstraction(ps),
                ))
            }
            K::FunctionLit { params, result, body } => {
                let (ps, benv) = self.params(params, env, span)?;
                let res = self.resolve(env, result, span)?;
                let saved = std::mem::replace(&mut self.in_function, true);
                let b = self.term(body, &benv, Pos::Value);
                self.in_function = saved;
                let b = b?;
                if res != TypeRep::Behaviour || !(b.action || b.blocking) {
                    if let Some(at) = find_blocking(&b.term) {
                        return Err(TypeError::new(
                            at,
                            "E_FUNCTION_COMM",
                            "function bodies cannot communicate; use an abstraction",
                        ));
                    }
                }
                let b = self.spawn_if_behaviour(b);
                let b = self.coerce(b, &res)?;
                let params =
                    params.iter().zip(&ps).map(|(p, t)| Param { name: p.name.clone(), ty: t.to_expr() }).collect();
                Ok(plain(
                    mk(K::FunctionLit { params, result: res.to_expr(), body: b }, span),
                    TypeRep::function(ps, res),
                ))
            }
            K::ConnectionNew { payload, style } => {
                let ps = payload.iter().map(|p| self.resolve(env, p, span)).collect::<R<Vec<_>>>()?;
                Ok(plain(
                    mk(
                        K::ConnectionNew { payload: ps.iter().map(TypeRep::to_expr).collect(), style: style.clone() },
                        span,
                    ),
                    TypeRep::Connection(ps),
                ))
            }
            K::LocationNew(e) => {
                let v = self.value(e, env)?;
                Ok(plain(mk(K::LocationNew(v.term), span), TypeRep::location(v.ty)))
            }
            K::Assign { target, value } => {
                let tgt = self.value(target, env)?;
                let TypeRep::Location(inner) = tgt.ty.clone() else {
                    return Err(TypeError::new(
                        target.span,
                        "E_ASSIGN",
                        format!("assignment target must be a location, found {}", tgt.ty),
                    ));
                };
                let v = self.value(value, env)?;
                let v = self.coerce(v, &inner).map_err(|mut e| {
                    e.code = "E_ASSIGN".into();
                    e
                })?;
                Ok(action(mk(K::Assign { target: tgt.term, value: v }, span), false))
            }
            K::Send { channel, payload } => {
                let (ch, ps) = self.channel(channel, env)?;
                if ps.len() != payload.len() {
                    return Err(TypeError::new(
                        span,
                        "E_ARITY",
                        format!("connection carries {} values, send has {}", ps.len(), payload.len()),
                    ));
                }
                let payload = payload.iter().zip(&ps).map(|(p, t)| self.value_as(p, env, t)).collect::<R<Vec<_>>>()?;
                Ok(action(mk(K::Send { channel: ch, payload }, span), true))
            }
            K::Receive { channel, binders } => {
                let (ch, ps) = self.channel(channel, env)?;
                if ps.len() != binders.len() {
                    return Err(TypeError::new(
                        span,
                        "E_ARITY",
                        format!("connection carries {} values, receive binds {}", ps.len(), binders.len()),
                    ));
                }
                let mut out = Vec::new();
                for (b, p) in binders.iter().zip(&ps) {
                    if let Some(bt) = &b.ty {
                        let r = self.resolve(env, bt, span)?;
                        if !equivalent(&r, p) {
                            return Err(TypeError::mismatch(span, p, &r));
                        }
                    }
                    out.push(Binder { name: b.name.clone(), ty: Some(p.to_expr()) });
                }
                Ok(action(mk(K::Receive { channel: ch, binders: out }, span), true))
            }
            K::Replicate(body) => {
                let (b, _) = self.stmt(body, env)?;
                if !guarded(&b.term) {
                    return Err(TypeError::new(
                        span,
                        "E_UNGUARDED",
                        "replicated body must start with a communication or a choice of communications",
                    ));
                }
                Ok(action(mk(K::Replicate(b.term), span), true))
            }
            K::Choose(bs) | K::Parallel(bs) => {
                let mut out = Vec::new();
                for b in bs {
                    let (typed, _) = self.stmt(b, env)?;
                    out.push(typed.term);
                }
                let kind = if let K::Choose(_) = t.kind { K::Choose(out) } else { K::Parallel(out) };
                Ok(action(mk(kind, span), true))
            }
            K::Compose { parts, unifications } => {
                let mut labels = BTreeSet::new();
                let mut out = Vec::new();
                for p in parts {
                    if let Some(l) = &p.label {
                        if !labels.insert(l.clone()) {
                            return Err(TypeError::new(span, "E_LABEL", format!("duplicate label `{l}`")));
                        }
                    }
                    let e = self.value_as(&p.expr, env, &TypeRep::Behaviour)?;
                    out.push(ComposePart { label: p.label.clone(), expr: e });
                }
                for u in unifications {
                    for path in [&u.left, &u.right] {
                        if !labels.contains(&path.base) && env.lookup(&path.base).is_none() {
                            return Err(TypeError::new(
                                span,
                                "E_UNBOUND",
                                format!("unification path `{path}` names neither a label nor a value"),
                            ));
                        }
                    }
                }
                Ok(plain(mk(K::Compose { parts: out, unifications: unifications.clone() }, span), TypeRep::Behaviour))
            }
            K::Reify(e) => {
                let v = self.value(e, env)?;
                Ok(plain(mk(K::Reify(v.term), span), TypeRep::String))
            }
            K::Reflect(e) => {
                let v = self.value_as(e, env, &TypeRep::String)?;
                Ok(plain(mk(K::Reflect(v), span), TypeRep::Any))
            }
            K::ViewLit(fields) => {
                let mut seen = BTreeSet::new();
                let mut out = Vec::new();
                let mut tys = Vec::new();
                for (n, e) in fields {
                    if !seen.insert(n.clone()) {
                        return Err(TypeError::new(span, "E_DUP_FIELD", format!("duplicate view field `{n}`")));
                    }
                    let v = self.value(e, env)?;
                    tys.push((n.clone(), v.ty));
                    out.push((n.clone(), v.term));
                }
                Ok(plain(mk(K::ViewLit(out), span), TypeRep::View(tys)))
            }
            K::SeqLit { elem, items } => {
                let mut elem_ty = match elem {
                    Some(e) => Some(self.resolve(env, e, span)?),
                    None => None,
                };
                let mut out = Vec::new();
                for it in items {
                    let v = self.value(it, env)?;
                    match &elem_ty {
                        Some(et) => out.push(self.coerce(v, et)?),
                        None => {
                            elem_ty = Some(v.ty.clone());
                            out.push(v.term);
                        }
                    }
                }
                let Some(et) = elem_ty else {
                    return Err(TypeError::new(
                        span,
                        "E_SEQ_ELEM",
                        "an empty sequence needs an element type, e.g. sequence[integer]()",
                    ));
                };
                Ok(plain(mk(K::SeqLit { elem: Some(et.to_expr()), items: out }, span), TypeRep::sequence(et)))
            }
            K::FieldAccess { target, field } => {
                let v = self.value(target, env)?;
                let v = self.strip(v);
                let TypeRep::View(fs) = &v.ty else {
                    return Err(TypeError::new(
                        span,
                        "E_FIELD",
                        format!("field access `.{field}` on non-view type {}", v.ty),
                    ));
                };
                let Some((_, ft)) = fs.iter().find(|(n, _)| n == field) else {
                    return Err(TypeError::new(span, "E_FIELD", format!("view {} has no field `{field}`", v.ty)));
                };
                let ft = ft.clone();
                Ok(plain(mk(K::FieldAccess { target: v.term, field: field.clone() }, span), ft))
            }
            K::SeqIndex { target, index } => {
                let v = self.value(target, env)?;
                let v = self.strip(v);
                let TypeRep::Sequence(et) = &v.ty else {
                    return Err(TypeError::new(
                        span,
                        "E_INDEX",
                        format!("`::{index}` applies to sequences, found {}", v.ty),
                    ));
                };
                let et = (**et).clone();
                Ok(plain(mk(K::SeqIndex { target: v.term, index: *index }, span), et))
            }
            K::LabelQualify { target, label } => {
                let v = self
                    .value_as(target, env, &TypeRep::Behaviour)
                    .map_err(|_| TypeError::new(span, "E_LABEL", format!("`::{label}` applies to behaviours")))?;
                Ok(plain(mk(K::LabelQualify { target: v, label: label.clone() }, span), TypeRep::Any))
            }
            K::AnyInject(e) => {
                let v = self.value(e, env)?;
                Ok(plain(mk(K::AnyInject(v.term), span), TypeRep::Any))
            }
            K::Typecase { scrutinee, arms, default } => {
                let s = self.value_as(scrutinee, env, &TypeRep::Any)?;
                let mut results: Vec<Typed> = Vec::new();
                let mut out_arms = Vec::new();
                for a in arms {
                    let at = self.resolve(env, &a.ty, span)?;
                    let aenv = env.bind(&a.binder, at.clone());
                    let b = self.branch(&a.body, &aenv, pos)?;
                    out_arms.push(TypecaseArm { binder: a.binder.clone(), ty: at.to_expr(), body: b.term.clone() });
                    results.push(b);
                }
                let mut out_default = None;
                if let Some(d) = default {
                    let b = self.branch(d, env, pos)?;
                    out_default = Some(b.term.clone());
                    results.push(b);
                }
                let term = mk(K::Typecase { scrutinee: s, arms: out_arms, default: out_default }, span);
                self.join_branches(term, results, pos)
            }
            K::If { cond, then_branch, else_branch } => {
                let c = self.value_as(cond, env, &TypeRep::Boolean)?;
                let a = self.branch(then_branch, env, pos)?;
                let b = self.branch(else_branch, env, pos)?;
                let term = mk(K::If { cond: c, then_branch: a.term.clone(), else_branch: b.term.clone() }, span);
                self.join_branches(term, vec![a, b], pos)
            }
            K::Binary { op, lhs, rhs } => self.binary(*op, lhs, rhs, env, span),
            K::Unary { op, operand } => {
                let v = self.value(operand, env)?;
                let v = self.strip(v);
                let ok = match op {
                    UnOp::Neg => matches!(v.ty, TypeRep::Integer | TypeRep::Real),
                    UnOp::Not => v.ty == TypeRep::Boolean,
                };
                if !ok {
                    return Err(TypeError::new(
                        span,
                        "E_TYPE",
                        format!("operator `{}` does not apply to {}", if *op == UnOp::Neg { "-" } else { "not" }, v.ty),
                    ));
                }
                let ty = v.ty.clone();
                Ok(plain(mk(K::Unary { op: *op, operand: v.term }, span), ty))
            }
            K::Deref(e) => {
                let v = self.value(e, env)?;
                match v.ty {
                    TypeRep::Location(inner) => Ok(plain(mk(K::Deref(v.term), span), *inner)),
                    other => Err(TypeError::new(span, "E_TYPE", format!("cannot dereference {other}"))),
                }
            }
            K::Spawn(e) => {
                let (b, _) = self.stmt(e, env)?;
                Ok(plain(mk(K::Spawn(b.term), span), TypeRep::Behaviour))
            }
        }
    }

    fn branch(&mut self, t: &Term, env: &TypeEnv, pos: Pos) -> R<Typed> {
        match pos {
            Pos::Stmt => Ok(self.stmt(t, env)?.0),
            Pos::Value => self.term(t, env, Pos::Value),
        }
    }

    fn join_branches(&self, term: TermRef, results: Vec<Typed>, pos: Pos) -> R<Typed> {
        let blocking = results.iter().any(|r| r.blocking);
        let any_action = results.iter().any(|r| r.action || r.blocking);
        if pos == Pos::Stmt {
            if any_action {
                return Ok(action(term, blocking));
            }
        } else if any_action {
            if let Some(bad) = results.iter().find(|r| !(r.action || r.blocking)) {
                return Err(TypeError::mismatch(bad.term.span, &TypeRep::Behaviour, &bad.ty));
            }
            return Ok(action(term, blocking));
        }
        let first = results[0].ty.clone();
        for r in &results[1..] {
            if !equivalent(&r.ty, &first) {
                if pos == Pos::Stmt {
                    return Ok(plain(term, TypeRep::Behaviour));
                }
                return Err(TypeError::mismatch(r.term.span, &first, &r.ty));
            }
        }
        Ok(plain(term, first))
    }

    fn binary(&mut self, op: BinOp, lhs: &Term, rhs: &Term, env: &TypeEnv, span: Span) -> R<Typed> {
        let l = self.value(lhs, env)?;
        let r = self.value(rhs, env)?;
        let (l, r) = match op {
            BinOp::Eq | BinOp::Ne if equivalent(&l.ty, &r.ty) => (l, r),
            _ => (self.strip(l), self.strip(r)),
        };
        let bad = |l: &Typed, r: &Typed| {
            TypeError::new(
                span,
                "E_TYPE",
                format!("operator `{}` does not apply to {} and {}", op.symbol(), l.ty, r.ty),
            )
        };
        if !equivalent(&l.ty, &r.ty) {
            return Err(bad(&l, &r));
        }
        let ty = match op {
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => match l.ty {
                TypeRep::Integer | TypeRep::Real => l.ty.clone(),
                _ => return Err(bad(&l, &r)),
            },
            BinOp::Concat => match l.ty {
                TypeRep::String | TypeRep::Sequence(_) => l.ty.clone(),
                _ => return Err(bad(&l, &r)),
            },
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => match l.ty {
                TypeRep::Integer | TypeRep::Real | TypeRep::String => TypeRep::Boolean,
                _ => return Err(bad(&l, &r)),
            },
            BinOp::Eq | BinOp::Ne => TypeRep::Boolean,
            BinOp::And | BinOp::Or => match l.ty {
                TypeRep::Boolean => TypeRep::Boolean,
                _ => return Err(bad(&l, &r)),
            },
        };
        Ok(plain(mk(TermKind::Binary { op, lhs: l.term, rhs: r.term }, span), ty))
    }

    fn params(&self, params: &[Param], env: &TypeEnv, span: Span) -> R<(Vec<TypeRep>, TypeEnv)> {
        let mut seen = BTreeSet::new();
        let mut benv = env.clone();
        let mut ps = Vec::new();
        for p in params {
            if !seen.insert(p.name.clone()) {
                return Err(TypeError::new(span, "E_DUP_PARAM", format!("duplicate parameter `{}`", p.name)));
            }
            let t = self.resolve(env, &p.ty, span)?;
            benv = benv.bind(&p.name, t.clone());
            ps.push(t);
        }
        Ok((ps, benv))
    }

    fn channel(&mut self, ch: &Term, env: &TypeEnv) -> R<(TermRef, Vec<TypeRep>)> {
        if !is_simple_channel(ch) {
            return Err(TypeError::new(
                ch.span,
                "E_CHANNEL",
                "the target of `via` must be a name, link, field or sequence element",
            ));
        }
        let v = self.value(ch, env)?;
        let v = self.strip(v);
        match &v.ty {
            TypeRep::Connection(ps) => Ok((v.term.clone(), ps.clone())),
            other => Err(TypeError::new(ch.span, "E_CHANNEL", format!("`via` needs a connection, found {other}"))),
        }
    }
}

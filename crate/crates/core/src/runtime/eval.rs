//! Synchronous evaluation of non-communicating terms.

use std::collections::BTreeSet;

use super::machine::{Fault, Machine, RunResult};
use super::trace::EventKind;
use super::value::*;
use crate::syntax::{BinOp, Literal, Term, TermKind, TermRef, TypeExpr, UnOp};
use crate::typesys::{TypeEnv, TypeRep};

pub(crate) fn type_rep(t: &TypeExpr) -> RunResult<TypeRep> {
    TypeEnv::new().resolve(t, Default::default()).map_err(|e| Fault::Internal(e.message))
}

fn lit_value(l: &Literal) -> Value {
    match l {
        Literal::Int(n) => Value::Int(*n),
        Literal::Real(r) => Value::Real(*r),
        Literal::Bool(b) => Value::Bool(*b),
        Literal::Str(s) => Value::Str(s.clone()),
    }
}

impl Machine {
    /// Evaluate `t` in `env`. `owner` is the behaviour the evaluation runs
    /// on behalf of, if any; `free` clauses export into it.
    pub fn eval(&mut self, t: &Term, env: &Env, owner: Option<BehId>) -> RunResult<Value> {
        use TermKind as K;
        match &t.kind {
            K::Literal(l) => Ok(lit_value(l)),
            K::Ident(n) => env
                .lookup(n)
                .or_else(|| self.globals.lookup(n))
                .cloned()
                .ok_or_else(|| Fault::Internal(format!("unbound identifier `{n}` at run time"))),
            K::Link(l) => self.store.value(l.id).cloned().ok_or(Fault::UnknownValue(l.id)),
            K::Block(stmts) => {
                let mut env = env.clone();
                let mut last = Value::Unit;
                for s in stmts {
                    let (v, e) = self.eval_stmt(s, &env, owner)?;
                    env = e;
                    last = v;
                }
                Ok(last)
            }
            K::ValueDecl { .. } | K::TypeDecl { .. } | K::StyleDecl(_) | K::Free(_) | K::Assign { .. } => {
                self.eval_stmt(t, env, owner)?;
                Ok(Value::Unit)
            }
            K::Apply { callee, args } => {
                let f = self.eval(callee, env, owner)?;
                let args = args.iter().map(|a| self.eval(a, env, owner)).collect::<RunResult<Vec<_>>>()?;
                self.apply(f, args, owner)
            }
            K::AbstractionLit { .. } | K::FunctionLit { .. } => self.make_closure(t, env, None),
            K::ConnectionNew { payload, style } => {
                let ps = payload.iter().map(type_rep).collect::<RunResult<Vec<_>>>()?;
                Ok(self.new_channel(ps, style.as_deref()))
            }
            K::LocationNew(e) => {
                let v = self.eval(e, env, owner)?;
                let ty = self.type_of(&v);
                Ok(self.new_location(v, ty))
            }
            K::Spawn(body) => {
                if let K::Apply { callee, args } = &body.kind {
                    let f = self.eval(callee, env, owner)?;
                    if let Value::Closure(id) = f {
                        if self.closure(id).kind == ClosureKind::Abstraction {
                            let args = args.iter().map(|a| self.eval(a, env, owner)).collect::<RunResult<Vec<_>>>()?;
                            return Ok(Value::Behaviour(self.instantiate(id, args)?));
                        }
                    }
                }
                Ok(Value::Behaviour(self.spawn_term(body.clone(), env.clone(), BTreeSet::new())?))
            }
            K::Compose { parts, unifications } => {
                let mut ps = Vec::new();
                for p in parts {
                    match self.eval(&p.expr, env, owner)? {
                        Value::Behaviour(b) => ps.push((p.label.clone(), b)),
                        other => return Err(Fault::DynamicType(format!("compose part is {}", other.kind_name()))),
                    }
                }
                Ok(Value::Behaviour(self.compose(ps, unifications, env)?))
            }
            K::Decompose(e) => {
                let h = self.eval_behaviour(e, env, owner)?;
                if self.behaviours.get(&h).map(|b| !b.is_composite() || b.dissolved).unwrap_or(true) {
                    return Err(Fault::NotComposite(h));
                }
                if !self.subtree_quiescent(h)? {
                    return Err(Fault::NotQuiescent(h));
                }
                self.decompose_now(h)
            }
            K::Reify(e) => {
                let v = self.eval(e, env, owner)?;
                Ok(Value::Str(self.reify_value(&v)?))
            }
            K::Reflect(e) => match self.eval(e, env, owner)? {
                Value::Str(s) => self.reflect_text(&s),
                other => Err(Fault::DynamicType(format!("reflect of {}", other.kind_name()))),
            },
            K::ViewLit(fields) => {
                let mut out = Vec::new();
                for (n, e) in fields {
                    out.push((n.clone(), self.eval(e, env, owner)?));
                }
                Ok(Value::View(out))
            }
            K::SeqLit { elem, items } => {
                let et = match elem {
                    Some(e) => type_rep(e)?,
                    None => return Err(Fault::Internal("sequence literal without element type".into())),
                };
                let items = items.iter().map(|i| self.eval(i, env, owner)).collect::<RunResult<Vec<_>>>()?;
                Ok(Value::Seq(et, items))
            }
            K::FieldAccess { target, field } => match self.eval(target, env, owner)? {
                Value::View(fs) => fs
                    .into_iter()
                    .find(|(n, _)| n == field)
                    .map(|(_, v)| v)
                    .ok_or_else(|| Fault::DynamicType(format!("view has no field `{field}`"))),
                other => Err(Fault::DynamicType(format!("field `{field}` of {}", other.kind_name()))),
            },
            K::SeqIndex { target, index } => match self.eval(target, env, owner)? {
                Value::Seq(_, items) => {
                    let len = items.len();
                    if *index == 0 || *index as usize > len {
                        return Err(Fault::Index { index: *index, len });
                    }
                    Ok(items[*index as usize - 1].clone())
                }
                other => Err(Fault::DynamicType(format!("index into {}", other.kind_name()))),
            },
            K::LabelQualify { target, label } => {
                let b = self.eval_behaviour(target, env, owner)?;
                self.qualify(b, label)
            }
            K::AnyInject(e) => {
                let v = self.eval(e, env, owner)?;
                let ty = self.type_of(&v);
                Ok(inject_any(v, ty))
            }
            K::Typecase { .. } | K::If { .. } => {
                let (branch, benv) = self.select_branch(t, env, owner)?;
                self.eval(&branch, &benv, owner)
            }
            K::Binary { op, lhs, rhs } => {
                let a = self.eval(lhs, env, owner)?;
                match (op, &a) {
                    (BinOp::And, Value::Bool(false)) => return Ok(Value::Bool(false)),
                    (BinOp::Or, Value::Bool(true)) => return Ok(Value::Bool(true)),
                    _ => {}
                }
                let b = self.eval(rhs, env, owner)?;
                binary(*op, a, b)
            }
            K::Unary { op, operand } => match (op, self.eval(operand, env, owner)?) {
                (UnOp::Neg, Value::Int(n)) => n.checked_neg().map(Value::Int).ok_or(Fault::Overflow),
                (UnOp::Neg, Value::Real(r)) => Ok(Value::Real(-r)),
                (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                (_, v) => Err(Fault::DynamicType(format!("unary operator on {}", v.kind_name()))),
            },
            K::Deref(e) => match self.eval(e, env, owner)? {
                Value::Loc(l) => Ok(self.location(l).value.clone()),
                other => Err(Fault::DynamicType(format!("dereference of {}", other.kind_name()))),
            },
            K::Send { .. } | K::Receive { .. } | K::Replicate(_) | K::Choose(_) | K::Parallel(_) => {
                Err(Fault::Internal("communication reached the synchronous evaluator".into()))
            }
        }
    }

    fn eval_behaviour(&mut self, t: &Term, env: &Env, owner: Option<BehId>) -> RunResult<BehId> {
        match self.eval(t, env, owner)? {
            Value::Behaviour(b) => Ok(b),
            other => Err(Fault::DynamicType(format!("expected a behaviour, found {}", other.kind_name()))),
        }
    }

    /// Pick the branch of an `if` or `typecase`, with the scope it runs in.
    pub(crate) fn select_branch(&mut self, t: &Term, env: &Env, owner: Option<BehId>) -> RunResult<(TermRef, Env)> {
        match &t.kind {
            TermKind::If { cond, then_branch, else_branch } => match self.eval(cond, env, owner)? {
                Value::Bool(true) => Ok((then_branch.clone(), env.clone())),
                Value::Bool(false) => Ok((else_branch.clone(), env.clone())),
                other => Err(Fault::DynamicType(format!("condition is {}", other.kind_name()))),
            },
            TermKind::Typecase { scrutinee, arms, default } => {
                let s = self.eval(scrutinee, env, owner)?;
                let (inner, carried) = match s {
                    Value::Any(v, t) => (*v, t),
                    v => {
                        let t = self.type_of(&v);
                        (v, t)
                    }
                };
                for a in arms {
                    if type_rep(&a.ty)? == carried {
                        return Ok((a.body.clone(), env.bind(&a.binder, inner)));
                    }
                }
                match default {
                    Some(d) => Ok((d.clone(), env.clone())),
                    None => Err(Fault::Projection(format!("no typecase arm matches {carried}"))),
                }
            }
            _ => Err(Fault::Internal("select_branch on a non-branching term".into())),
        }
    }

    /// Execute one statement synchronously; returns its value and the scope
    /// for the statements after it.
    pub fn eval_stmt(&mut self, s: &Term, env: &Env, owner: Option<BehId>) -> RunResult<(Value, Env)> {
        use TermKind as K;
        match &s.kind {
            K::ValueDecl { name, init, .. } => {
                let v = match &init.kind {
                    K::AbstractionLit { .. } | K::FunctionLit { .. } => self.make_closure(init, env, Some(name))?,
                    _ => self.eval(init, env, owner)?,
                };
                Ok((Value::Unit, env.bind(name, v)))
            }
            K::TypeDecl { .. } => Ok((Value::Unit, env.clone())),
            K::StyleDecl(def) => {
                self.styles.register(def).map_err(Fault::Style)?;
                Ok((Value::Unit, env.clone()))
            }
            K::Free(names) => {
                if let Some(b) = owner {
                    self.apply_free(b, names, env)?;
                }
                Ok((Value::Unit, env.clone()))
            }
            K::Assign { target, value } => {
                let l = match self.eval(target, env, owner)? {
                    Value::Loc(l) => l,
                    other => return Err(Fault::DynamicType(format!("assignment to {}", other.kind_name()))),
                };
                let v = self.eval(value, env, owner)?;
                self.assign(l, v)?;
                Ok((Value::Unit, env.clone()))
            }
            K::If { .. } | K::Typecase { .. } => {
                let (b, benv) = self.select_branch(s, env, owner)?;
                let (v, _) = self.eval_stmt(&b, &benv, owner)?;
                Ok((v, env.clone()))
            }
            _ => Ok((self.eval(s, env, owner)?, env.clone())),
        }
    }

    pub fn assign(&mut self, l: LocId, v: Value) -> RunResult<()> {
        if self.config.dynamic_types {
            let vt = self.type_of(&v);
            if vt != self.location(l).ty {
                return Err(Fault::DynamicType(format!("assigning {vt} to a location of {}", self.location(l).ty)));
            }
        }
        let payload = v.to_string();
        self.locations[l as usize].value = v;
        self.emit(EventKind::Assign, vec![format!("l{l}")], Some(payload));
        Ok(())
    }

    pub(crate) fn make_closure(&mut self, lit: &Term, env: &Env, self_name: Option<&str>) -> RunResult<Value> {
        let (kind, params, body, ty, style) = match &lit.kind {
            TermKind::AbstractionLit { params, style, body } => {
                let ps = params.iter().map(|p| type_rep(&p.ty)).collect::<RunResult<Vec<_>>>()?;
                (ClosureKind::Abstraction, params, body, TypeRep::Abstraction(ps), style.clone())
            }
            TermKind::FunctionLit { params, result, body } => {
                let ps = params.iter().map(|p| type_rep(&p.ty)).collect::<RunResult<Vec<_>>>()?;
                (ClosureKind::Function, params, body, TypeRep::function(ps, type_rep(result)?), None)
            }
            _ => return Err(Fault::Internal("closure from a non-literal".into())),
        };
        Ok(self.new_closure(Closure {
            kind,
            params: params.iter().map(|p| p.name.clone()).collect(),
            body: body.clone(),
            literal: std::rc::Rc::new(lit.clone()),
            env: env.clone(),
            self_name: self_name.map(str::to_string),
            ty,
            style,
        }))
    }

    pub fn apply(&mut self, f: Value, args: Vec<Value>, owner: Option<BehId>) -> RunResult<Value> {
        match f {
            Value::Builtin(b) => self.builtin(b, args),
            Value::Closure(id) => {
                let c = self.closure(id);
                if c.params.len() != args.len() {
                    return Err(Fault::Internal("arity mismatch at run time".into()));
                }
                match c.kind {
                    ClosureKind::Function => {
                        let body = c.body.clone();
                        let env = self.closure_env(id, args);
                        self.eval(&body, &env, owner)
                    }
                    ClosureKind::Abstraction => Ok(Value::Behaviour(self.instantiate(id, args)?)),
                }
            }
            other => Err(Fault::DynamicType(format!("cannot apply {}", other.kind_name()))),
        }
    }

    fn builtin(&mut self, b: Builtin, args: Vec<Value>) -> RunResult<Value> {
        let bad = || Fault::DynamicType(format!("bad arguments to {}", b.name()));
        let arg = args.into_iter().next().ok_or_else(bad)?;
        Ok(match (b, arg) {
            (Builtin::IntToReal, Value::Int(n)) => Value::Real(n as f64),
            (Builtin::RealToInt, Value::Real(r)) => {
                if !r.is_finite() || r.trunc() < i64::MIN as f64 || r.trunc() > i64::MAX as f64 {
                    return Err(Fault::Overflow);
                }
                Value::Int(r.trunc() as i64)
            }
            (Builtin::IntToString, Value::Int(n)) => Value::Str(n.to_string()),
            (Builtin::RealToString, Value::Real(r)) => Value::Str(crate::syntax::format_real(r)),
            (Builtin::StringLength, Value::Str(s)) => Value::Int(s.chars().count() as i64),
            (Builtin::Status, Value::Behaviour(h)) => Value::Str(self.status(h).as_str().into()),
            _ => return Err(bad()),
        })
    }
}

fn binary(op: BinOp, a: Value, b: Value) -> RunResult<Value> {
    use Value::*;
    let mismatch = |a: &Value, b: &Value| {
        Fault::DynamicType(format!("operator `{}` on {} and {}", op.symbol(), a.kind_name(), b.kind_name()))
    };
    Ok(match (op, &a, &b) {
        (BinOp::Eq, _, _) => Bool(a == b),
        (BinOp::Ne, _, _) => Bool(a != b),
        (BinOp::And | BinOp::Or, Bool(_), Bool(y)) => Bool(*y),
        (BinOp::Add, Int(x), Int(y)) => Int(x.checked_add(*y).ok_or(Fault::Overflow)?),
        (BinOp::Sub, Int(x), Int(y)) => Int(x.checked_sub(*y).ok_or(Fault::Overflow)?),
        (BinOp::Mul, Int(x), Int(y)) => Int(x.checked_mul(*y).ok_or(Fault::Overflow)?),
        (BinOp::Div, Int(_), Int(0)) => return Err(Fault::DivisionByZero),
        (BinOp::Div, Int(x), Int(y)) => Int(x.checked_div(*y).ok_or(Fault::Overflow)?),
        (BinOp::Add, Real(x), Real(y)) => Real(x + y),
        (BinOp::Sub, Real(x), Real(y)) => Real(x - y),
        (BinOp::Mul, Real(x), Real(y)) => Real(x * y),
        (BinOp::Div, Real(_), Real(y)) if *y == 0.0 => return Err(Fault::DivisionByZero),
        (BinOp::Div, Real(x), Real(y)) => Real(x / y),
        (BinOp::Concat, Str(x), Str(y)) => Str(format!("{x}{y}")),
        (BinOp::Concat, Seq(t, x), Seq(_, y)) => Seq(t.clone(), x.iter().chain(y).cloned().collect()),
        (BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge, _, _) => {
            let ord = match (&a, &b) {
                (Int(x), Int(y)) => x.cmp(y),
                (Real(x), Real(y)) => x.partial_cmp(y).ok_or_else(|| mismatch(&a, &b))?,
                (Str(x), Str(y)) => x.cmp(y),
                _ => return Err(mismatch(&a, &b)),
            };
            Bool(match op {
                BinOp::Lt => ord.is_lt(),
                BinOp::Le => ord.is_le(),
                BinOp::Gt => ord.is_gt(),
                _ => ord.is_ge(),
            })
        }
        _ => return Err(mismatch(&a, &b)),
    })
}

//! Runtime values and environments.

use std::fmt;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::syntax::render::{format_real, quote_string};
use crate::syntax::TermRef;
use crate::typesys::{equivalent, TypeRep};

pub type LocId = u64;
pub type ChanId = u64;
pub type BehId = u64;
pub type ThreadId = u64;
pub type ClosureId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Builtin {
    IntToReal,
    RealToInt,
    IntToString,
    RealToString,
    StringLength,
    Status,
}

impl Builtin {
    pub const ALL: [Builtin; 6] = [
        Builtin::IntToReal,
        Builtin::RealToInt,
        Builtin::IntToString,
        Builtin::RealToString,
        Builtin::StringLength,
        Builtin::Status,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::IntToReal => "int_to_real",
            Builtin::RealToInt => "real_to_int",
            Builtin::IntToString => "int_to_string",
            Builtin::RealToString => "real_to_string",
            Builtin::StringLength => "string_length",
            Builtin::Status => "status",
        }
    }

    pub fn from_name(s: &str) -> Option<Builtin> {
        Builtin::ALL.into_iter().find(|b| b.name() == s)
    }

    pub fn ty(self) -> TypeRep {
        use TypeRep::*;
        match self {
            Builtin::IntToReal => TypeRep::function(vec![Integer], Real),
            Builtin::RealToInt => TypeRep::function(vec![Real], Integer),
            Builtin::IntToString => TypeRep::function(vec![Integer], String),
            Builtin::RealToString => TypeRep::function(vec![Real], String),
            Builtin::StringLength => TypeRep::function(vec![String], Integer),
            Builtin::Status => TypeRep::function(vec![Behaviour], String),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Int(i64),
    Real(f64),
    Bool(bool),
    Str(String),
    /// A value packaged with its type.
    Any(Box<Value>, TypeRep),
    Loc(LocId),
    Chan(ChanId),
    Behaviour(BehId),
    Seq(TypeRep, Vec<Value>),
    View(Vec<(String, Value)>),
    Closure(ClosureId),
    Builtin(Builtin),
    /// Result of a statement; never visible to programs.
    Unit,
}

impl Value {
    /// True for values whose identity matters (compared by reference).
    pub fn is_reference(&self) -> bool {
        matches!(self, Value::Loc(_) | Value::Chan(_) | Value::Behaviour(_) | Value::Closure(_))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "integer",
            Value::Real(_) => "real",
            Value::Bool(_) => "boolean",
            Value::Str(_) => "string",
            Value::Any(..) => "any",
            Value::Loc(_) => "location",
            Value::Chan(_) => "connection",
            Value::Behaviour(_) => "behaviour",
            Value::Seq(..) => "sequence",
            Value::View(_) => "view",
            Value::Closure(_) => "closure",
            Value::Builtin(_) => "builtin",
            Value::Unit => "unit",
        }
    }
}

/// Compact rendering used in traces and REPL output.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Real(r) => f.write_str(&format_real(*r)),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => f.write_str(&quote_string(s)),
            Value::Any(v, t) => write!(f, "any({v} : {t})"),
            Value::Loc(id) => write!(f, "<location l{id}>"),
            Value::Chan(id) => write!(f, "<connection c{id}>"),
            Value::Behaviour(id) => write!(f, "<behaviour b{id}>"),
            Value::Closure(id) => write!(f, "<closure f{id}>"),
            Value::Builtin(b) => write!(f, "<builtin {}>", b.name()),
            Value::Seq(_, items) => {
                f.write_str("sequence(")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(")")
            }
            Value::View(fields) => {
                f.write_str("view(")?;
                for (i, (n, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{n} = {v}")?;
                }
                f.write_str(")")
            }
            Value::Unit => f.write_str("()"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionError {
    pub expected: TypeRep,
    pub found: TypeRep,
}

impl fmt::Display for ProjectionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cannot project any carrying {} as {}", self.found, self.expected)
    }
}

pub fn inject_any(v: Value, t: TypeRep) -> Value {
    Value::Any(Box::new(v), t)
}

pub fn project_any(v: &Value, t: &TypeRep) -> Result<Value, ProjectionError> {
    match v {
        Value::Any(inner, carried) if equivalent(carried, t) => Ok((**inner).clone()),
        Value::Any(_, carried) => Err(ProjectionError { expected: t.clone(), found: carried.clone() }),
        _ => Err(ProjectionError { expected: t.clone(), found: TypeRep::Any }),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct EnvNode {
    name: String,
    value: Value,
    next: Env,
}

/// Persistent environment: extension shares the tail.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Env(Option<Rc<EnvNode>>);

impl Env {
    pub fn new() -> Self {
        Env(None)
    }

    pub fn bind(&self, name: &str, value: Value) -> Env {
        Env(Some(Rc::new(EnvNode { name: name.to_string(), value, next: self.clone() })))
    }

    pub fn lookup(&self, name: &str) -> Option<&Value> {
        let mut cur = self.0.as_deref();
        while let Some(n) = cur {
            if n.name == name {
                return Some(&n.value);
            }
            cur = n.next.0.as_deref();
        }
        None
    }

    /// Visible bindings, innermost first, shadowed names omitted.
    pub fn visible(&self) -> Vec<(String, Value)> {
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::new();
        let mut cur = self.0.as_deref();
        while let Some(n) = cur {
            if seen.insert(n.name.clone()) {
                out.push((n.name.clone(), n.value.clone()));
            }
            cur = n.next.0.as_deref();
        }
        out
    }

    /// True when `other` is this environment or one of its tails.
    pub fn extends(&self, other: &Env) -> bool {
        let Some(target) = &other.0 else { return true };
        let mut cur = &self.0;
        while let Some(n) = cur {
            if Rc::ptr_eq(n, target) {
                return true;
            }
            cur = &n.next.0;
        }
        false
    }

    /// Bindings added on top of `base` (innermost first), if this extends it.
    pub fn since(&self, base: &Env) -> Vec<(String, Value)> {
        let mut out = Vec::new();
        let mut cur = &self.0;
        while let Some(n) = cur {
            if let Some(b) = &base.0 {
                if Rc::ptr_eq(n, b) {
                    break;
                }
            }
            out.push((n.name.clone(), n.value.clone()));
            cur = &n.next.0;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClosureKind {
    Function,
    Abstraction,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Closure {
    pub kind: ClosureKind,
    pub params: Vec<String>,
    pub body: TermRef,
    /// The elaborated literal this closure was made from.
    pub literal: TermRef,
    pub env: Env,
    /// Name under which the closure refers to itself, for recursion.
    pub self_name: Option<String>,
    pub ty: TypeRep,
    pub style: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Location {
    pub value: Value,
    pub ty: TypeRep,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Channel {
    pub payload: Vec<TypeRep>,
    pub styles: std::collections::BTreeSet<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn any_round_trip() {
        let a = inject_any(Value::Int(5), TypeRep::Integer);
        assert_eq!(project_any(&a, &TypeRep::Integer).unwrap(), Value::Int(5));
        let e = project_any(&a, &TypeRep::String).unwrap_err();
        assert_eq!(e.found, TypeRep::Integer);
        let nested = inject_any(a.clone(), TypeRep::Any);
        assert_eq!(project_any(&nested, &TypeRep::Any).unwrap(), a);
        let empty = inject_any(Value::View(vec![]), TypeRep::View(vec![]));
        assert_eq!(project_any(&empty, &TypeRep::View(vec![])).unwrap(), Value::View(vec![]));
    }

    #[test]
    fn env_shadowing_and_since() {
        let base = Env::new().bind("x", Value::Int(1));
        let ext = base.bind("y", Value::Int(2)).bind("x", Value::Int(3));
        assert_eq!(ext.lookup("x"), Some(&Value::Int(3)));
        assert_eq!(base.lookup("x"), Some(&Value::Int(1)));
        assert!(ext.extends(&base));
        assert!(!base.extends(&ext));
        let added: Vec<String> = ext.since(&base).into_iter().map(|(n, _)| n).collect();
        assert_eq!(added, vec!["x", "y"]);
        assert_eq!(ext.visible().len(), 2);
    }
}

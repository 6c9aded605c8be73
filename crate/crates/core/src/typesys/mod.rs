//! Structural types, type environments and the static checker.

mod check;

use std::fmt;
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{Span, TypeExpr};

pub use check::{check_program, check_term, Checked, LinkTypes, NoLinks, Typed};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TypeRep {
    Integer,
    Real,
    Boolean,
    String,
    Any,
    Behaviour,
    Location(Box<TypeRep>),
    Sequence(Box<TypeRep>),
    View(Vec<(String, TypeRep)>),
    Function(Vec<TypeRep>, Box<TypeRep>),
    Connection(Vec<TypeRep>),
    Abstraction(Vec<TypeRep>),
}

impl TypeRep {
    pub fn location(t: TypeRep) -> TypeRep {
        TypeRep::Location(Box::new(t))
    }

    pub fn sequence(t: TypeRep) -> TypeRep {
        TypeRep::Sequence(Box::new(t))
    }

    pub fn function(params: Vec<TypeRep>, result: TypeRep) -> TypeRep {
        TypeRep::Function(params, Box::new(result))
    }

    pub fn view(fields: &[(&str, TypeRep)]) -> TypeRep {
        TypeRep::View(fields.iter().map(|(n, t)| (n.to_string(), t.clone())).collect())
    }

    /// The source spelling of this type, with every alias expanded.
    pub fn to_expr(&self) -> TypeExpr {
        match self {
            TypeRep::Integer => TypeExpr::Integer,
            TypeRep::Real => TypeExpr::Real,
            TypeRep::Boolean => TypeExpr::Boolean,
            TypeRep::String => TypeExpr::String,
            TypeRep::Any => TypeExpr::Any,
            TypeRep::Behaviour => TypeExpr::Behaviour,
            TypeRep::Location(t) => TypeExpr::Location(Box::new(t.to_expr())),
            TypeRep::Sequence(t) => TypeExpr::Sequence(Box::new(t.to_expr())),
            TypeRep::View(fs) => TypeExpr::View(fs.iter().map(|(n, t)| (n.clone(), t.to_expr())).collect()),
            TypeRep::Function(ps, r) => {
                TypeExpr::Function(ps.iter().map(TypeRep::to_expr).collect(), Box::new(r.to_expr()))
            }
            TypeRep::Connection(ps) => TypeExpr::Connection(ps.iter().map(TypeRep::to_expr).collect()),
            TypeRep::Abstraction(ps) => TypeExpr::Abstraction(ps.iter().map(TypeRep::to_expr).collect()),
        }
    }

    /// Number of constructor nodes; used to bound generated types.
    pub fn size(&self) -> usize {
        1 + match self {
            TypeRep::Location(t) | TypeRep::Sequence(t) => t.size(),
            TypeRep::View(fs) => fs.iter().map(|(_, t)| t.size()).sum(),
            TypeRep::Function(ps, r) => ps.iter().map(TypeRep::size).sum::<usize>() + r.size(),
            TypeRep::Connection(ps) | TypeRep::Abstraction(ps) => ps.iter().map(TypeRep::size).sum(),
            _ => 0,
        }
    }
}

impl fmt::Display for TypeRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

/// Structural equivalence. View fields are compared in order.
pub fn equivalent(a: &TypeRep, b: &TypeRep) -> bool {
    a == b
}

/// The element type of the sequence returned by `decompose`.
pub fn decompose_view_type() -> TypeRep {
    TypeRep::view(&[
        ("label", TypeRep::String),
        ("bhvr", TypeRep::Behaviour),
        ("connections", TypeRep::sequence(TypeRep::view(&[("name", TypeRep::String), ("channel", TypeRep::Any)]))),
        ("exports", TypeRep::sequence(TypeRep::view(&[("name", TypeRep::String), ("entity", TypeRep::Any)]))),
    ])
}

pub fn decompose_result_type() -> TypeRep {
    TypeRep::sequence(decompose_view_type())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Error)]
#[error("{line}:{col} {code} {message}")]
pub struct TypeError {
    pub line: u32,
    pub col: u32,
    pub code: String,
    pub message: String,
    pub expected: Option<String>,
    pub found: Option<String>,
}

impl TypeError {
    pub fn new(span: Span, code: &str, message: impl Into<String>) -> Self {
        TypeError {
            line: span.line,
            col: span.col,
            code: code.to_string(),
            message: message.into(),
            expected: None,
            found: None,
        }
    }

    pub fn mismatch(span: Span, expected: &TypeRep, found: &TypeRep) -> Self {
        TypeError {
            line: span.line,
            col: span.col,
            code: "E_TYPE".into(),
            message: format!("expected {expected}, found {found}"),
            expected: Some(expected.to_string()),
            found: Some(found.to_string()),
        }
    }
}

#[derive(Debug, Clone)]
enum Entry {
    Value(TypeRep),
    Alias(TypeRep),
}

#[derive(Debug)]
struct Scope {
    name: String,
    entry: Entry,
    parent: Option<Rc<Scope>>,
}

/// Immutable, persistent chain of bindings; extending returns a new
/// environment that shares its parent. Lookups find the innermost binding.
#[derive(Debug, Clone, Default)]
pub struct TypeEnv {
    head: Option<Rc<Scope>>,
}

impl TypeEnv {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&self, name: &str, entry: Entry) -> TypeEnv {
        TypeEnv { head: Some(Rc::new(Scope { name: name.to_string(), entry, parent: self.head.clone() })) }
    }

    pub fn bind(&self, name: &str, t: TypeRep) -> TypeEnv {
        self.push(name, Entry::Value(t))
    }

    pub fn bind_alias(&self, name: &str, t: TypeRep) -> TypeEnv {
        self.push(name, Entry::Alias(t))
    }

    pub fn lookup(&self, name: &str) -> Option<&TypeRep> {
        let mut cur = self.head.as_deref();
        while let Some(s) = cur {
            if let (true, Entry::Value(t)) = (s.name == name, &s.entry) {
                return Some(t);
            }
            cur = s.parent.as_deref();
        }
        None
    }

    pub fn lookup_alias(&self, name: &str) -> Option<&TypeRep> {
        let mut cur = self.head.as_deref();
        while let Some(s) = cur {
            if let (true, Entry::Alias(t)) = (s.name == name, &s.entry) {
                return Some(t);
            }
            cur = s.parent.as_deref();
        }
        None
    }

    /// Resolve a written type, expanding aliases.
    pub fn resolve(&self, t: &TypeExpr, span: Span) -> Result<TypeRep, TypeError> {
        let r = |t: &TypeExpr| self.resolve(t, span);
        Ok(match t {
            TypeExpr::Integer => TypeRep::Integer,
            TypeExpr::Real => TypeRep::Real,
            TypeExpr::Boolean => TypeRep::Boolean,
            TypeExpr::String => TypeRep::String,
            TypeExpr::Any => TypeRep::Any,
            TypeExpr::Behaviour => TypeRep::Behaviour,
            TypeExpr::Location(t) => TypeRep::location(r(t)?),
            TypeExpr::Sequence(t) => TypeRep::sequence(r(t)?),
            TypeExpr::View(fs) => {
                let mut out: Vec<(String, TypeRep)> = Vec::new();
                for (n, t) in fs {
                    if out.iter().any(|(m, _)| m == n) {
                        return Err(TypeError::new(span, "E_DUP_FIELD", format!("duplicate view field `{n}`")));
                    }
                    out.push((n.clone(), r(t)?));
                }
                TypeRep::View(out)
            }
            TypeExpr::Function(ps, res) => {
                TypeRep::Function(ps.iter().map(r).collect::<Result<_, _>>()?, Box::new(r(res)?))
            }
            TypeExpr::Connection(ps) => TypeRep::Connection(ps.iter().map(r).collect::<Result<_, _>>()?),
            TypeExpr::Abstraction(ps) => TypeRep::Abstraction(ps.iter().map(r).collect::<Result<_, _>>()?),
            TypeExpr::Named(n) => self
                .lookup_alias(n)
                .cloned()
                .ok_or_else(|| TypeError::new(span, "E_UNBOUND_TYPE", format!("unknown type `{n}`")))?,
        })
    }
}

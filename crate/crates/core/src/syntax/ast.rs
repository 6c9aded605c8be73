//! Abstract syntax shared by the parser, checker, runtime and hyper-code.

use std::fmt;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::styles::StyleDef;

/// Source position of a term. Spans never take part in equality, so two
/// terms compare equal when they have the same structure.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Span {
    pub start: u32,
    pub end: u32,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(start: u32, end: u32, line: u32, col: u32) -> Self {
        Span { start, end, line, col }
    }

    pub fn merge(self, other: Span) -> Span {
        if self.end == 0 && self.start == 0 {
            return other;
        }
        Span { start: self.start.min(other.start), end: self.end.max(other.end), line: self.line, col: self.col }
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Type syntax as written in source; `Named` refers to a `type` alias and is
/// resolved by the checker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TypeExpr {
    Integer,
    Real,
    Boolean,
    String,
    Any,
    Behaviour,
    Location(Box<TypeExpr>),
    Sequence(Box<TypeExpr>),
    View(Vec<(String, TypeExpr)>),
    Function(Vec<TypeExpr>, Box<TypeExpr>),
    Connection(Vec<TypeExpr>),
    Abstraction(Vec<TypeExpr>),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Literal {
    Int(i64),
    Real(f64),
    Bool(bool),
    Str(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Concat,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Concat => "++",
            BinOp::Eq => "=",
            BinOp::Ne => "<>",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Concat => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub ty: TypeExpr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binder {
    pub name: String,
    pub ty: Option<TypeExpr>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComposePart {
    pub label: Option<String>,
    pub expr: TermRef,
}

/// One step of a path such as `pos_seq::1.bhvr` or `client::c_start`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathSegment {
    /// `::n`, 1-based.
    Index(u64),
    /// `::name`
    Label(String),
    /// `.name`
    Field(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathExpr {
    pub base: String,
    pub segments: Vec<PathSegment>,
}

impl fmt::Display for PathExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.base)?;
        for seg in &self.segments {
            match seg {
                PathSegment::Index(n) => write!(f, "::{n}")?,
                PathSegment::Label(l) => write!(f, "::{l}")?,
                PathSegment::Field(x) => write!(f, ".{x}")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unification {
    pub left: PathExpr,
    pub right: PathExpr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypecaseArm {
    pub binder: String,
    pub ty: TypeExpr,
    pub body: TermRef,
}

/// A hyper-code link embedded in source: a reference to an extant value in
/// the value store. The display name carries no meaning.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkRef {
    pub id: u64,
    pub display: String,
}

impl PartialEq for LinkRef {
    fn eq(&self, other: &LinkRef) -> bool {
        self.id == other.id
    }
}

pub type TermRef = Rc<Term>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub kind: TermKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TermKind {
    Block(Vec<TermRef>),
    ValueDecl {
        name: String,
        ty: Option<TypeExpr>,
        init: TermRef,
    },
    TypeDecl {
        name: String,
        ty: TypeExpr,
    },
    Literal(Literal),
    Ident(String),
    Link(LinkRef),
    Apply {
        callee: TermRef,
        args: Vec<TermRef>,
    },
    AbstractionLit {
        params: Vec<Param>,
        style: Option<String>,
        body: TermRef,
    },
    FunctionLit {
        params: Vec<Param>,
        result: TypeExpr,
        body: TermRef,
    },
    ConnectionNew {
        payload: Vec<TypeExpr>,
        style: Option<String>,
    },
    LocationNew(TermRef),
    Assign {
        target: TermRef,
        value: TermRef,
    },
    Send {
        channel: TermRef,
        payload: Vec<TermRef>,
    },
    Receive {
        channel: TermRef,
        binders: Vec<Binder>,
    },
    Replicate(TermRef),
    Choose(Vec<TermRef>),
    Parallel(Vec<TermRef>),
    Compose {
        parts: Vec<ComposePart>,
        unifications: Vec<Unification>,
    },
    Decompose(TermRef),
    Reify(TermRef),
    Reflect(TermRef),
    Free(Vec<String>),
    ViewLit(Vec<(String, TermRef)>),
    SeqLit {
        elem: Option<TypeExpr>,
        items: Vec<TermRef>,
    },
    FieldAccess {
        target: TermRef,
        field: String,
    },
    SeqIndex {
        target: TermRef,
        index: u64,
    },
    LabelQualify {
        target: TermRef,
        label: String,
    },
    AnyInject(TermRef),
    Typecase {
        scrutinee: TermRef,
        arms: Vec<TypecaseArm>,
        default: Option<TermRef>,
    },
    If {
        cond: TermRef,
        then_branch: TermRef,
        else_branch: TermRef,
    },
    Binary {
        op: BinOp,
        lhs: TermRef,
        rhs: TermRef,
    },
    Unary {
        op: UnOp,
        operand: TermRef,
    },
    StyleDecl(Rc<StyleDef>),
    /// Inserted by elaboration where a location is used as its contents.
    Deref(TermRef),
    /// Inserted by elaboration where a behaviour term appears in value
    /// position; evaluating it starts a new behaviour.
    Spawn(TermRef),
}

impl Term {
    pub fn new(kind: TermKind, span: Span) -> TermRef {
        Rc::new(Term { kind, span })
    }

    /// Build a term with a default span (used by elaboration and reification).
    pub fn synth(kind: TermKind) -> TermRef {
        Rc::new(Term { kind, span: Span::default() })
    }

    pub fn block_stmts(&self) -> Option<&[TermRef]> {
        match &self.kind {
            TermKind::Block(s) => Some(s),
            _ => None,
        }
    }

    /// Direct children in source order.
    pub fn children(&self) -> Vec<&TermRef> {
        use TermKind::*;
        match &self.kind {
            Block(s) | Choose(s) | Parallel(s) => s.iter().collect(),
            ValueDecl { init, .. } => vec![init],
            TypeDecl { .. } | Literal(_) | Ident(_) | Link(_) | ConnectionNew { .. } | Free(_) | StyleDecl(_) => vec![],
            Apply { callee, args } => std::iter::once(callee).chain(args.iter()).collect(),
            AbstractionLit { body, .. } | FunctionLit { body, .. } => vec![body],
            LocationNew(t) | Replicate(t) | Decompose(t) | Reify(t) | Reflect(t) | AnyInject(t) | Deref(t)
            | Spawn(t) => vec![t],
            Assign { target, value } => vec![target, value],
            Send { channel, payload } => std::iter::once(channel).chain(payload.iter()).collect(),
            Receive { channel, .. } => vec![channel],
            Compose { parts, .. } => parts.iter().map(|p| &p.expr).collect(),
            ViewLit(fields) => fields.iter().map(|(_, t)| t).collect(),
            SeqLit { items, .. } => items.iter().collect(),
            FieldAccess { target, .. } | SeqIndex { target, .. } | LabelQualify { target, .. } => {
                vec![target]
            }
            Typecase { scrutinee, arms, default } => {
                std::iter::once(scrutinee).chain(arms.iter().map(|a| &a.body)).chain(default.iter()).collect()
            }
            If { cond, then_branch, else_branch } => vec![cond, then_branch, else_branch],
            Binary { lhs, rhs, .. } => vec![lhs, rhs],
            Unary { operand, .. } => vec![operand],
        }
    }

    /// Rebuild this term with every direct child replaced by `f(child)`.
    pub fn map_children(&self, f: &mut dyn FnMut(&TermRef) -> TermRef) -> TermRef {
        use TermKind::*;
        let kind = match &self.kind {
            Block(s) => Block(s.iter().map(&mut *f).collect()),
            Choose(s) => Choose(s.iter().map(&mut *f).collect()),
            Parallel(s) => Parallel(s.iter().map(&mut *f).collect()),
            ValueDecl { name, ty, init } => ValueDecl { name: name.clone(), ty: ty.clone(), init: f(init) },
            k @ (TypeDecl { .. } | Literal(_) | Ident(_) | Link(_) | ConnectionNew { .. } | Free(_) | StyleDecl(_)) => {
                k.clone()
            }
            Apply { callee, args } => Apply { callee: f(callee), args: args.iter().map(&mut *f).collect() },
            AbstractionLit { params, style, body } => {
                AbstractionLit { params: params.clone(), style: style.clone(), body: f(body) }
            }
            FunctionLit { params, result, body } => {
                FunctionLit { params: params.clone(), result: result.clone(), body: f(body) }
            }
            LocationNew(t) => LocationNew(f(t)),
            Replicate(t) => Replicate(f(t)),
            Decompose(t) => Decompose(f(t)),
            Reify(t) => Reify(f(t)),
            Reflect(t) => Reflect(f(t)),
            AnyInject(t) => AnyInject(f(t)),
            Deref(t) => Deref(f(t)),
            Spawn(t) => Spawn(f(t)),
            Assign { target, value } => Assign { target: f(target), value: f(value) },
            Send { channel, payload } => Send { channel: f(channel), payload: payload.iter().map(&mut *f).collect() },
            Receive { channel, binders } => Receive { channel: f(channel), binders: binders.clone() },
            Compose { parts, unifications } => Compose {
                parts: parts.iter().map(|p| ComposePart { label: p.label.clone(), expr: f(&p.expr) }).collect(),
                unifications: unifications.clone(),
            },
            ViewLit(fields) => ViewLit(fields.iter().map(|(n, t)| (n.clone(), f(t))).collect()),
            SeqLit { elem, items } => SeqLit { elem: elem.clone(), items: items.iter().map(&mut *f).collect() },
            FieldAccess { target, field } => FieldAccess { target: f(target), field: field.clone() },
            SeqIndex { target, index } => SeqIndex { target: f(target), index: *index },
            LabelQualify { target, label } => LabelQualify { target: f(target), label: label.clone() },
            Typecase { scrutinee, arms, default } => Typecase {
                scrutinee: f(scrutinee),
                arms: arms
                    .iter()
                    .map(|a| TypecaseArm { binder: a.binder.clone(), ty: a.ty.clone(), body: f(&a.body) })
                    .collect(),
                default: default.as_ref().map(&mut *f),
            },
            If { cond, then_branch, else_branch } => {
                If { cond: f(cond), then_branch: f(then_branch), else_branch: f(else_branch) }
            }
            Binary { op, lhs, rhs } => Binary { op: *op, lhs: f(lhs), rhs: f(rhs) },
            Unary { op, operand } => Unary { op: *op, operand: f(operand) },
        };
        Rc::new(Term { kind, span: self.span })
    }

    /// Every link identifier in this term, in source order, with repeats.
    pub fn link_ids(&self) -> Vec<u64> {
        let mut out = Vec::new();
        self.collect_links(&mut out);
        out
    }

    fn collect_links(&self, out: &mut Vec<u64>) {
        if let TermKind::Link(l) = &self.kind {
            out.push(l.id);
        }
        for c in self.children() {
            c.collect_links(out);
        }
    }
}

//! Pretty printer from terms back to hyper-text. Output re-parses to a
//! structurally equal term; elaboration nodes print as their operand.

use std::fmt;

use super::ast::*;
use super::segments::SourceSegmentList;

/// Levels used to decide where parentheses are needed.
const LEVEL_EXPR: u8 = 0;
const LEVEL_BINARY: u8 = 1;
const LEVEL_UNARY: u8 = 7;
const LEVEL_POSTFIX: u8 = 8;
const LEVEL_ATOM: u8 = 9;

fn level(t: &Term) -> u8 {
    match &t.kind {
        TermKind::Assign { .. }
        | TermKind::Send { .. }
        | TermKind::Receive { .. }
        | TermKind::Replicate(_)
        | TermKind::AbstractionLit { .. }
        | TermKind::FunctionLit { .. }
        | TermKind::If { .. }
        | TermKind::Decompose(_)
        | TermKind::ValueDecl { .. }
        | TermKind::TypeDecl { .. }
        | TermKind::Free(_)
        | TermKind::StyleDecl(_) => LEVEL_EXPR,
        TermKind::Binary { op, .. } => op.precedence(),
        TermKind::Unary { .. } => LEVEL_UNARY,
        TermKind::Literal(Literal::Int(n)) if *n < 0 => LEVEL_UNARY,
        TermKind::Literal(Literal::Real(r)) if r.is_sign_negative() => LEVEL_UNARY,
        TermKind::Deref(inner) | TermKind::Spawn(inner) => level(inner),
        _ => LEVEL_ATOM,
    }
}

/// Render a whole program: top-level statements each end with `;`.
pub fn render_program(t: &Term) -> SourceSegmentList {
    let mut r = Renderer::default();
    match &t.kind {
        TermKind::Block(stmts) => {
            for s in stmts {
                r.term(s, LEVEL_EXPR);
                r.text(" ;\n");
            }
        }
        _ => {
            r.term(t, LEVEL_EXPR);
            r.text(" ;\n");
        }
    }
    r.out
}

/// Render a single term as an expression.
pub fn render_term(t: &Term) -> SourceSegmentList {
    let mut r = Renderer::default();
    r.term(t, LEVEL_EXPR);
    r.out
}

/// Render a term to plain text with links in bracket notation.
pub fn render_plain(t: &Term) -> String {
    render_term(t).to_plain_text()
}

pub fn quote_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if c.is_control() => out.push_str(&format!("\\u{{{:x}}}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn format_real(r: f64) -> String {
    let s = format!("{r:?}");
    if s.contains('.') || s.contains('e') || !r.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

#[derive(Default)]
struct Renderer {
    out: SourceSegmentList,
    indent: usize,
}

impl Renderer {
    fn text(&mut self, s: &str) {
        self.out.push_text(s);
    }

    fn newline(&mut self) {
        let pad = "  ".repeat(self.indent);
        self.out.push_text(format!("\n{pad}"));
    }

    fn list<T>(&mut self, items: &[T], sep: &str, mut f: impl FnMut(&mut Self, &T)) {
        for (i, it) in items.iter().enumerate() {
            if i > 0 {
                self.text(sep);
            }
            f(self, it);
        }
    }

    fn ty(&mut self, t: &TypeExpr) {
        self.text(&t.to_string());
    }

    fn params(&mut self, ps: &[Param]) {
        self.text("(");
        self.list(ps, ", ", |r, p| {
            r.text(&p.name);
            r.text(" : ");
            r.ty(&p.ty);
        });
        self.text(")");
    }

    fn style_tag(&mut self, s: &Option<String>) {
        if let Some(s) = s {
            self.text(" in style ");
            self.text(s);
        }
    }

    fn block(&mut self, stmts: &[TermRef]) {
        if stmts.is_empty() {
            self.text("{ }");
            return;
        }
        self.text("{");
        self.indent += 1;
        for (i, s) in stmts.iter().enumerate() {
            self.newline();
            self.term(s, LEVEL_EXPR);
            if i + 1 < stmts.len() {
                self.text(" ;");
            }
        }
        self.indent -= 1;
        self.newline();
        self.text("}");
    }

    fn branches(&mut self, head: &str, sep: &str, items: &[TermRef]) {
        self.text(head);
        self.text(" {");
        self.indent += 1;
        for (i, b) in items.iter().enumerate() {
            self.newline();
            if i > 0 {
                self.text(sep);
                self.text(" ");
            }
            self.term(b, LEVEL_EXPR);
        }
        self.indent -= 1;
        self.newline();
        self.text("}");
    }

    fn term(&mut self, t: &Term, min: u8) {
        let paren = level(t) < min;
        if paren {
            self.text("(");
        }
        self.term_inner(t);
        if paren {
            self.text(")");
        }
    }

    fn term_inner(&mut self, t: &Term) {
        use TermKind::*;
        match &t.kind {
            Block(stmts) => self.block(stmts),
            ValueDecl { name, ty, init } => {
                self.text("value ");
                self.text(name);
                if let Some(ty) = ty {
                    self.text(" : ");
                    self.ty(ty);
                }
                self.text(" = ");
                self.term(init, LEVEL_EXPR);
            }
            TypeDecl { name, ty } => {
                self.text(&format!("type {name} = {ty}"));
            }
            Literal(l) => {
                let s = match l {
                    super::ast::Literal::Int(n) => n.to_string(),
                    super::ast::Literal::Real(r) => format_real(*r),
                    super::ast::Literal::Bool(b) => b.to_string(),
                    super::ast::Literal::Str(s) => quote_string(s),
                };
                self.text(&s);
            }
            Ident(n) => self.text(n),
            Link(l) => self.out.push_link(l.id, l.display.clone()),
            Apply { callee, args } => {
                self.term(callee, LEVEL_POSTFIX);
                self.text("(");
                self.list(args, ", ", |r, a| r.term(a, LEVEL_EXPR));
                self.text(")");
            }
            AbstractionLit { params, style, body } => {
                self.text("abstraction");
                self.params(params);
                self.style_tag(style);
                self.text(" ");
                self.term(body, LEVEL_EXPR);
            }
            FunctionLit { params, result, body } => {
                self.text("function");
                self.params(params);
                self.text(" -> ");
                self.ty(result);
                self.text(" ");
                self.term(body, LEVEL_EXPR);
            }
            ConnectionNew { payload, style } => {
                self.text("connection(");
                self.list(payload, ", ", |r, t| r.ty(t));
                self.text(")");
                self.style_tag(style);
            }
            LocationNew(e) => {
                self.text("location(");
                self.term(e, LEVEL_EXPR);
                self.text(")");
            }
            Assign { target, value } => {
                self.term(target, LEVEL_BINARY);
                self.text(" := ");
                self.term(value, LEVEL_EXPR);
            }
            Send { channel, payload } => {
                self.text("via ");
                self.term(channel, LEVEL_POSTFIX);
                self.text(" send");
                if !payload.is_empty() {
                    self.text(" ");
                    self.list(payload, ", ", |r, p| r.term(p, LEVEL_EXPR));
                }
            }
            Receive { channel, binders } => {
                self.text("via ");
                self.term(channel, LEVEL_POSTFIX);
                self.text(" receive");
                if !binders.is_empty() {
                    self.text(" ");
                    self.list(binders, ", ", |r, b| {
                        r.text(&b.name);
                        if let Some(ty) = &b.ty {
                            r.text(" : ");
                            r.ty(ty);
                        }
                    });
                }
            }
            Replicate(body) => {
                self.text("replicate ");
                self.term(body, LEVEL_EXPR);
            }
            Choose(bs) => self.branches("choose", "or", bs),
            Parallel(bs) => self.branches("parallel", "and", bs),
            Compose { parts, unifications } => {
                self.text("compose {");
                self.indent += 1;
                for (i, p) in parts.iter().enumerate() {
                    self.newline();
                    if i > 0 {
                        self.text("and ");
                    }
                    if let Some(l) = &p.label {
                        self.text(l);
                        self.text(" as ");
                    }
                    self.term(&p.expr, LEVEL_BINARY);
                }
                if !unifications.is_empty() {
                    self.newline();
                    self.text("where {");
                    self.indent += 1;
                    for (i, u) in unifications.iter().enumerate() {
                        self.newline();
                        self.text(&format!("{} unifies {}", u.left, u.right));
                        if i + 1 < unifications.len() {
                            self.text(",");
                        }
                    }
                    self.indent -= 1;
                    self.newline();
                    self.text("}");
                }
                self.indent -= 1;
                self.newline();
                self.text("}");
            }
            Decompose(e) => {
                self.text("decompose ");
                self.term(e, LEVEL_POSTFIX);
            }
            Reify(e) => {
                self.text("reify(");
                self.term(e, LEVEL_EXPR);
                self.text(")");
            }
            Reflect(e) => {
                self.text("reflect(");
                self.term(e, LEVEL_EXPR);
                self.text(")");
            }
            Free(names) => self.text(&format!("free {{ {} }}", names.join(", "))),
            ViewLit(fields) => {
                self.text("view(");
                self.list(fields, ", ", |r, (n, e)| {
                    r.text(n);
                    r.text(" = ");
                    r.term(e, LEVEL_EXPR);
                });
                self.text(")");
            }
            SeqLit { elem, items } => {
                self.text("sequence");
                if let Some(t) = elem {
                    self.text("[");
                    self.ty(t);
                    self.text("]");
                }
                self.text("(");
                self.list(items, ", ", |r, e| r.term(e, LEVEL_EXPR));
                self.text(")");
            }
            FieldAccess { target, field } => {
                self.term(target, LEVEL_POSTFIX);
                self.text(".");
                self.text(field);
            }
            SeqIndex { target, index } => {
                self.term(target, LEVEL_POSTFIX);
                self.text(&format!("::{index}"));
            }
            LabelQualify { target, label } => {
                self.term(target, LEVEL_POSTFIX);
                self.text("::");
                self.text(label);
            }
            AnyInject(e) => {
                self.text("any(");
                self.term(e, LEVEL_EXPR);
                self.text(")");
            }
            Typecase { scrutinee, arms, default } => {
                self.text("typecase ");
                self.term(scrutinee, LEVEL_BINARY);
                self.text(" {");
                self.indent += 1;
                let mut first = true;
                for a in arms {
                    self.newline();
                    if !first {
                        self.text("or ");
                    }
                    first = false;
                    self.text(&format!("{} : {} => ", a.binder, a.ty));
                    self.term(&a.body, LEVEL_EXPR);
                }
                if let Some(d) = default {
                    self.newline();
                    if !first {
                        self.text("or ");
                    }
                    self.text("default => ");
                    self.term(d, LEVEL_EXPR);
                }
                self.indent -= 1;
                self.newline();
                self.text("}");
            }
            If { cond, then_branch, else_branch } => {
                self.text("if ");
                self.term(cond, LEVEL_EXPR);
                self.text(" then ");
                self.term(then_branch, LEVEL_EXPR);
                self.text(" else ");
                self.term(else_branch, LEVEL_EXPR);
            }
            Binary { op, lhs, rhs } => {
                let p = op.precedence();
                self.term(lhs, p);
                self.text(&format!(" {} ", op.symbol()));
                self.term(rhs, p + 1);
            }
            Unary { op, operand } => {
                match op {
                    UnOp::Neg => self.text("-"),
                    UnOp::Not => self.text("not "),
                }
                self.term(operand, LEVEL_UNARY);
            }
            StyleDecl(def) => self.text(&def.to_source()),
            Deref(inner) | Spawn(inner) => self.term_inner(inner),
        }
    }
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, ts: &[TypeExpr]) -> fmt::Result {
            for (i, t) in ts.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{t}")?;
            }
            Ok(())
        }
        match self {
            TypeExpr::Integer => f.write_str("integer"),
            TypeExpr::Real => f.write_str("real"),
            TypeExpr::Boolean => f.write_str("boolean"),
            TypeExpr::String => f.write_str("string"),
            TypeExpr::Any => f.write_str("any"),
            TypeExpr::Behaviour => f.write_str("behaviour"),
            TypeExpr::Location(t) => write!(f, "location[{t}]"),
            TypeExpr::Sequence(t) => write!(f, "sequence[{t}]"),
            TypeExpr::View(fields) => {
                f.write_str("view[")?;
                for (i, (n, t)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{n} : {t}")?;
                }
                f.write_str("]")
            }
            TypeExpr::Function(ps, r) => {
                f.write_str("function[")?;
                list(f, ps)?;
                write!(f, "] -> {r}")
            }
            TypeExpr::Connection(ps) => {
                f.write_str("connection[")?;
                list(f, ps)?;
                f.write_str("]")
            }
            TypeExpr::Abstraction(ps) => {
                f.write_str("abstraction[")?;
                list(f, ps)?;
                f.write_str("]")
            }
            TypeExpr::Named(n) => f.write_str(n),
        }
    }
}

//! Recursive-descent parser for the ADL and the structural style subset.

use std::rc::Rc;

use thiserror::Error;

use super::ast::*;
use super::lexer::{tokenize, Kw, Tok, Token};
use super::segments::SourceSegmentList;
use crate::styles::{Analysis, Constraint, Domain, Formula, StyleDef, StyleKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: expected {}, found {found}", expected.join(" or "))]
    Unexpected { line: u32, col: u32, expected: Vec<String>, found: String },
    #[error("{line}:{col}: {message}")]
    Lexical { line: u32, col: u32, message: String },
    #[error("{line}:{col}: {message}")]
    Invalid { line: u32, col: u32, message: String },
}

impl ParseError {
    pub fn position(&self) -> (u32, u32) {
        match self {
            ParseError::Unexpected { line, col, .. }
            | ParseError::Lexical { line, col, .. }
            | ParseError::Invalid { line, col, .. } => (*line, *col),
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ParseError::Lexical { .. } => "E_LEX",
            ParseError::Unexpected { .. } | ParseError::Invalid { .. } => "E_PARSE",
        }
    }

    /// The description without the position prefix.
    pub fn message(&self) -> String {
        match self {
            ParseError::Unexpected { expected, found, .. } => {
                format!("expected {}, found {found}", expected.join(" or "))
            }
            ParseError::Lexical { message, .. } | ParseError::Invalid { message, .. } => message.clone(),
        }
    }
}

pub type ParseResult<T> = Result<T, ParseError>;

/// Parse a hyper-text program. Link segments become `Link` terms.
pub fn parse(src: &SourceSegmentList) -> ParseResult<TermRef> {
    parse_str(&src.to_plain_text())
}

/// Parse program text in which links are written `⟦name#id⟧`.
pub fn parse_str(src: &str) -> ParseResult<TermRef> {
    let mut p = Parser::new(src)?;
    let start = p.cur().span;
    let stmts = p.stmt_list(&Tok::Eof)?;
    p.expect(Tok::Eof)?;
    Ok(Term::new(TermKind::Block(stmts), p.span_from(start)))
}

/// Parse `ident ('::' (nat|ident) | '.' ident)*`.
pub fn parse_path(src: &str) -> ParseResult<PathExpr> {
    let mut p = Parser::new(src)?;
    let path = p.path()?;
    p.expect(Tok::Eof)?;
    Ok(path)
}

pub fn parse_type(src: &str) -> ParseResult<TypeExpr> {
    let mut p = Parser::new(src)?;
    let t = p.type_expr()?;
    p.expect(Tok::Eof)?;
    Ok(t)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

fn kw_name(k: Kw) -> String {
    format!("`{}`", k.as_str())
}

impl Parser {
    fn new(src: &str) -> ParseResult<Self> {
        Ok(Parser { toks: tokenize(src)?, pos: 0 })
    }

    fn cur(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn prev_end(&self) -> u32 {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].span.end
        }
    }

    fn span_from(&self, start: Span) -> Span {
        Span::new(start.start, self.prev_end().max(start.start), start.line, start.col)
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let t = self.cur();
        ParseError::Unexpected {
            line: t.span.line,
            col: t.span.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.to_string(),
        }
    }

    fn invalid(&self, at: Span, message: impl Into<String>) -> ParseError {
        ParseError::Invalid { line: at.line, col: at.col, message: message.into() }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: Kw) -> bool {
        self.eat(&Tok::Kw(k))
    }

    fn expect(&mut self, t: Tok) -> ParseResult<Token> {
        if *self.peek() == t {
            Ok(self.advance())
        } else {
            Err(self.unexpected(&[&t.to_string()]))
        }
    }

    fn expect_kw(&mut self, k: Kw) -> ParseResult<()> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            Err(self.unexpected(&[&kw_name(k)]))
        }
    }

    fn ident(&mut self) -> ParseResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn is_word(&self, n: usize, w: &str) -> bool {
        matches!(self.peek_at(n), Tok::Ident(s) if s == w)
    }

    fn expect_word(&mut self, w: &str) -> ParseResult<()> {
        if self.is_word(0, w) {
            self.advance();
            Ok(())
        } else {
            Err(self.unexpected(&[&format!("`{w}`")]))
        }
    }

    // ---- statements ----

    fn stmt_list(&mut self, close: &Tok) -> ParseResult<Vec<TermRef>> {
        let mut stmts = Vec::new();
        loop {
            while self.eat(&Tok::Semi) {}
            if self.peek() == close {
                return Ok(stmts);
            }
            stmts.push(self.stmt()?);
            if self.peek() == close {
                return Ok(stmts);
            }
            if !self.eat(&Tok::Semi) {
                return Err(self.unexpected(&["`;`", &close.to_string()]));
            }
        }
    }

    fn stmt(&mut self) -> ParseResult<TermRef> {
        let start = self.cur().span;
        match self.peek() {
            Tok::Kw(Kw::Value) => {
                self.advance();
                let name = self.ident()?;
                let ty = if self.eat(&Tok::Colon) { Some(self.type_expr()?) } else { None };
                self.expect(Tok::Eq)?;
                let init = self.expr()?;
                Ok(Term::new(TermKind::ValueDecl { name, ty, init }, self.span_from(start)))
            }
            Tok::Kw(Kw::Type) => {
                self.advance();
                let name = self.ident()?;
                self.expect(Tok::Eq)?;
                let ty = self.type_expr()?;
                Ok(Term::new(TermKind::TypeDecl { name, ty }, self.span_from(start)))
            }
            Tok::Kw(Kw::Free) => {
                self.advance();
                self.expect(Tok::LBrace)?;
                let mut names = Vec::new();
                if !matches!(self.peek(), Tok::RBrace) {
                    names.push(self.ident()?);
                    while self.eat(&Tok::Comma) {
                        names.push(self.ident()?);
                    }
                }
                self.expect(Tok::RBrace)?;
                Ok(Term::new(TermKind::Free(names), self.span_from(start)))
            }
            Tok::Ident(_) if self.is_word(1, "is") && self.peek_at(2) == &Tok::Kw(Kw::Style) => {
                let def = self.style_def()?;
                Ok(Term::new(TermKind::StyleDecl(Rc::new(def)), self.span_from(start)))
            }
            _ => self.expr(),
        }
    }

    // ---- expressions ----

    fn expr(&mut self) -> ParseResult<TermRef> {
        let start = self.cur().span;
        let lhs = self.binary(1)?;
        if self.eat(&Tok::ColonEq) {
            let value = self.expr()?;
            return Ok(Term::new(TermKind::Assign { target: lhs, value }, self.span_from(start)));
        }
        Ok(lhs)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::OrOr => BinOp::Or,
            Tok::AndAnd => BinOp::And,
            Tok::Eq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::PlusPlus => BinOp::Concat,
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            _ => return None,
        })
    }

    fn binary(&mut self, min: u8) -> ParseResult<TermRef> {
        let start = self.cur().span;
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min {
                break;
            }
            self.advance();
            let rhs = self.binary(prec + 1)?;
            lhs = Term::new(TermKind::Binary { op, lhs, rhs }, self.span_from(start));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> ParseResult<TermRef> {
        let start = self.cur().span;
        let op = match self.peek() {
            Tok::Minus => UnOp::Neg,
            Tok::Kw(Kw::Not) => UnOp::Not,
            _ => return self.postfix(),
        };
        self.advance();
        let operand = self.unary()?;
        if op == UnOp::Neg {
            if let TermKind::Literal(lit) = &operand.kind {
                let folded = match lit {
                    Literal::Int(n) if *n > 0 => Some(Literal::Int(-n)),
                    Literal::Real(r) if *r > 0.0 => Some(Literal::Real(-r)),
                    _ => None,
                };
                if let Some(lit) = folded {
                    return Ok(Term::new(TermKind::Literal(lit), self.span_from(start)));
                }
            }
        }
        Ok(Term::new(TermKind::Unary { op, operand }, self.span_from(start)))
    }

    fn postfix(&mut self) -> ParseResult<TermRef> {
        let start = self.cur().span;
        let (mut t, open) = self.primary()?;
        if open {
            return Ok(t);
        }
        loop {
            match self.peek() {
                Tok::LParen => {
                    self.advance();
                    let args = self.expr_list(&Tok::RParen)?;
                    self.expect(Tok::RParen)?;
                    t = Term::new(TermKind::Apply { callee: t, args }, self.span_from(start));
                }
                Tok::Dot => {
                    self.advance();
                    let field = self.ident()?;
                    t = Term::new(TermKind::FieldAccess { target: t, field }, self.span_from(start));
                }
                Tok::ColonColon => {
                    self.advance();
                    match self.peek().clone() {
                        Tok::Int(n) if n >= 0 => {
                            self.advance();
                            t = Term::new(TermKind::SeqIndex { target: t, index: n as u64 }, self.span_from(start));
                        }
                        Tok::Ident(label) => {
                            self.advance();
                            t = Term::new(TermKind::LabelQualify { target: t, label }, self.span_from(start));
                        }
                        _ => return Err(self.unexpected(&["sequence index", "label"])),
                    }
                }
                _ => return Ok(t),
            }
        }
    }

    fn expr_list(&mut self, close: &Tok) -> ParseResult<Vec<TermRef>> {
        let mut out = Vec::new();
        if self.peek() == close {
            return Ok(out);
        }
        out.push(self.expr()?);
        while self.eat(&Tok::Comma) {
            out.push(self.expr()?);
        }
        Ok(out)
    }

    fn can_start_expr(&self) -> bool {
        match self.peek() {
            Tok::Int(_) | Tok::Real(_) | Tok::Str(_) | Tok::Ident(_) | Tok::Link { .. } => true,
            Tok::LParen | Tok::LBrace | Tok::Minus => true,
            Tok::Kw(k) => matches!(
                k,
                Kw::Via
                    | Kw::Replicate
                    | Kw::Choose
                    | Kw::Parallel
                    | Kw::Compose
                    | Kw::Decompose
                    | Kw::Reify
                    | Kw::Reflect
                    | Kw::Abstraction
                    | Kw::Function
                    | Kw::Connection
                    | Kw::Location
                    | Kw::Any
                    | Kw::View
                    | Kw::Sequence
                    | Kw::Typecase
                    | Kw::If
                    | Kw::Not
                    | Kw::True
                    | Kw::False
            ),
            _ => false,
        }
    }

    fn paren_expr(&mut self) -> ParseResult<TermRef> {
        self.expect(Tok::LParen)?;
        let e = self.expr()?;
        self.expect(Tok::RParen)?;
        Ok(e)
    }

    fn style_tag(&mut self) -> ParseResult<Option<String>> {
        if self.peek() == &Tok::Kw(Kw::In) && self.peek_at(1) == &Tok::Kw(Kw::Style) {
            self.advance();
            self.advance();
            Ok(Some(self.ident()?))
        } else {
            Ok(None)
        }
    }

    fn params(&mut self) -> ParseResult<Vec<Param>> {
        self.expect(Tok::LParen)?;
        let mut out = Vec::new();
        if self.peek() != &Tok::RParen {
            loop {
                let name = self.ident()?;
                self.expect(Tok::Colon)?;
                let ty = self.type_expr()?;
                out.push(Param { name, ty });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(out)
    }

    /// Returns the term and whether it is open on the right (its last
    /// component is a full expression, so no postfix operators may follow).
    fn primary(&mut self) -> ParseResult<(TermRef, bool)> {
        let start = self.cur().span;
        let tok = self.peek().clone();
        let closed = |p: &Self, k: TermKind| Ok((Term::new(k, p.span_from(start)), false));
        let open = |p: &Self, k: TermKind| Ok((Term::new(k, p.span_from(start)), true));
        match tok {
            Tok::Int(n) => {
                self.advance();
                closed(self, TermKind::Literal(Literal::Int(n)))
            }
            Tok::Real(r) => {
                self.advance();
                closed(self, TermKind::Literal(Literal::Real(r)))
            }
            Tok::Str(s) => {
                self.advance();
                closed(self, TermKind::Literal(Literal::Str(s)))
            }
            Tok::Kw(Kw::True) => {
                self.advance();
                closed(self, TermKind::Literal(Literal::Bool(true)))
            }
            Tok::Kw(Kw::False) => {
                self.advance();
                closed(self, TermKind::Literal(Literal::Bool(false)))
            }
            Tok::Ident(s) => {
                self.advance();
                closed(self, TermKind::Ident(s))
            }
            Tok::Link { id, display } => {
                self.advance();
                closed(self, TermKind::Link(LinkRef { id, display }))
            }
            Tok::LParen => {
                let e = self.paren_expr()?;
                Ok((e, false))
            }
            Tok::LBrace => {
                self.advance();
                let stmts = self.stmt_list(&Tok::RBrace)?;
                self.expect(Tok::RBrace)?;
                closed(self, TermKind::Block(stmts))
            }
            Tok::Kw(Kw::Via) => {
                self.advance();
                let channel = self.postfix()?;
                if self.eat_kw(Kw::Send) {
                    let mut payload = Vec::new();
                    if self.can_start_expr() {
                        payload.push(self.expr()?);
                        while self.eat(&Tok::Comma) {
                            payload.push(self.expr()?);
                        }
                    }
                    open(self, TermKind::Send { channel, payload })
                } else if self.eat_kw(Kw::Receive) {
                    let mut binders = Vec::new();
                    if matches!(self.peek(), Tok::Ident(_)) {
                        loop {
                            let name = self.ident()?;
                            let ty = if self.eat(&Tok::Colon) { Some(self.type_expr()?) } else { None };
                            binders.push(Binder { name, ty });
                            if !self.eat(&Tok::Comma) {
                                break;
                            }
                        }
                    }
                    open(self, TermKind::Receive { channel, binders })
                } else {
                    Err(self.unexpected(&["`send`", "`receive`"]))
                }
            }
            Tok::Kw(Kw::Replicate) => {
                self.advance();
                let body = self.expr()?;
                open(self, TermKind::Replicate(body))
            }
            Tok::Kw(Kw::Choose) => {
                self.advance();
                self.expect(Tok::LBrace)?;
                let mut branches = vec![self.expr()?];
                self.expect_kw(Kw::Or)?;
                branches.push(self.expr()?);
                while self.eat_kw(Kw::Or) {
                    branches.push(self.expr()?);
                }
                self.expect(Tok::RBrace)?;
                closed(self, TermKind::Choose(branches))
            }
            Tok::Kw(Kw::Parallel) => {
                self.advance();
                self.expect(Tok::LBrace)?;
                let mut branches = vec![self.expr()?];
                self.expect_kw(Kw::And)?;
                branches.push(self.expr()?);
                while self.eat_kw(Kw::And) {
                    branches.push(self.expr()?);
                }
                self.expect(Tok::RBrace)?;
                closed(self, TermKind::Parallel(branches))
            }
            Tok::Kw(Kw::Compose) => {
                self.advance();
                self.expect(Tok::LBrace)?;
                let mut parts = vec![self.compose_part()?];
                while self.eat_kw(Kw::And) {
                    parts.push(self.compose_part()?);
                }
                let mut unifications = Vec::new();
                if self.eat_kw(Kw::Where) {
                    self.expect(Tok::LBrace)?;
                    loop {
                        let left = self.path()?;
                        self.expect_kw(Kw::Unifies)?;
                        let right = self.path()?;
                        unifications.push(Unification { left, right });
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(Tok::RBrace)?;
                }
                self.expect(Tok::RBrace)?;
                closed(self, TermKind::Compose { parts, unifications })
            }
            Tok::Kw(Kw::Decompose) => {
                self.advance();
                let target = self.postfix()?;
                open(self, TermKind::Decompose(target))
            }
            Tok::Kw(Kw::Reify) => {
                self.advance();
                let e = self.paren_expr()?;
                closed(self, TermKind::Reify(e))
            }
            Tok::Kw(Kw::Reflect) => {
                self.advance();
                let e = self.paren_expr()?;
                closed(self, TermKind::Reflect(e))
            }
            Tok::Kw(Kw::Abstraction) => {
                self.advance();
                let params = self.params()?;
                let style = self.style_tag()?;
                let body = self.expr()?;
                open(self, TermKind::AbstractionLit { params, style, body })
            }
            Tok::Kw(Kw::Function) => {
                self.advance();
                let params = self.params()?;
                self.expect(Tok::Arrow)?;
                let result = self.type_expr()?;
                let body = self.expr()?;
                open(self, TermKind::FunctionLit { params, result, body })
            }
            Tok::Kw(Kw::Connection) => {
                self.advance();
                self.expect(Tok::LParen)?;
                let payload = self.type_list(&Tok::RParen)?;
                self.expect(Tok::RParen)?;
                let style = self.style_tag()?;
                closed(self, TermKind::ConnectionNew { payload, style })
            }
            Tok::Kw(Kw::Location) => {
                self.advance();
                let e = self.paren_expr()?;
                closed(self, TermKind::LocationNew(e))
            }
            Tok::Kw(Kw::Any) => {
                self.advance();
                let e = self.paren_expr()?;
                closed(self, TermKind::AnyInject(e))
            }
            Tok::Kw(Kw::View) => {
                self.advance();
                self.expect(Tok::LParen)?;
                let mut fields = Vec::new();
                if self.peek() != &Tok::RParen {
                    loop {
                        let name = self.ident()?;
                        self.expect(Tok::Eq)?;
                        fields.push((name, self.expr()?));
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(Tok::RParen)?;
                closed(self, TermKind::ViewLit(fields))
            }
            Tok::Kw(Kw::Sequence) => {
                self.advance();
                let elem = if self.eat(&Tok::LBracket) {
                    let t = self.type_expr()?;
                    self.expect(Tok::RBracket)?;
                    Some(t)
                } else {
                    None
                };
                self.expect(Tok::LParen)?;
                let items = self.expr_list(&Tok::RParen)?;
                self.expect(Tok::RParen)?;
                closed(self, TermKind::SeqLit { elem, items })
            }
            Tok::Kw(Kw::Typecase) => {
                self.advance();
                let scrutinee = self.binary(1)?;
                self.expect(Tok::LBrace)?;
                let mut arms = Vec::new();
                let mut default = None;
                loop {
                    if default.is_some() {
                        return Err(self.invalid(self.cur().span, "`default` must be the last typecase arm"));
                    }
                    if self.eat_kw(Kw::Default) {
                        self.expect(Tok::FatArrow)?;
                        default = Some(self.expr()?);
                    } else {
                        let binder = self.ident()?;
                        self.expect(Tok::Colon)?;
                        let ty = self.type_expr()?;
                        self.expect(Tok::FatArrow)?;
                        let body = self.expr()?;
                        arms.push(TypecaseArm { binder, ty, body });
                    }
                    if !self.eat_kw(Kw::Or) {
                        break;
                    }
                }
                self.expect(Tok::RBrace)?;
                closed(self, TermKind::Typecase { scrutinee, arms, default })
            }
            Tok::Kw(Kw::If) => {
                self.advance();
                let cond = self.expr()?;
                self.expect_kw(Kw::Then)?;
                let then_branch = self.expr()?;
                self.expect_kw(Kw::Else)?;
                let else_branch = self.expr()?;
                open(self, TermKind::If { cond, then_branch, else_branch })
            }
            _ => Err(self.unexpected(&["expression"])),
        }
    }

    fn compose_part(&mut self) -> ParseResult<ComposePart> {
        let label = if matches!(self.peek(), Tok::Ident(_)) && self.peek_at(1) == &Tok::Kw(Kw::As) {
            let l = self.ident()?;
            self.advance();
            Some(l)
        } else {
            None
        };
        let expr = self.binary(1)?;
        Ok(ComposePart { label, expr })
    }

    fn path(&mut self) -> ParseResult<PathExpr> {
        let base = self.ident()?;
        let mut segments = Vec::new();
        loop {
            match self.peek() {
                Tok::ColonColon => {
                    self.advance();
                    match self.peek().clone() {
                        Tok::Int(n) if n >= 0 => {
                            self.advance();
                            segments.push(PathSegment::Index(n as u64));
                        }
                        Tok::Ident(l) => {
                            self.advance();
                            segments.push(PathSegment::Label(l));
                        }
                        _ => return Err(self.unexpected(&["sequence index", "label"])),
                    }
                }
                Tok::Dot => {
                    self.advance();
                    segments.push(PathSegment::Field(self.ident()?));
                }
                _ => return Ok(PathExpr { base, segments }),
            }
        }
    }

    // ---- types ----

    fn type_list(&mut self, close: &Tok) -> ParseResult<Vec<TypeExpr>> {
        let mut out = Vec::new();
        if self.peek() == close {
            return Ok(out);
        }
        out.push(self.type_expr()?);
        while self.eat(&Tok::Comma) {
            out.push(self.type_expr()?);
        }
        Ok(out)
    }

    fn bracketed_type(&mut self) -> ParseResult<TypeExpr> {
        self.expect(Tok::LBracket)?;
        let t = self.type_expr()?;
        self.expect(Tok::RBracket)?;
        Ok(t)
    }

    fn type_expr(&mut self) -> ParseResult<TypeExpr> {
        let tok = self.peek().clone();
        let t = match tok {
            Tok::Kw(Kw::Integer) => TypeExpr::Integer,
            Tok::Kw(Kw::RealTy) => TypeExpr::Real,
            Tok::Kw(Kw::Boolean) => TypeExpr::Boolean,
            Tok::Kw(Kw::StringTy) => TypeExpr::String,
            Tok::Kw(Kw::Any) => TypeExpr::Any,
            Tok::Kw(Kw::Behaviour) => TypeExpr::Behaviour,
            Tok::Ident(s) => TypeExpr::Named(s),
            Tok::Kw(Kw::Location) => {
                self.advance();
                return Ok(TypeExpr::Location(Box::new(self.bracketed_type()?)));
            }
            Tok::Kw(Kw::Sequence) => {
                self.advance();
                return Ok(TypeExpr::Sequence(Box::new(self.bracketed_type()?)));
            }
            Tok::Kw(Kw::View) => {
                self.advance();
                self.expect(Tok::LBracket)?;
                let mut fields = Vec::new();
                if self.peek() != &Tok::RBracket {
                    loop {
                        let name = self.ident()?;
                        self.expect(Tok::Colon)?;
                        fields.push((name, self.type_expr()?));
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(Tok::RBracket)?;
                return Ok(TypeExpr::View(fields));
            }
            Tok::Kw(Kw::Function) => {
                self.advance();
                self.expect(Tok::LBracket)?;
                let params = self.type_list(&Tok::RBracket)?;
                self.expect(Tok::RBracket)?;
                self.expect(Tok::Arrow)?;
                let result = self.type_expr()?;
                return Ok(TypeExpr::Function(params, Box::new(result)));
            }
            Tok::Kw(Kw::Connection) => {
                self.advance();
                self.expect(Tok::LBracket)?;
                let ps = self.type_list(&Tok::RBracket)?;
                self.expect(Tok::RBracket)?;
                return Ok(TypeExpr::Connection(ps));
            }
            Tok::Kw(Kw::Abstraction) => {
                self.advance();
                self.expect(Tok::LBracket)?;
                let ps = self.type_list(&Tok::RBracket)?;
                self.expect(Tok::RBracket)?;
                return Ok(TypeExpr::Abstraction(ps));
            }
            _ => return Err(self.unexpected(&["type"])),
        };
        self.advance();
        Ok(t)
    }

    // ---- style language ----

    fn style_def(&mut self) -> ParseResult<StyleDef> {
        let name = self.ident()?;
        self.expect_word("is")?;
        self.expect_kw(Kw::Style)?;
        let mut def = StyleDef::element(&name, StyleKind::Style);
        if self.is_word(0, "extending") {
            self.advance();
            let at = self.cur().span;
            def.extends = match self.ident()?.as_str() {
                "Component" => StyleKind::Component,
                "Connector" => StyleKind::Connector,
                "Style" => StyleKind::Style,
                other => return Err(self.invalid(at, format!("unknown style kind `{other}`"))),
            };
        }
        if !self.eat_kw(Kw::Where) {
            return Ok(def);
        }
        self.expect(Tok::LBrace)?;
        if self.is_word(0, "elements") {
            self.advance();
            while matches!(self.peek(), Tok::Ident(_)) && self.is_word(1, "is") {
                def.elements.push(self.style_def()?);
                self.eat(&Tok::Semi);
            }
        }
        if self.is_word(0, "constraints") {
            self.advance();
            loop {
                let (domain, formulas) = self.apply_block()?;
                def.constraints.extend(formulas.into_iter().map(|formula| Constraint { domain, formula }));
                if !self.eat(&Tok::Comma) && !self.eat(&Tok::Dot) {
                    break;
                }
            }
            self.eat(&Tok::Semi);
        }
        if self.is_word(0, "analysis") {
            self.advance();
            while matches!(self.peek(), Tok::Ident(_)) && self.is_word(1, "is") {
                def.analyses.push(self.analysis()?);
                self.eat(&Tok::Semi);
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(def)
    }

    fn analysis(&mut self) -> ParseResult<Analysis> {
        let name = self.ident()?;
        self.expect_word("is")?;
        self.expect_word("AAL_property")?;
        self.expect_word("parameters")?;
        let mut params = Vec::new();
        loop {
            let p = self.ident()?;
            self.expect_kw(Kw::In)?;
            self.expect_kw(Kw::Style)?;
            params.push((p, self.ident()?));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::Semi)?;
        self.expect_word("property")?;
        let at = self.cur().span;
        let (domain, mut formulas) = self.apply_block()?;
        if formulas.len() != 1 {
            return Err(self.invalid(at, "an analysis property has exactly one formula"));
        }
        Ok(Analysis { name, params, domain, formula: formulas.remove(0) })
    }

    fn apply_block(&mut self) -> ParseResult<(Domain, Vec<Formula>)> {
        self.expect_word("to")?;
        let domain = if self.is_word(0, "components") {
            Domain::Components
        } else if self.is_word(0, "connectors") {
            Domain::Connectors
        } else {
            return Err(self.unexpected(&["`components`", "`connectors`"]));
        };
        self.advance();
        self.expect_word("apply")?;
        self.expect(Tok::LBrace)?;
        let mut fs = vec![self.formula(domain)?];
        while self.eat(&Tok::Comma) {
            fs.push(self.formula(domain)?);
        }
        self.expect(Tok::RBrace)?;
        Ok((domain, fs))
    }

    fn formula(&mut self, d: Domain) -> ParseResult<Formula> {
        let lhs = self.formula_or(d)?;
        if self.is_word(0, "implies") {
            self.advance();
            let rhs = self.formula(d)?;
            return Ok(Formula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn formula_or(&mut self, d: Domain) -> ParseResult<Formula> {
        let mut lhs = self.formula_and(d)?;
        while self.eat_kw(Kw::Or) {
            let rhs = self.formula_and(d)?;
            lhs = Formula::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn formula_and(&mut self, d: Domain) -> ParseResult<Formula> {
        let mut lhs = self.formula_unary(d)?;
        while self.eat_kw(Kw::And) {
            let rhs = self.formula_unary(d)?;
            lhs = Formula::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn formula_unary(&mut self, d: Domain) -> ParseResult<Formula> {
        if self.eat_kw(Kw::Not) {
            return Ok(Formula::Not(Box::new(self.formula_unary(d)?)));
        }
        if self.eat(&Tok::LParen) {
            let f = self.formula(d)?;
            self.expect(Tok::RParen)?;
            return Ok(f);
        }
        let word = self.ident()?;
        if (word == "forall" || word == "exists") && self.peek() == &Tok::LParen {
            self.advance();
            let mut vars = vec![self.ident()?];
            while self.eat(&Tok::Comma) {
                vars.push(self.ident()?);
            }
            self.expect(Tok::Bar)?;
            let body = Box::new(self.formula(d)?);
            self.expect(Tok::RParen)?;
            return Ok(if word == "forall" {
                Formula::Forall { domain: d, vars, body }
            } else {
                Formula::Exists { domain: d, vars, body }
            });
        }
        if self.eat_kw(Kw::In) {
            self.expect_kw(Kw::Style)?;
            return Ok(Formula::InStyle { var: word, style: self.ident()? });
        }
        if self.is_word(0, "connected") {
            self.advance();
            self.expect_word("to")?;
            return Ok(Formula::Connected { left: word, right: self.ident()? });
        }
        if self.is_word(0, "attached") {
            self.advance();
            self.expect_word("to")?;
            return Ok(Formula::Attached { element: word, connector: self.ident()? });
        }
        Err(self.unexpected(&["`in style`", "`connected to`", "`attached to`"]))
    }
}

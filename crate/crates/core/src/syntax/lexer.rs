//! Tokeniser for ADL source. `!` starts a line comment; `⟦name#id⟧` is a link.

use std::fmt;

use super::ast::Span;
use super::parser::ParseError;
use super::segments::{parse_link, LINK_OPEN};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Real(f64),
    Str(String),
    Link { id: u64, display: String },
    Kw(Kw),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    ColonColon,
    ColonEq,
    Dot,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    PlusPlus,
    Minus,
    Star,
    Slash,
    AndAnd,
    OrOr,
    Arrow,
    FatArrow,
    Bar,
    Eof,
}

macro_rules! keywords {
    ($($variant:ident => $text:literal),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub enum Kw { $($variant),* }

        impl Kw {
            pub fn from_str(s: &str) -> Option<Kw> {
                match s { $($text => Some(Kw::$variant),)* _ => None }
            }
            pub fn as_str(self) -> &'static str {
                match self { $(Kw::$variant => $text),* }
            }
        }
    };
}

keywords! {
    Value => "value",
    Type => "type",
    Free => "free",
    Via => "via",
    Send => "send",
    Receive => "receive",
    Replicate => "replicate",
    Choose => "choose",
    Or => "or",
    And => "and",
    Parallel => "parallel",
    Compose => "compose",
    As => "as",
    Where => "where",
    Unifies => "unifies",
    Decompose => "decompose",
    Reify => "reify",
    Reflect => "reflect",
    Abstraction => "abstraction",
    Function => "function",
    Connection => "connection",
    Location => "location",
    Any => "any",
    View => "view",
    Sequence => "sequence",
    Typecase => "typecase",
    Default => "default",
    If => "if",
    Then => "then",
    Else => "else",
    Not => "not",
    True => "true",
    False => "false",
    In => "in",
    Style => "style",
    Integer => "integer",
    RealTy => "real",
    Boolean => "boolean",
    StringTy => "string",
    Behaviour => "behaviour",
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "identifier `{s}`"),
            Tok::Int(n) => return write!(f, "integer `{n}`"),
            Tok::Real(r) => return write!(f, "real `{r}`"),
            Tok::Str(_) => "string literal",
            Tok::Link { display, .. } => return write!(f, "link `{display}`"),
            Tok::Kw(k) => return write!(f, "`{}`", k.as_str()),
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBracket => "`[`",
            Tok::RBracket => "`]`",
            Tok::Comma => "`,`",
            Tok::Semi => "`;`",
            Tok::Colon => "`:`",
            Tok::ColonColon => "`::`",
            Tok::ColonEq => "`:=`",
            Tok::Dot => "`.`",
            Tok::Eq => "`=`",
            Tok::Ne => "`<>`",
            Tok::Lt => "`<`",
            Tok::Le => "`<=`",
            Tok::Gt => "`>`",
            Tok::Ge => "`>=`",
            Tok::Plus => "`+`",
            Tok::PlusPlus => "`++`",
            Tok::Minus => "`-`",
            Tok::Star => "`*`",
            Tok::Slash => "`/`",
            Tok::AndAnd => "`&&`",
            Tok::OrOr => "`||`",
            Tok::Arrow => "`->`",
            Tok::FatArrow => "`=>`",
            Tok::Bar => "`|`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut lx = Lexer { src, pos: 0, line: 1, col: 1 };
    let mut out = Vec::new();
    loop {
        let t = lx.next_token()?;
        let eof = t.tok == Tok::Eof;
        out.push(t);
        if eof {
            return Ok(out);
        }
    }
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, line: u32, col: u32, msg: impl Into<String>) -> ParseError {
        ParseError::Lexical { line, col, message: msg.into() }
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '!' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn next_token(&mut self) -> Result<Token, ParseError> {
        self.skip_trivia();
        let start = self.pos;
        let (line, col) = (self.line, self.col);
        let Some(c) = self.peek() else {
            return Ok(Token { tok: Tok::Eof, span: Span::new(start as u32, start as u32, line, col) });
        };
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(c) = self.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(c);
                    self.bump();
                } else {
                    break;
                }
            }
            match Kw::from_str(&s) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(s),
            }
        } else if c.is_ascii_digit() {
            self.number(line, col)?
        } else if c == '"' {
            self.string(line, col)?
        } else if c == LINK_OPEN {
            match parse_link(&self.src[self.pos..]) {
                Some((id, display, len)) => {
                    let end = self.pos + len;
                    while self.pos < end {
                        self.bump();
                    }
                    Tok::Link { id, display }
                }
                None => return Err(self.error(line, col, "malformed link, expected `⟦name#id⟧`")),
            }
        } else {
            self.bump();
            let next = self.peek();
            let two = |lx: &mut Self, t: Tok| {
                lx.bump();
                t
            };
            match (c, next) {
                ('{', _) => Tok::LBrace,
                ('}', _) => Tok::RBrace,
                ('(', _) => Tok::LParen,
                (')', _) => Tok::RParen,
                ('[', _) => Tok::LBracket,
                (']', _) => Tok::RBracket,
                (',', _) => Tok::Comma,
                (';', _) => Tok::Semi,
                (':', Some(':')) => two(self, Tok::ColonColon),
                (':', Some('=')) => two(self, Tok::ColonEq),
                (':', _) => Tok::Colon,
                ('.', _) => Tok::Dot,
                ('=', Some('>')) => two(self, Tok::FatArrow),
                ('=', _) => Tok::Eq,
                ('<', Some('>')) => two(self, Tok::Ne),
                ('<', Some('=')) => two(self, Tok::Le),
                ('<', _) => Tok::Lt,
                ('>', Some('=')) => two(self, Tok::Ge),
                ('>', _) => Tok::Gt,
                ('+', Some('+')) => two(self, Tok::PlusPlus),
                ('+', _) => Tok::Plus,
                ('-', Some('>')) => two(self, Tok::Arrow),
                ('-', _) => Tok::Minus,
                ('*', _) => Tok::Star,
                ('/', _) => Tok::Slash,
                ('&', Some('&')) => two(self, Tok::AndAnd),
                ('|', Some('|')) => two(self, Tok::OrOr),
                ('|', _) => Tok::Bar,
                _ => return Err(self.error(line, col, format!("unexpected character `{c}`"))),
            }
        };
        Ok(Token { tok, span: Span::new(start as u32, self.pos as u32, line, col) })
    }

    fn number(&mut self, line: u32, col: u32) -> Result<Tok, ParseError> {
        let start = self.pos;
        let mut is_real = false;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
        if self.peek() == Some('.') && matches!(self.peek2(), Some(c) if c.is_ascii_digit()) {
            is_real = true;
            self.bump();
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.bump();
            }
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let save = (self.pos, self.line, self.col);
            self.bump();
            if matches!(self.peek(), Some('+' | '-')) {
                self.bump();
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                is_real = true;
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.bump();
                }
            } else {
                (self.pos, self.line, self.col) = save;
            }
        }
        let text = &self.src[start..self.pos];
        if is_real {
            text.parse().map(Tok::Real).map_err(|_| self.error(line, col, format!("invalid real literal `{text}`")))
        } else {
            text.parse()
                .map(Tok::Int)
                .map_err(|_| self.error(line, col, format!("integer literal `{text}` out of range")))
        }
    }

    fn string(&mut self, line: u32, col: u32) -> Result<Tok, ParseError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error(line, col, "unterminated string literal")),
                Some('"') => return Ok(Tok::Str(s)),
                Some('\\') => match self.bump() {
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    Some('r') => s.push('\r'),
                    Some('"') => s.push('"'),
                    Some('\\') => s.push('\\'),
                    Some('u') => {
                        if self.bump() != Some('{') {
                            return Err(self.error(line, col, "expected `{` after `\\u`"));
                        }
                        let mut hex = String::new();
                        loop {
                            match self.bump() {
                                Some('}') => break,
                                Some(c) if c.is_ascii_hexdigit() => hex.push(c),
                                _ => return Err(self.error(line, col, "bad unicode escape")),
                            }
                        }
                        let ch = u32::from_str_radix(&hex, 16)
                            .ok()
                            .and_then(char::from_u32)
                            .ok_or_else(|| self.error(line, col, "bad unicode escape"))?;
                        s.push(ch);
                    }
                    other => return Err(self.error(line, col, format!("unknown escape `\\{}`", other.unwrap_or(' ')))),
                },
                Some(c) => s.push(c),
            }
        }
    }
}

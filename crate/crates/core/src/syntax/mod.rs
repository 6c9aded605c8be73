//! Concrete syntax: tokens, terms, the parser and the pretty printer.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod render;
pub mod segments;

pub use ast::*;
pub use parser::{parse, parse_path, parse_str, parse_type, ParseError};
pub use render::{format_real, quote_string, render_plain, render_program, render_term};
pub use segments::{Segment, SourceSegmentList};

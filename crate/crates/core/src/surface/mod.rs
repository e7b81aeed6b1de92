//! Parser for the SQL fragment plus a textual relational-calculus
//! condition syntax, producing statements, actions, and formulas.

mod ast;
mod bind;
mod lexer;
mod parser;

pub use ast::*;
pub use bind::{bind, BindError, Bound, Catalog};
pub use lexer::{Lexer, Token, TokenKind};
pub use parser::{parse, parse_formula, ParseError};

//! Concrete syntax for `.bmc` programs. See `GRAMMAR.md` at the
//! repository root for the token set and precedence table.

pub mod ast;
mod elaborate;
pub mod lexer;
mod parse;
pub mod pretty;

pub use ast::SourceProgram;
pub use elaborate::{elaborate, input_types};
pub use parse::{parse, parse_expr, parse_literal};
pub use pretty::print_config;

use crate::syntax::{Bound, Config, ConfigError, Type, TypeError, Value};
use ast::Literal;

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Lex { line: u32, col: u32, msg: String },
    #[error("{line}:{col}: expected {}, found {found}", expected.join(" or "))]
    Syntax { line: u32, col: u32, expected: Vec<String>, found: String },
    #[error("{line}:{col}: duplicate {kind} `{name}`")]
    DuplicateName { kind: &'static str, name: String, line: u32, col: u32 },
    #[error("{line}:{col}: undeclared reference `{name}`")]
    UndeclaredRef { name: String, line: u32, col: u32 },
    #[error("{line}:{col}: unknown name `{name}`")]
    UnknownName { name: String, line: u32, col: u32 },
    #[error("{line}:{col}: `{name}` is used with type {first} and with type {second}")]
    TypeClash { name: String, first: Type, second: Type, line: u32, col: u32 },
    #[error("{line}:{col}: `{name}` clashes with names generated by the translation")]
    ReservedName { name: String, line: u32, col: u32 },
    #[error("initial value of `{name}`: {msg}")]
    BadLiteral { name: String, msg: String },
    #[error("type error: {0}")]
    Type(TypeError),
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
}

/// Parse and elaborate in one step.
pub fn load(src: &str, bound: Bound) -> Result<Config, ParseError> {
    elaborate(&parse(src)?, bound)
}

/// A ground value of type `ty` written as a literal: `3`, `-1`, `()`,
/// `(1, ())`, `true`.
pub fn parse_value(src: &str, ty: &Type) -> Result<Value, ParseError> {
    fn conv(l: &Literal, ty: &Type, src: &str) -> Result<Value, ParseError> {
        match (l, ty) {
            (Literal::Int(i), Type::Int) => Ok(Value::Int(*i)),
            (Literal::Unit, Type::Unit) => Ok(Value::Unit),
            (Literal::Pair(a, b), Type::Prod(ta, tb)) => Ok(Value::pair(conv(a, ta, src)?, conv(b, tb, src)?)),
            _ => Err(ParseError::BadLiteral { name: src.to_string(), msg: format!("not a literal of type {ty}") }),
        }
    }
    conv(&parse_literal(src)?, ty, src)
}

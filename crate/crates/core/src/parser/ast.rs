//! Raw syntax tree as written in a `.bmc` file, before name resolution.

use super::lexer::Pos;
use crate::syntax::{BinOp, Side, Type};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Ident {
    pub name: String,
    pub pos: Pos,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Param {
    pub name: Ident,
    pub ty: Type,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Expr {
    Fail,
    Int(i64),
    Unit,
    Name(Ident),
    Deref(Ident),
    Assign(Ident, Box<Expr>),
    Incr(Ident),
    BinOp(BinOp, Box<Expr>, Box<Expr>),
    Pair(Box<Expr>, Box<Expr>),
    Proj(Side, Option<Type>, Box<Expr>),
    App(Box<Expr>, Vec<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Let(Param, Box<Expr>, Box<Expr>),
    /// `letrec f :(T) = fun params -> body in cont`
    Letrec(Param, Vec<Param>, Box<Expr>, Box<Expr>),
    Fun(Vec<Param>, Box<Expr>),
    Seq(Box<Expr>, Box<Expr>),
    Assert(Box<Expr>),
    Ascribe(Box<Expr>, Type),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Literal {
    Int(i64),
    Unit,
    Name(Ident),
    Pair(Box<Literal>, Box<Literal>),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RefDecl {
    pub name: Ident,
    pub ty: Type,
    pub init: Literal,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MethodDecl {
    pub name: Ident,
    pub params: Vec<Param>,
    pub ret: Type,
    pub body: Expr,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MainDecl {
    pub params: Vec<Param>,
    pub ret: Type,
    pub body: Expr,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SourceProgram {
    pub refs: Vec<RefDecl>,
    pub methods: Vec<MethodDecl>,
    pub main: MainDecl,
}

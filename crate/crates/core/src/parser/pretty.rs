//! Printing terms and configurations back to concrete syntax.

use std::fmt::{self, Write};

use crate::syntax::{Config, Side, Term, Value};

fn is_atomic(t: &Term) -> bool {
    match t {
        Term::Int(i) => *i >= 0,
        Term::Var(_) | Term::Meth(_) | Term::Unit | Term::Deref(_) | Term::Fail(_) | Term::Pair(..) => true,
        _ => false,
    }
}

fn operand(t: &Term, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if is_atomic(t) {
        write!(f, "{t}")
    } else {
        write!(f, "({t})")
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Fail(t) => write!(f, "(fail : {t})"),
            Term::Var(x) => write!(f, "{x}"),
            Term::Meth(m) => write!(f, "{m}"),
            Term::Int(i) => write!(f, "{i}"),
            Term::Unit => f.write_str("()"),
            Term::Assign(r, m) => write!(f, "{r} := {m}"),
            Term::Deref(r) => write!(f, "!{r}"),
            Term::BinOp(op, a, b) => {
                operand(a, f)?;
                write!(f, " {} ", op.symbol())?;
                operand(b, f)
            }
            Term::Pair(a, b) => write!(f, "({a}, {b})"),
            Term::Proj(s, m) => {
                f.write_str(if *s == Side::First { "fst " } else { "snd " })?;
                operand(m, f)
            }
            Term::AppVar(x, m) => {
                write!(f, "{x} ")?;
                operand(m, f)
            }
            Term::AppMeth(x, m) => {
                write!(f, "{x} ")?;
                operand(m, f)
            }
            Term::If(c, t, e) => write!(f, "if {c} then {t} else {e}"),
            Term::Let(x, m, n) => write!(f, "let {x} :({}) = {m} in {n}", x.ty),
            Term::Letrec(g, x, body, cont) => {
                write!(f, "letrec {g} :({}) = fun ({x}:{}) -> {body} in {cont}", g.ty, x.ty)
            }
            Term::Lambda(x, body) => write!(f, "fun ({x}:{}) -> {body}", x.ty),
        }
    }
}

fn literal(v: &Value) -> String {
    match v {
        Value::Pair(a, b) => format!("({}, {})", literal(a), literal(b)),
        other => other.to_string(),
    }
}

/// Concrete syntax for a whole configuration; parses back to the same
/// configuration (modulo the bound, which is not part of the text).
pub fn print_config(c: &Config) -> String {
    let mut out = String::new();
    if !c.store.is_empty() {
        out.push_str("Refs:\n");
        for (r, v) in &c.store {
            let _ = writeln!(out, "  {r} :({}) = {};", r.ty, literal(v));
        }
    }
    if !c.repo.is_empty() {
        out.push_str("Methods:\n");
        for (m, lam) in &c.repo {
            let ret = m.ty.as_arrow().map(|(_, b)| b.to_string()).unwrap_or_default();
            let _ = writeln!(out, "  {m} ({}:{}) :({ret}) =\n    {};", lam.param, lam.param.ty, lam.body);
        }
    }
    out.push_str("Main ");
    if c.inputs.is_empty() {
        out.push_str("() ");
    }
    for x in &c.inputs {
        let _ = write!(out, "({x}:{}) ", x.ty);
    }
    let ty = crate::syntax::typecheck(&c.term).map(|t| t.to_string()).unwrap_or_else(|_| "Unit".into());
    let _ = writeln!(out, ":({ty}):\n  {}", c.term);
    out
}

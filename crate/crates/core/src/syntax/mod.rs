//! Core calculus: types, typed names, terms, values, repositories, stores.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;

pub mod sugar;
pub mod typecheck;
pub mod validate;

pub use sugar::{desugar, Sugared};
pub use typecheck::{typecheck, TypeError};
pub use validate::{validate_config, ConfigError, ConfigReport};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Type {
    Unit,
    Int,
    Prod(Arc<Type>, Arc<Type>),
    Arrow(Arc<Type>, Arc<Type>),
}

impl Type {
    pub fn prod(a: Type, b: Type) -> Type {
        Type::Prod(Arc::new(a), Arc::new(b))
    }

    pub fn arrow(a: Type, b: Type) -> Type {
        Type::Arrow(Arc::new(a), Arc::new(b))
    }

    /// No arrow anywhere inside.
    pub fn is_ground(&self) -> bool {
        match self {
            Type::Unit | Type::Int => true,
            Type::Prod(a, b) => a.is_ground() && b.is_ground(),
            Type::Arrow(..) => false,
        }
    }

    pub fn as_arrow(&self) -> Option<(&Type, &Type)> {
        match self {
            Type::Arrow(a, b) => Some((a, b)),
            _ => None,
        }
    }

    pub fn as_prod(&self) -> Option<(&Type, &Type)> {
        match self {
            Type::Prod(a, b) => Some((a, b)),
            _ => None,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            Type::Unit => f.write_str("Unit"),
            Type::Int => f.write_str("Int"),
            Type::Prod(a, b) => {
                if prec > 1 {
                    f.write_str("(")?;
                }
                a.fmt_prec(f, 2)?;
                f.write_str(" * ")?;
                b.fmt_prec(f, 2)?;
                if prec > 1 {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Type::Arrow(a, b) => {
                if prec > 0 {
                    f.write_str("(")?;
                }
                a.fmt_prec(f, 1)?;
                f.write_str(" -> ")?;
                b.fmt_prec(f, 0)?;
                if prec > 0 {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

macro_rules! typed_name {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
        pub struct $name {
            pub name: Arc<str>,
            pub ty: Type,
        }

        impl $name {
            pub fn new(name: impl Into<Arc<str>>, ty: Type) -> Self {
                $name { name: name.into(), ty }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.name)
            }
        }
    };
}

typed_name!(
    /// A variable. Identity is the pair (name, type).
    Var
);
typed_name!(
    /// A global reference.
    Ref
);
typed_name!(
    /// A method name; its type is always an arrow.
    Meth
);

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, thiserror::Error)]
pub enum ArithError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow")]
    Overflow,
}

impl BinOp {
    pub const ALL: [BinOp; 13] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Mod,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::And,
        BinOp::Or,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "div",
            BinOp::Mod => "mod",
            BinOp::Eq => "==",
            BinOp::Ne => "<>",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Euclidean div/mod, matching SMT-LIB `div`/`mod` on Int.
    pub fn apply(self, a: i64, b: i64) -> Result<i64, ArithError> {
        let flag = |c: bool| if c { 1 } else { 0 };
        match self {
            BinOp::Add => a.checked_add(b).ok_or(ArithError::Overflow),
            BinOp::Sub => a.checked_sub(b).ok_or(ArithError::Overflow),
            BinOp::Mul => a.checked_mul(b).ok_or(ArithError::Overflow),
            BinOp::Div => {
                if b == 0 {
                    Err(ArithError::DivisionByZero)
                } else {
                    a.checked_div_euclid(b).ok_or(ArithError::Overflow)
                }
            }
            BinOp::Mod => {
                if b == 0 {
                    Err(ArithError::DivisionByZero)
                } else {
                    a.checked_rem_euclid(b).ok_or(ArithError::Overflow)
                }
            }
            BinOp::Eq => Ok(flag(a == b)),
            BinOp::Ne => Ok(flag(a != b)),
            BinOp::Lt => Ok(flag(a < b)),
            BinOp::Le => Ok(flag(a <= b)),
            BinOp::Gt => Ok(flag(a > b)),
            BinOp::Ge => Ok(flag(a >= b)),
            BinOp::And => Ok(flag(a != 0 && b != 0)),
            BinOp::Or => Ok(flag(a != 0 || b != 0)),
        }
    }
}

/// Which component a projection selects.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Side {
    First,
    Second,
}

impl Side {
    pub fn index(self) -> u8 {
        match self {
            Side::First => 1,
            Side::Second => 2,
        }
    }
}

/// HORef terms. `Fail` carries the type it was elaborated at, so every
/// term has a type that can be synthesised without a context.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Term {
    Fail(Type),
    Var(Var),
    Meth(Meth),
    Int(i64),
    Unit,
    Assign(Ref, Box<Term>),
    Deref(Ref),
    BinOp(BinOp, Box<Term>, Box<Term>),
    Pair(Box<Term>, Box<Term>),
    Proj(Side, Box<Term>),
    AppVar(Var, Box<Term>),
    AppMeth(Meth, Box<Term>),
    /// `If(c, then, else)`: `then` runs when `c` is non-zero.
    If(Box<Term>, Box<Term>, Box<Term>),
    Let(Var, Box<Term>, Box<Term>),
    /// `Letrec(f, x, body, cont)` is `letrec f = λx.body in cont`.
    Letrec(Var, Var, Box<Term>, Box<Term>),
    Lambda(Var, Box<Term>),
}

impl Term {
    pub fn binop(op: BinOp, a: Term, b: Term) -> Term {
        Term::BinOp(op, Box::new(a), Box::new(b))
    }

    pub fn pair(a: Term, b: Term) -> Term {
        Term::Pair(Box::new(a), Box::new(b))
    }

    pub fn proj(side: Side, t: Term) -> Term {
        Term::Proj(side, Box::new(t))
    }

    pub fn assign(r: Ref, t: Term) -> Term {
        Term::Assign(r, Box::new(t))
    }

    pub fn app_var(x: Var, t: Term) -> Term {
        Term::AppVar(x, Box::new(t))
    }

    pub fn app_meth(m: Meth, t: Term) -> Term {
        Term::AppMeth(m, Box::new(t))
    }

    pub fn ite(c: Term, t: Term, e: Term) -> Term {
        Term::If(Box::new(c), Box::new(t), Box::new(e))
    }

    pub fn let_(x: Var, m: Term, n: Term) -> Term {
        Term::Let(x, Box::new(m), Box::new(n))
    }

    pub fn letrec(f: Var, x: Var, body: Term, cont: Term) -> Term {
        Term::Letrec(f, x, Box::new(body), Box::new(cont))
    }

    pub fn lambda(x: Var, body: Term) -> Term {
        Term::Lambda(x, Box::new(body))
    }

    pub fn is_value(&self) -> bool {
        match self {
            Term::Var(_) | Term::Meth(_) | Term::Int(_) | Term::Unit => true,
            Term::Pair(a, b) => a.is_value() && b.is_value(),
            _ => false,
        }
    }

    /// Capture-free substitution of the value term `v` for `x`.
    ///
    /// `AppVar(x, M)` becomes `AppMeth(m, M)` when `v` is a method name and
    /// `AppVar(y, M)` when `v` is a variable.
    pub fn subst(&self, x: &Var, v: &Term) -> Term {
        let go = |t: &Term| Box::new(t.subst(x, v));
        match self {
            Term::Var(y) if y == x => v.clone(),
            Term::Fail(_)
            | Term::Var(_)
            | Term::Meth(_)
            | Term::Int(_)
            | Term::Unit
            | Term::Deref(_) => self.clone(),
            Term::Assign(r, m) => Term::Assign(r.clone(), go(m)),
            Term::BinOp(op, a, b) => Term::BinOp(*op, go(a), go(b)),
            Term::Pair(a, b) => Term::Pair(go(a), go(b)),
            Term::Proj(s, m) => Term::Proj(*s, go(m)),
            Term::AppVar(y, m) => {
                let arg = go(m);
                if y == x {
                    match v {
                        Term::Meth(n) => Term::AppMeth(n.clone(), arg),
                        Term::Var(z) => Term::AppVar(z.clone(), arg),
                        _ => Term::AppVar(y.clone(), arg),
                    }
                } else {
                    Term::AppVar(y.clone(), arg)
                }
            }
            Term::AppMeth(m, a) => Term::AppMeth(m.clone(), go(a)),
            Term::If(c, t, e) => Term::If(go(c), go(t), go(e)),
            Term::Let(y, m, n) => {
                if y == x {
                    Term::Let(y.clone(), go(m), n.clone())
                } else {
                    Term::Let(y.clone(), go(m), go(n))
                }
            }
            Term::Letrec(f, y, body, cont) => {
                let body = if f == x || y == x { body.clone() } else { go(body) };
                let cont = if f == x { cont.clone() } else { go(cont) };
                Term::Letrec(f.clone(), y.clone(), body, cont)
            }
            Term::Lambda(y, body) => {
                if y == x {
                    self.clone()
                } else {
                    Term::Lambda(y.clone(), go(body))
                }
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Term::AppVar(x, m) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
                m.collect_free(bound, out);
            }
            Term::Fail(_) | Term::Meth(_) | Term::Int(_) | Term::Unit | Term::Deref(_) => {}
            Term::Assign(_, m) | Term::Proj(_, m) | Term::AppMeth(_, m) => {
                m.collect_free(bound, out)
            }
            Term::BinOp(_, a, b) | Term::Pair(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Term::If(c, t, e) => {
                c.collect_free(bound, out);
                t.collect_free(bound, out);
                e.collect_free(bound, out);
            }
            Term::Let(x, m, n) => {
                m.collect_free(bound, out);
                bound.push(x.clone());
                n.collect_free(bound, out);
                bound.pop();
            }
            Term::Letrec(f, x, body, cont) => {
                bound.push(f.clone());
                bound.push(x.clone());
                body.collect_free(bound, out);
                bound.pop();
                cont.collect_free(bound, out);
                bound.pop();
            }
            Term::Lambda(x, body) => {
                bound.push(x.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Calls `f` on every sub-term, pre-order.
    pub fn visit(&self, f: &mut impl FnMut(&Term)) {
        f(self);
        match self {
            Term::Fail(_)
            | Term::Var(_)
            | Term::Meth(_)
            | Term::Int(_)
            | Term::Unit
            | Term::Deref(_) => {}
            Term::Assign(_, m)
            | Term::Proj(_, m)
            | Term::AppVar(_, m)
            | Term::AppMeth(_, m)
            | Term::Lambda(_, m) => m.visit(f),
            Term::BinOp(_, a, b) | Term::Pair(a, b) | Term::Let(_, a, b) | Term::Letrec(_, _, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Term::If(c, t, e) => {
                c.visit(f);
                t.visit(f);
                e.visit(f);
            }
        }
    }

    pub fn meths(&self) -> BTreeSet<Meth> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| match t {
            Term::Meth(m) | Term::AppMeth(m, _) => {
                out.insert(m.clone());
            }
            _ => {}
        });
        out
    }

    pub fn refs(&self) -> BTreeSet<Ref> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| match t {
            Term::Deref(r) | Term::Assign(r, _) => {
                out.insert(r.clone());
            }
            _ => {}
        });
        out
    }

    /// Every variable that occurs in a binding position.
    pub fn binders(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.visit(&mut |t| match t {
            Term::Let(x, _, _) | Term::Lambda(x, _) => out.push(x.clone()),
            Term::Letrec(f, x, _, _) => {
                out.push(f.clone());
                out.push(x.clone());
            }
            _ => {}
        });
        out
    }

    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }
}

/// Closed or open values.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Value {
    Var(Var),
    Meth(Meth),
    Int(i64),
    Unit,
    Pair(Box<Value>, Box<Value>),
}

impl Value {
    pub fn pair(a: Value, b: Value) -> Value {
        Value::Pair(Box::new(a), Box::new(b))
    }

    pub fn to_term(&self) -> Term {
        match self {
            Value::Var(x) => Term::Var(x.clone()),
            Value::Meth(m) => Term::Meth(m.clone()),
            Value::Int(i) => Term::Int(*i),
            Value::Unit => Term::Unit,
            Value::Pair(a, b) => Term::pair(a.to_term(), b.to_term()),
        }
    }

    pub fn from_term(t: &Term) -> Option<Value> {
        match t {
            Term::Var(x) => Some(Value::Var(x.clone())),
            Term::Meth(m) => Some(Value::Meth(m.clone())),
            Term::Int(i) => Some(Value::Int(*i)),
            Term::Unit => Some(Value::Unit),
            Term::Pair(a, b) => Some(Value::pair(Value::from_term(a)?, Value::from_term(b)?)),
            _ => None,
        }
    }

    pub fn ty(&self) -> Type {
        match self {
            Value::Var(x) => x.ty.clone(),
            Value::Meth(m) => m.ty.clone(),
            Value::Int(_) => Type::Int,
            Value::Unit => Type::Unit,
            Value::Pair(a, b) => Type::prod(a.ty(), b.ty()),
        }
    }

    pub fn is_closed(&self) -> bool {
        match self {
            Value::Var(_) => false,
            Value::Pair(a, b) => a.is_closed() && b.is_closed(),
            _ => true,
        }
    }

    pub fn meths(&self, out: &mut BTreeSet<Meth>) {
        match self {
            Value::Meth(m) => {
                out.insert(m.clone());
            }
            Value::Pair(a, b) => {
                a.meths(out);
                b.meths(out);
            }
            _ => {}
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Var(x) => write!(f, "{x}"),
            Value::Meth(m) => write!(f, "{m}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Unit => f.write_str("()"),
            Value::Pair(a, b) => write!(f, "({a}, {b})"),
        }
    }
}

/// The body of a repository entry: `λparam.body`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Lambda {
    pub param: Var,
    pub body: Term,
}

/// Method repository. Insertion order is significant: it fixes method ids.
pub type Repo = IndexMap<Meth, Lambda>;

pub type Store = BTreeMap<Ref, Value>;

/// Remaining depth of nested calls; `None` is the exhausted bound `nil`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Bound(pub Option<u32>);

impl Bound {
    pub const NIL: Bound = Bound(None);

    pub fn k(k: u32) -> Bound {
        Bound(Some(k))
    }

    pub fn is_nil(self) -> bool {
        self.0.is_none()
    }

    /// `k - 1`, with `0 - 1 = nil` and `nil - 1 = nil`.
    pub fn dec(self) -> Bound {
        match self.0 {
            Some(k) if k > 0 => Bound(Some(k - 1)),
            _ => Bound(None),
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(k) => write!(f, "{k}"),
            None => f.write_str("nil"),
        }
    }
}

/// A runtime configuration `(M, R, S, k)`. `inputs` lists Main's
/// parameters, the free variables of `term`, in declaration order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Config {
    pub term: Term,
    pub repo: Repo,
    pub store: Store,
    pub bound: Bound,
    pub inputs: Vec<Var>,
}

impl Config {
    pub fn with_bound(&self, k: u32) -> Config {
        Config { bound: Bound::k(k), ..self.clone() }
    }

    /// Replace the inputs named in `sigma` by their values.
    pub fn close(&self, sigma: &BTreeMap<Var, Value>) -> Config {
        let mut term = self.term.clone();
        for (x, v) in sigma {
            term = term.subst(x, &v.to_term());
        }
        Config {
            term,
            repo: self.repo.clone(),
            store: self.store.clone(),
            bound: self.bound,
            inputs: self.inputs.iter().filter(|x| !sigma.contains_key(*x)).cloned().collect(),
        }
    }

    pub fn input(&self, name: &str) -> Option<&Var> {
        self.inputs.iter().find(|x| &*x.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int_var(n: &str) -> Var {
        Var::new(n, Type::Int)
    }

    #[test]
    fn type_display_parenthesises() {
        let t = Type::arrow(Type::arrow(Type::Int, Type::Int), Type::prod(Type::Int, Type::Unit));
        assert_eq!(t.to_string(), "(Int -> Int) -> Int * Unit");
        let p = Type::prod(Type::prod(Type::Int, Type::Int), Type::Int);
        assert_eq!(p.to_string(), "(Int * Int) * Int");
    }

    #[test]
    fn ground_types() {
        assert!(Type::prod(Type::Int, Type::Unit).is_ground());
        assert!(!Type::prod(Type::Int, Type::arrow(Type::Int, Type::Int)).is_ground());
    }

    #[test]
    fn euclidean_division() {
        assert_eq!(BinOp::Div.apply(-7, 2), Ok(-4));
        assert_eq!(BinOp::Mod.apply(-7, 2), Ok(1));
        assert_eq!(BinOp::Div.apply(7, -2), Ok(-3));
        assert_eq!(BinOp::Mod.apply(7, -2), Ok(1));
        assert_eq!(BinOp::Div.apply(1, 0), Err(ArithError::DivisionByZero));
        assert_eq!(BinOp::Add.apply(i64::MAX, 1), Err(ArithError::Overflow));
    }

    #[test]
    fn subst_turns_var_application_into_method_application() {
        let f = Var::new("f", Type::arrow(Type::Int, Type::Int));
        let m = Meth::new("m", Type::arrow(Type::Int, Type::Int));
        let t = Term::app_var(f.clone(), Term::Int(1));
        assert_eq!(t.subst(&f, &Term::Meth(m.clone())), Term::app_meth(m, Term::Int(1)));
    }

    #[test]
    fn subst_respects_shadowing() {
        let x = int_var("x");
        let t = Term::let_(x.clone(), Term::Var(x.clone()), Term::Var(x.clone()));
        let s = t.subst(&x, &Term::Int(3));
        assert_eq!(s, Term::let_(x.clone(), Term::Int(3), Term::Var(x)));
    }

    #[test]
    fn free_vars_of_letrec() {
        let f = Var::new("f", Type::arrow(Type::Int, Type::Int));
        let x = int_var("x");
        let n = int_var("n");
        let t = Term::letrec(
            f.clone(),
            x.clone(),
            Term::app_var(f.clone(), Term::Var(x)),
            Term::app_var(f, Term::Var(n.clone())),
        );
        assert_eq!(t.free_vars(), [n].into_iter().collect());
    }

    #[test]
    fn bound_decrement() {
        assert_eq!(Bound::k(2).dec(), Bound::k(1));
        assert_eq!(Bound::k(0).dec(), Bound::NIL);
        assert_eq!(Bound::NIL.dec(), Bound::NIL);
    }
}

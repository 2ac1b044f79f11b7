//! Propositional formulas over typed logical variables whose values are
//! either proper values, `fail` or `nil`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Add;
use std::sync::Arc;

use crate::syntax::{BinOp, Side, Type};

pub mod smtlib;

pub use smtlib::{emit_smtlib, emit_smtlib_queries, sort_name, Emitter};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct LogVar {
    pub name: Arc<str>,
    pub sort: Type,
}

impl LogVar {
    pub fn new(name: impl Into<Arc<str>>, sort: Type) -> Self {
        LogVar { name: name.into(), sort }
    }

    pub fn e(&self) -> Expr {
        Expr::Var(self.clone())
    }
}

impl fmt::Display for LogVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Expr {
    Var(LogVar),
    Int(i64),
    Unit,
    Fail(Type),
    Nil(Type),
    /// Method constant: global id and arrow sort.
    Meth(u32, Type),
    Pair(Box<Expr>, Box<Expr>),
    Proj(Side, Box<Expr>),
    Arith(BinOp, Box<Expr>, Box<Expr>),
    Ite(Box<Formula>, Box<Expr>, Box<Expr>),
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Formula {
    True,
    Eq(Expr, Expr),
    NotEq(Expr, Expr),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
    /// Comparison of integer payloads; `op` is one of the comparison operators.
    IntCmp(BinOp, Expr, Expr),
}

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum FormulaError {
    #[error("sort mismatch: {0}")]
    SortMismatch(String),
    #[error("undeclared variable `{0}`")]
    UndeclaredVariable(String),
    #[error("variable `{0}` declared with two sorts")]
    ConflictingDeclaration(String),
    #[error("`{0}` clashes with a symbol of the SMT encoding")]
    ReservedName(String),
}

impl Expr {
    pub fn pair(a: Expr, b: Expr) -> Expr {
        Expr::Pair(Box::new(a), Box::new(b))
    }

    pub fn proj(s: Side, e: Expr) -> Expr {
        Expr::Proj(s, Box::new(e))
    }

    pub fn arith(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Arith(op, Box::new(a), Box::new(b))
    }

    pub fn ite(c: Formula, a: Expr, b: Expr) -> Expr {
        Expr::Ite(Box::new(c), Box::new(a), Box::new(b))
    }

    pub fn sort(&self) -> Result<Type, FormulaError> {
        match self {
            Expr::Var(v) => Ok(v.sort.clone()),
            Expr::Int(_) => Ok(Type::Int),
            Expr::Unit => Ok(Type::Unit),
            Expr::Fail(t) | Expr::Nil(t) => Ok(t.clone()),
            Expr::Meth(_, t) => {
                if t.as_arrow().is_some() {
                    Ok(t.clone())
                } else {
                    Err(FormulaError::SortMismatch(format!("method constant of sort {t}")))
                }
            }
            Expr::Pair(a, b) => Ok(Type::prod(a.sort()?, b.sort()?)),
            Expr::Proj(s, e) => match e.sort()? {
                Type::Prod(a, b) => Ok(if *s == Side::First { (*a).clone() } else { (*b).clone() }),
                t => Err(FormulaError::SortMismatch(format!("projection from {t}"))),
            },
            Expr::Arith(_, a, b) => {
                for x in [a, b] {
                    let t = x.sort()?;
                    if t != Type::Int {
                        return Err(FormulaError::SortMismatch(format!("arithmetic on {t}")));
                    }
                }
                Ok(Type::Int)
            }
            Expr::Ite(c, a, b) => {
                c.check_sorts()?;
                let (ta, tb) = (a.sort()?, b.sort()?);
                if ta != tb {
                    return Err(FormulaError::SortMismatch(format!("ite branches {ta} and {tb}")));
                }
                Ok(ta)
            }
        }
    }

    fn vars(&self, out: &mut Vec<LogVar>) {
        match self {
            Expr::Var(v) => out.push(v.clone()),
            Expr::Int(_) | Expr::Unit | Expr::Fail(_) | Expr::Nil(_) | Expr::Meth(..) => {}
            Expr::Pair(a, b) | Expr::Arith(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Expr::Proj(_, e) => e.vars(out),
            Expr::Ite(c, a, b) => {
                c.vars(out);
                a.vars(out);
                b.vars(out);
            }
        }
    }
}

fn same_sort(a: &Expr, b: &Expr) -> Result<(), FormulaError> {
    let (ta, tb) = (a.sort()?, b.sort()?);
    if ta == tb {
        Ok(())
    } else {
        Err(FormulaError::SortMismatch(format!("{ta} vs {tb}")))
    }
}

impl Formula {
    pub fn eq(a: Expr, b: Expr) -> Formula {
        Formula::Eq(a, b)
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    /// Conjunction that drops `True` and flattens nested conjunctions.
    pub fn and(fs: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for f in fs {
            match f {
                Formula::True => {}
                Formula::And(inner) => out.extend(inner),
                f => out.push(f),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    /// `v` is a proper value: neither fail nor nil.
    pub fn is_value(v: &LogVar) -> Formula {
        Formula::and([Formula::NotEq(v.e(), Expr::Fail(v.sort.clone())), Formula::NotEq(v.e(), Expr::Nil(v.sort.clone()))])
    }

    pub fn check_sorts(&self) -> Result<(), FormulaError> {
        match self {
            Formula::True => Ok(()),
            Formula::Eq(a, b) | Formula::NotEq(a, b) => same_sort(a, b),
            Formula::IntCmp(_, a, b) => {
                same_sort(a, b)?;
                if a.sort()? != Type::Int {
                    return Err(FormulaError::SortMismatch("integer comparison on non-int".into()));
                }
                Ok(())
            }
            Formula::And(fs) | Formula::Or(fs) => fs.iter().try_for_each(Formula::check_sorts),
            Formula::Implies(a, b) => {
                a.check_sorts()?;
                b.check_sorts()
            }
            Formula::Not(a) => a.check_sorts(),
        }
    }

    pub fn vars(&self, out: &mut Vec<LogVar>) {
        match self {
            Formula::True => {}
            Formula::Eq(a, b) | Formula::NotEq(a, b) | Formula::IntCmp(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.vars(out)),
            Formula::Implies(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Formula::Not(a) => a.vars(out),
        }
    }

    /// Number of leaf atoms; a rough size measure.
    pub fn atoms(&self) -> usize {
        match self {
            Formula::True => 0,
            Formula::Eq(..) | Formula::NotEq(..) | Formula::IntCmp(..) => 1,
            Formula::And(fs) | Formula::Or(fs) => fs.iter().map(Formula::atoms).sum(),
            Formula::Implies(a, b) => a.atoms() + b.atoms(),
            Formula::Not(a) => a.atoms(),
        }
    }
}

/// Over-approximation of which aborts a term can produce.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub enum Q {
    #[default]
    Zero,
    Nil,
    Fail,
    Both,
}

impl Add for Q {
    type Output = Q;
    fn add(self, o: Q) -> Q {
        match (self, o) {
            (Q::Zero, q) | (q, Q::Zero) => q,
            (a, b) if a == b => a,
            _ => Q::Both,
        }
    }
}

impl Q {
    pub fn may_fail(self) -> bool {
        matches!(self, Q::Fail | Q::Both)
    }

    pub fn may_nil(self) -> bool {
        matches!(self, Q::Nil | Q::Both)
    }

    /// Order of the four-point lattice: `Zero` below `Nil` and `Fail`, both below `Both`.
    pub fn le(self, o: Q) -> bool {
        self + o == o
    }
}

/// `F a b φ = (a=fail ⇒ b=fail) ∧ (a=nil ⇒ b=nil) ∧ (a=fail ∨ a=nil ∨ φ)`.
///
/// `a` and `b` may have different sorts; each side uses its own tags.
pub fn guard_f(a: &LogVar, b: &LogVar, phi: Formula) -> Formula {
    let af = Formula::eq(a.e(), Expr::Fail(a.sort.clone()));
    let an = Formula::eq(a.e(), Expr::Nil(a.sort.clone()));
    Formula::And(vec![
        Formula::implies(af.clone(), Formula::eq(b.e(), Expr::Fail(b.sort.clone()))),
        Formula::implies(an.clone(), Formula::eq(b.e(), Expr::Nil(b.sort.clone()))),
        Formula::Or(vec![af, an, phi]),
    ])
}

/// [`guard_f`] keeping only the propagation clauses that `q` warrants.
pub fn prune_f(a: &LogVar, b: &LogVar, phi: Formula, q: Q) -> Formula {
    let one = |tag: fn(Type) -> Expr| {
        let at = Formula::eq(a.e(), tag(a.sort.clone()));
        Formula::And(vec![
            Formula::implies(at.clone(), Formula::eq(b.e(), tag(b.sort.clone()))),
            Formula::Or(vec![at, phi.clone()]),
        ])
    };
    match q {
        Q::Zero => phi,
        Q::Fail => one(Expr::Fail),
        Q::Nil => one(Expr::Nil),
        Q::Both => guard_f(a, b, phi),
    }
}

/// Declarations keyed by name, rejecting one name at two sorts.
pub fn declarations<'a>(vars: impl IntoIterator<Item = &'a LogVar>) -> Result<BTreeMap<Arc<str>, Type>, FormulaError> {
    let mut out = BTreeMap::new();
    for v in vars {
        if let Some(t) = out.insert(v.name.clone(), v.sort.clone()) {
            if t != v.sort {
                return Err(FormulaError::ConflictingDeclaration(v.name.to_string()));
            }
        }
    }
    Ok(out)
}

//! SMT-LIB 2 text for formulas.
//!
//! Every source type `θ` becomes a datatype `V_θ` with a payload
//! constructor and the two tags `Fail_θ` and `Nil_θ`:
//!
//! | type      | sort              | payload constructor                       |
//! |-----------|-------------------|-------------------------------------------|
//! | `Unit`    | `V_unit`          | `Unit`                                    |
//! | `Int`     | `V_int`           | `(Int (val_int Int))`                     |
//! | `a * b`   | `V_prod_a_b`      | `(Pair_prod_a_b (fst_.. V_a) (snd_.. V_b))` |
//! | `a -> b`  | `V_fun_a_b`       | `(Meth_fun_a_b (id_fun_a_b Int))`         |
//!
//! Method names are encoded by their integer id.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use super::{declarations, Expr, Formula, FormulaError, LogVar};
use crate::syntax::{BinOp, Meth, Side, Type};

pub fn mangle(t: &Type) -> String {
    match t {
        Type::Unit => "unit".into(),
        Type::Int => "int".into(),
        Type::Prod(a, b) => format!("prod_{}_{}", mangle(a), mangle(b)),
        Type::Arrow(a, b) => format!("fun_{}_{}", mangle(a), mangle(b)),
    }
}

pub fn sort_name(t: &Type) -> String {
    format!("V_{}", mangle(t))
}

fn fail_ctor(t: &Type) -> String {
    format!("Fail_{}", mangle(t))
}

fn nil_ctor(t: &Type) -> String {
    format!("Nil_{}", mangle(t))
}

const BUILTINS: &[&str] = &[
    "Int", "Unit", "Bool", "Real", "Array", "true", "false", "not", "and", "or", "xor", "ite", "distinct",
    "div", "mod", "abs", "let", "forall", "exists", "match", "as", "par", "_", "!", "=>", "=", "<", "<=", ">",
    ">=", "+", "-", "*", "val_int",
];

const PREFIXES: &[&str] = &["V_", "Fail_", "Nil_", "Pair_", "Meth_", "fst_", "snd_", "id_"];

/// True when `name` would collide with a symbol of the encoding.
pub fn is_reserved_symbol(name: &str) -> bool {
    BUILTINS.contains(&name) || PREFIXES.iter().any(|p| name.starts_with(p))
}

fn is_simple_symbol(s: &str) -> bool {
    let ok = |c: char| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c);
    !s.is_empty() && !s.starts_with(|c: char| c.is_ascii_digit()) && s.chars().all(ok)
}

pub fn symbol(s: &str) -> String {
    if is_simple_symbol(s) {
        s.to_string()
    } else {
        format!("|{s}|")
    }
}

fn int_lit(i: i64) -> String {
    if i < 0 {
        format!("(- {})", i.unsigned_abs())
    } else {
        i.to_string()
    }
}

/// Collects sorts and renders expressions.
#[derive(Default)]
pub struct Emitter {
    sorts: BTreeSet<Type>,
}

fn depth(t: &Type) -> usize {
    match t {
        Type::Prod(a, b) => 1 + depth(a).max(depth(b)),
        _ => 0,
    }
}

impl Emitter {
    pub fn new() -> Self {
        Emitter::default()
    }

    pub fn need(&mut self, t: &Type) {
        if self.sorts.insert(t.clone()) {
            if let Type::Prod(a, b) = t {
                self.need(a);
                self.need(b);
            }
        }
    }

    fn need_expr(&mut self, e: &Expr) {
        match e {
            Expr::Var(v) => self.need(&v.sort),
            Expr::Int(_) | Expr::Arith(..) => self.need(&Type::Int),
            Expr::Unit => self.need(&Type::Unit),
            Expr::Fail(t) | Expr::Nil(t) | Expr::Meth(_, t) => self.need(t),
            Expr::Pair(a, b) => {
                self.need_expr(a);
                self.need_expr(b);
                if let Ok(t) = e.sort() {
                    self.need(&t);
                }
            }
            Expr::Proj(_, a) => self.need_expr(a),
            Expr::Ite(c, a, b) => {
                self.need_formula(c);
                self.need_expr(a);
                self.need_expr(b);
            }
        }
        if let Expr::Arith(_, a, b) = e {
            self.need_expr(a);
            self.need_expr(b);
        }
    }

    pub fn need_formula(&mut self, f: &Formula) {
        match f {
            Formula::True => {}
            Formula::Eq(a, b) | Formula::NotEq(a, b) | Formula::IntCmp(_, a, b) => {
                self.need_expr(a);
                self.need_expr(b);
            }
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| self.need_formula(f)),
            Formula::Implies(a, b) => {
                self.need_formula(a);
                self.need_formula(b);
            }
            Formula::Not(a) => self.need_formula(a),
        }
    }

    /// One `declare-datatypes` per sort, components before products.
    pub fn datatypes(&self) -> String {
        let mut sorts: Vec<&Type> = self.sorts.iter().collect();
        sorts.sort_by_key(|t| (depth(t), mangle(t)));
        let mut out = String::new();
        for t in sorts {
            let m = mangle(t);
            let payload = match t {
                Type::Unit => "Unit".to_string(),
                Type::Int => "(Int (val_int Int))".to_string(),
                Type::Prod(a, b) => {
                    format!("(Pair_{m} (fst_{m} {}) (snd_{m} {}))", sort_name(a), sort_name(b))
                }
                Type::Arrow(..) => format!("(Meth_{m} (id_{m} Int))"),
            };
            let _ = writeln!(out, "(declare-datatypes ((V_{m} 0)) (({payload} Fail_{m} Nil_{m})))");
        }
        out
    }

    /// Integer payload of an int-sorted expression.
    fn payload(e: &Expr, out: &mut String) {
        match e {
            Expr::Int(i) => out.push_str(&int_lit(*i)),
            Expr::Arith(op, a, b) => Self::arith(*op, a, b, out),
            _ => {
                out.push_str("(val_int ");
                Self::expr(e, out);
                out.push(')');
            }
        }
    }

    fn arith(op: BinOp, a: &Expr, b: &Expr, out: &mut String) {
        let bin = |name: &str, out: &mut String| {
            let _ = write!(out, "({name} ");
            Self::payload(a, out);
            out.push(' ');
            Self::payload(b, out);
            out.push(')');
        };
        let test = |name: &str, out: &mut String| {
            out.push_str("(ite ");
            bin(name, out);
            out.push_str(" 1 0)");
        };
        match op {
            BinOp::Add => bin("+", out),
            BinOp::Sub => bin("-", out),
            BinOp::Mul => bin("*", out),
            BinOp::Div => bin("div", out),
            BinOp::Mod => bin("mod", out),
            BinOp::Eq => test("=", out),
            BinOp::Ne => test("distinct", out),
            BinOp::Lt => test("<", out),
            BinOp::Le => test("<=", out),
            BinOp::Gt => test(">", out),
            BinOp::Ge => test(">=", out),
            BinOp::And | BinOp::Or => {
                let _ = write!(out, "(ite ({} (distinct ", if op == BinOp::And { "and" } else { "or" });
                Self::payload(a, out);
                out.push_str(" 0) (distinct ");
                Self::payload(b, out);
                out.push_str(" 0)) 1 0)");
            }
        }
    }

    pub fn expr(e: &Expr, out: &mut String) {
        match e {
            Expr::Var(v) => out.push_str(&symbol(&v.name)),
            Expr::Int(i) => {
                let _ = write!(out, "(Int {})", int_lit(*i));
            }
            Expr::Unit => out.push_str("Unit"),
            Expr::Fail(t) => out.push_str(&fail_ctor(t)),
            Expr::Nil(t) => out.push_str(&nil_ctor(t)),
            Expr::Meth(id, t) => {
                let _ = write!(out, "(Meth_{} {id})", mangle(t));
            }
            Expr::Pair(a, b) => {
                let t = e.sort().unwrap_or(Type::Unit);
                let _ = write!(out, "(Pair_{} ", mangle(&t));
                Self::expr(a, out);
                out.push(' ');
                Self::expr(b, out);
                out.push(')');
            }
            Expr::Proj(s, a) => {
                let t = a.sort().unwrap_or(Type::Unit);
                let sel = if *s == Side::First { "fst" } else { "snd" };
                let _ = write!(out, "({sel}_{} ", mangle(&t));
                Self::expr(a, out);
                out.push(')');
            }
            Expr::Arith(op, a, b) => {
                out.push_str("(Int ");
                Self::arith(*op, a, b, out);
                out.push(')');
            }
            Expr::Ite(c, a, b) => {
                out.push_str("(ite ");
                Self::formula(c, out);
                out.push(' ');
                Self::expr(a, out);
                out.push(' ');
                Self::expr(b, out);
                out.push(')');
            }
        }
    }

    pub fn formula(f: &Formula, out: &mut String) {
        let nary = |name: &str, fs: &[Formula], out: &mut String| {
            let _ = write!(out, "({name}");
            for f in fs {
                out.push(' ');
                Self::formula(f, out);
            }
            out.push(')');
        };
        match f {
            Formula::True => out.push_str("true"),
            Formula::Eq(a, b) | Formula::NotEq(a, b) => {
                out.push_str(if matches!(f, Formula::Eq(..)) { "(= " } else { "(distinct " });
                Self::expr(a, out);
                out.push(' ');
                Self::expr(b, out);
                out.push(')');
            }
            Formula::IntCmp(op, a, b) => {
                let name = match op {
                    BinOp::Eq => "=",
                    BinOp::Ne => "distinct",
                    BinOp::Lt => "<",
                    BinOp::Le => "<=",
                    BinOp::Gt => ">",
                    BinOp::Ge => ">=",
                    _ => "=",
                };
                let _ = write!(out, "({name} ");
                Self::payload(a, out);
                out.push(' ');
                Self::payload(b, out);
                out.push(')');
            }
            Formula::And(fs) if fs.is_empty() => out.push_str("true"),
            Formula::Or(fs) if fs.is_empty() => out.push_str("false"),
            Formula::And(fs) => nary("and", fs, out),
            Formula::Or(fs) => nary("or", fs, out),
            Formula::Implies(a, b) => {
                out.push_str("(=> ");
                Self::formula(a, out);
                out.push(' ');
                Self::formula(b, out);
                out.push(')');
            }
            Formula::Not(a) => {
                out.push_str("(not ");
                Self::formula(a, out);
                out.push(')');
            }
        }
    }
}

/// Everything up to and including the assertion of `phi`.
fn prelude(
    decls: &[LogVar],
    methods: &[(u32, Meth)],
    phi: &[Formula],
    extra: &[&Formula],
) -> Result<String, FormulaError> {
    let declared = declarations(decls)?;
    for name in declared.keys() {
        if is_reserved_symbol(name) {
            return Err(FormulaError::ReservedName(name.to_string()));
        }
    }
    let mut used = Vec::new();
    for f in phi.iter().chain(extra.iter().copied()) {
        f.check_sorts()?;
        f.vars(&mut used);
    }
    for v in &used {
        match declared.get(&v.name) {
            None => return Err(FormulaError::UndeclaredVariable(v.name.to_string())),
            Some(t) if *t != v.sort => {
                return Err(FormulaError::SortMismatch(format!("`{}` used at {} but declared {t}", v.name, v.sort)))
            }
            _ => {}
        }
    }

    let mut em = Emitter::new();
    for v in decls {
        em.need(&v.sort);
    }
    for (_, m) in methods {
        em.need(&m.ty);
    }
    for f in phi.iter().chain(extra.iter().copied()) {
        em.need_formula(f);
    }

    let mut out = String::from("(set-logic ALL)\n");
    out.push_str(&em.datatypes());
    if !methods.is_empty() {
        out.push_str("; method ids\n");
        for (id, m) in methods {
            let _ = writeln!(out, ";   {id} = {} : {}", m.name, m.ty);
        }
    }
    let mut seen = BTreeMap::new();
    for v in decls {
        if seen.insert(v.name.clone(), ()).is_none() {
            let _ = writeln!(out, "(declare-const {} {})", symbol(&v.name), sort_name(&v.sort));
        }
    }
    Ok(out)
}

fn assert_all(fs: &[&Formula], out: &mut String) {
    let live: Vec<&&Formula> = fs.iter().filter(|f| ***f != Formula::True).collect();
    match live.len() {
        0 => out.push_str("(assert true)\n"),
        1 => {
            out.push_str("(assert ");
            Emitter::formula(live[0], out);
            out.push_str(")\n");
        }
        _ => {
            out.push_str("(assert (and");
            for f in live {
                out.push_str("\n  ");
                Emitter::formula(f, out);
            }
            out.push_str("))\n");
        }
    }
}

/// A complete script: one assertion for `phi ∧ query`, then
/// `(check-sat)` and `(get-model)`.
pub fn emit_smtlib(
    decls: &[LogVar],
    methods: &[(u32, Meth)],
    phi: &[Formula],
    query: &Formula,
) -> Result<String, FormulaError> {
    let mut out = prelude(decls, methods, phi, &[query])?;
    let all: Vec<&Formula> = phi.iter().chain(std::iter::once(query)).collect();
    assert_all(&all, &mut out);
    out.push_str("(check-sat)\n(get-model)\n");
    Ok(out)
}

/// One script asserting `phi` once and checking each query in its own
/// push/pop scope. Used by test harnesses to amortise solver start-up.
pub fn emit_smtlib_queries(
    decls: &[LogVar],
    methods: &[(u32, Meth)],
    phi: &[Formula],
    queries: &[Formula],
) -> Result<String, FormulaError> {
    let extra: Vec<&Formula> = queries.iter().collect();
    let mut out = prelude(decls, methods, phi, &extra)?;
    let all: Vec<&Formula> = phi.iter().collect();
    assert_all(&all, &mut out);
    for q in queries {
        out.push_str("(push 1)\n");
        assert_all(&[q], &mut out);
        out.push_str("(check-sat)\n(get-model)\n(pop 1)\n");
    }
    Ok(out)
}

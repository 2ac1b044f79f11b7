//! Surface constructs and their translation into the core calculus.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::{typecheck, BinOp, Meth, Ref, Side, Term, Type, Var};

/// Terms with resolved, typed names plus sugar.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Sugared {
    /// `fail`, optionally ascribed; unascribed fail takes its type from context.
    Fail(Option<Type>),
    Var(Var),
    Meth(Meth),
    Int(i64),
    Unit,
    Assign(Ref, Box<Sugared>),
    Deref(Ref),
    BinOp(BinOp, Box<Sugared>, Box<Sugared>),
    Pair(Box<Sugared>, Box<Sugared>),
    /// Projection with an optional annotation giving the result type.
    Proj(Side, Option<Type>, Box<Sugared>),
    /// Application of any head to one or more arguments.
    App(Box<Sugared>, Vec<Sugared>),
    If(Box<Sugared>, Box<Sugared>, Box<Sugared>),
    Let(Var, Box<Sugared>, Box<Sugared>),
    /// `letrec f = λ(x1..xn).body in cont`
    Letrec(Var, Vec<Var>, Box<Sugared>, Box<Sugared>),
    Lambda(Vec<Var>, Box<Sugared>),
    Seq(Box<Sugared>, Box<Sugared>),
    Incr(Ref),
    Assert(Box<Sugared>),
    Ascribe(Box<Sugared>, Type),
}

impl Sugared {
    fn visit_vars(&self, out: &mut BTreeSet<Arc<str>>) {
        match self {
            Sugared::Var(x) => {
                out.insert(x.name.clone());
            }
            Sugared::Fail(_)
            | Sugared::Meth(_)
            | Sugared::Int(_)
            | Sugared::Unit
            | Sugared::Deref(_)
            | Sugared::Incr(_) => {}
            Sugared::Assign(_, m)
            | Sugared::Proj(_, _, m)
            | Sugared::Assert(m)
            | Sugared::Ascribe(m, _) => m.visit_vars(out),
            Sugared::BinOp(_, a, b) | Sugared::Pair(a, b) | Sugared::Seq(a, b) => {
                a.visit_vars(out);
                b.visit_vars(out);
            }
            Sugared::App(h, args) => {
                h.visit_vars(out);
                args.iter().for_each(|a| a.visit_vars(out));
            }
            Sugared::If(c, t, e) => {
                c.visit_vars(out);
                t.visit_vars(out);
                e.visit_vars(out);
            }
            Sugared::Let(x, m, n) => {
                out.insert(x.name.clone());
                m.visit_vars(out);
                n.visit_vars(out);
            }
            Sugared::Letrec(f, xs, b, c) => {
                out.insert(f.name.clone());
                xs.iter().for_each(|x| {
                    out.insert(x.name.clone());
                });
                b.visit_vars(out);
                c.visit_vars(out);
            }
            Sugared::Lambda(xs, b) => {
                xs.iter().for_each(|x| {
                    out.insert(x.name.clone());
                });
                b.visit_vars(out);
            }
        }
    }

    fn is_bare_fail(&self) -> bool {
        matches!(self, Sugared::Fail(None))
    }
}

/// Supplies binder names for introduced lets that avoid a given set.
pub struct FreshVars {
    used: BTreeSet<Arc<str>>,
    next: usize,
}

impl FreshVars {
    pub fn avoiding(used: BTreeSet<Arc<str>>) -> Self {
        FreshVars { used, next: 0 }
    }

    pub fn fresh(&mut self, stem: &str, ty: Type) -> Var {
        loop {
            self.next += 1;
            let name: Arc<str> = format!("{stem}'{}", self.next).into();
            if self.used.insert(name.clone()) {
                return Var::new(name, ty);
            }
        }
    }
}

/// Removes all sugar. Fresh binders avoid every variable name in `s`.
pub fn desugar(s: &Sugared) -> Term {
    let mut used = BTreeSet::new();
    s.visit_vars(&mut used);
    desugar_with(s, None, &mut FreshVars::avoiding(used))
}

/// Like [`desugar`], with an expected type and a shared fresh-name supply.
pub fn desugar_with(s: &Sugared, expected: Option<&Type>, fresh: &mut FreshVars) -> Term {
    Desugar { fresh }.go(s, expected)
}

struct Desugar<'a> {
    fresh: &'a mut FreshVars,
}

fn type_or_unit(t: &Term) -> Type {
    typecheck(t).unwrap_or(Type::Unit)
}

impl Desugar<'_> {
    fn go(&mut self, s: &Sugared, expected: Option<&Type>) -> Term {
        match s {
            Sugared::Fail(ann) => Term::Fail(ann.clone().or_else(|| expected.cloned()).unwrap_or(Type::Unit)),
            Sugared::Var(x) => Term::Var(x.clone()),
            Sugared::Meth(m) => Term::Meth(m.clone()),
            Sugared::Int(i) => Term::Int(*i),
            Sugared::Unit => Term::Unit,
            Sugared::Assign(r, m) => Term::assign(r.clone(), self.go(m, Some(&r.ty))),
            Sugared::Deref(r) => Term::Deref(r.clone()),
            Sugared::BinOp(op, a, b) => {
                Term::binop(*op, self.go(a, Some(&Type::Int)), self.go(b, Some(&Type::Int)))
            }
            Sugared::Pair(a, b) => {
                let (ea, eb) = match expected.and_then(Type::as_prod) {
                    Some((x, y)) => (Some(x.clone()), Some(y.clone())),
                    None => (None, None),
                };
                Term::pair(self.go(a, ea.as_ref()), self.go(b, eb.as_ref()))
            }
            Sugared::Proj(side, ann, m) => {
                let want = ann.as_ref().or(expected);
                let arg = self.go(m, None);
                let arg = match (typecheck(&arg).ok().as_ref().and_then(Type::as_prod), want) {
                    (Some(_), _) | (None, None) => arg,
                    (None, Some(w)) => {
                        let hint = match side {
                            Side::First => Type::prod(w.clone(), Type::Unit),
                            Side::Second => Type::prod(Type::Unit, w.clone()),
                        };
                        self.go(m, Some(&hint))
                    }
                };
                Term::proj(*side, arg)
            }
            Sugared::App(head, args) => self.app(head, args),
            Sugared::If(c, t, e) => {
                let c = self.go(c, Some(&Type::Int));
                match expected {
                    Some(ty) => Term::ite(c, self.go(t, Some(ty)), self.go(e, Some(ty))),
                    None if t.is_bare_fail() => {
                        let e = self.go(e, None);
                        let ty = type_or_unit(&e);
                        Term::ite(c, self.go(t, Some(&ty)), e)
                    }
                    None => {
                        let t = self.go(t, None);
                        let ty = type_or_unit(&t);
                        Term::ite(c, t, self.go(e, Some(&ty)))
                    }
                }
            }
            Sugared::Let(x, m, n) => {
                Term::let_(x.clone(), self.go(m, Some(&x.ty)), self.go(n, expected))
            }
            Sugared::Letrec(f, params, body, cont) => {
                let (first, rest) = params.split_first().expect("letrec needs a parameter");
                let mut ret = f.ty.clone();
                for _ in params {
                    ret = ret.as_arrow().map(|(_, b)| b.clone()).unwrap_or(Type::Unit);
                }
                let body = self.go(body, Some(&ret));
                let body = rest.iter().rev().fold(body, |acc, x| Term::lambda(x.clone(), acc));
                Term::letrec(f.clone(), first.clone(), body, self.go(cont, expected))
            }
            Sugared::Lambda(params, body) => {
                let mut ret = expected.cloned();
                for _ in params {
                    ret = ret.and_then(|t| t.as_arrow().map(|(_, b)| b.clone()));
                }
                let body = self.go(body, ret.as_ref());
                params.iter().rev().fold(body, |acc, x| Term::lambda(x.clone(), acc))
            }
            Sugared::Seq(a, b) => {
                let a = self.go(a, None);
                let x = self.fresh.fresh("_", type_or_unit(&a));
                Term::let_(x, a, self.go(b, expected))
            }
            Sugared::Incr(r) => Term::assign(
                r.clone(),
                Term::binop(BinOp::Add, Term::Deref(r.clone()), Term::Int(1)),
            ),
            Sugared::Assert(m) => {
                Term::ite(self.go(m, Some(&Type::Int)), Term::Unit, Term::Fail(Type::Unit))
            }
            Sugared::Ascribe(m, ty) => self.go(m, Some(ty)),
        }
    }

    fn app(&mut self, head: &Sugared, args: &[Sugared]) -> Term {
        enum Head {
            Var(Var),
            Meth(Meth),
        }
        let mut wrap: Vec<(Var, Term)> = Vec::new();
        let mut cur = match head {
            Sugared::Var(x) => Head::Var(x.clone()),
            Sugared::Meth(m) => Head::Meth(m.clone()),
            Sugared::Ascribe(inner, _) if matches!(**inner, Sugared::Var(_) | Sugared::Meth(_)) => {
                return self.app(inner, args);
            }
            other => {
                let t = self.go(other, None);
                let x = self.fresh.fresh("fn", type_or_unit(&t));
                wrap.push((x.clone(), t));
                Head::Var(x)
            }
        };
        let mut result = None;
        for (i, arg) in args.iter().enumerate() {
            let fty = match &cur {
                Head::Var(x) => x.ty.clone(),
                Head::Meth(m) => m.ty.clone(),
            };
            let (dom, cod) = match fty.as_arrow() {
                Some((a, b)) => (Some(a.clone()), b.clone()),
                None => (None, Type::Unit),
            };
            let a = self.go(arg, dom.as_ref());
            let app = match &cur {
                Head::Var(x) => Term::app_var(x.clone(), a),
                Head::Meth(m) => Term::app_meth(m.clone(), a),
            };
            if i + 1 < args.len() {
                let t = self.fresh.fresh("app", cod);
                wrap.push((t.clone(), app));
                cur = Head::Var(t);
            } else {
                result = Some(app);
            }
        }
        let body = match result {
            Some(t) => t,
            None => match cur {
                Head::Var(x) => Term::Var(x),
                Head::Meth(m) => Term::Meth(m),
            },
        };
        wrap.into_iter().rev().fold(body, |acc, (x, m)| Term::let_(x, m, acc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ii() -> Type {
        Type::arrow(Type::Int, Type::Int)
    }

    #[test]
    fn assert_becomes_if() {
        let x = Var::new("x", Type::Int);
        let s = Sugared::Assert(Box::new(Sugared::Var(x.clone())));
        assert_eq!(desugar(&s), Term::ite(Term::Var(x), Term::Unit, Term::Fail(Type::Unit)));
    }

    #[test]
    fn increment_becomes_assignment() {
        let r = Ref::new("r", Type::Int);
        assert_eq!(
            desugar(&Sugared::Incr(r.clone())),
            Term::assign(r.clone(), Term::binop(BinOp::Add, Term::Deref(r), Term::Int(1)))
        );
    }

    #[test]
    fn binary_application_becomes_let_chain() {
        let f = Var::new("f", Type::arrow(Type::Int, ii()));
        let a = Var::new("a", Type::Int);
        let b = Var::new("b", Type::Int);
        let s = Sugared::App(
            Box::new(Sugared::Var(f.clone())),
            vec![Sugared::Var(a.clone()), Sugared::Var(b.clone())],
        );
        let t = desugar(&s);
        match t {
            Term::Let(tv, m, n) => {
                assert_eq!(tv.ty, ii());
                assert_eq!(*m, Term::app_var(f, Term::Var(a)));
                assert_eq!(*n, Term::app_var(tv, Term::Var(b)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sequencing_binds_fresh_variable() {
        let r = Ref::new("r", Type::Int);
        let s = Sugared::Seq(Box::new(Sugared::Incr(r.clone())), Box::new(Sugared::Deref(r.clone())));
        match desugar(&s) {
            Term::Let(x, _, n) => {
                assert_eq!(x.ty, Type::Unit);
                assert_eq!(*n, Term::Deref(r));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn vector_lambda_is_curried() {
        let x = Var::new("x", Type::Int);
        let y = Var::new("y", Type::Int);
        let s = Sugared::Lambda(
            vec![x.clone(), y.clone()],
            Box::new(Sugared::BinOp(BinOp::Add, Box::new(Sugared::Var(x.clone())), Box::new(Sugared::Var(y.clone())))),
        );
        let t = desugar(&s);
        assert_eq!(typecheck(&t), Ok(Type::arrow(Type::Int, ii())));
    }

    #[test]
    fn fail_takes_type_from_context() {
        let s = Sugared::If(
            Box::new(Sugared::Int(1)),
            Box::new(Sugared::Fail(None)),
            Box::new(Sugared::Int(4)),
        );
        assert_eq!(desugar(&s), Term::ite(Term::Int(1), Term::Fail(Type::Int), Term::Int(4)));
    }

    #[test]
    fn non_name_head_is_let_bound() {
        let x = Var::new("x", Type::Int);
        let lam = Sugared::Lambda(vec![x.clone()], Box::new(Sugared::Var(x)));
        let s = Sugared::App(Box::new(lam), vec![Sugared::Int(3)]);
        let t = desugar(&s);
        assert_eq!(typecheck(&t), Ok(Type::Int));
        assert!(matches!(t, Term::Let(_, _, ref n) if matches!(**n, Term::AppVar(..))));
    }

    #[test]
    fn fresh_names_avoid_existing() {
        let clash = Var::new("_'1", Type::Int);
        let s = Sugared::Seq(Box::new(Sugared::Unit), Box::new(Sugared::Var(clash.clone())));
        match desugar(&s) {
            Term::Let(x, _, _) => assert_ne!(x.name, clash.name),
            other => panic!("unexpected {other:?}"),
        }
    }
}

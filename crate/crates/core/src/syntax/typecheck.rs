use super::{Term, Type};

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum TypeError {
    #[error("in `{term}`: expected {expected}, found {found}")]
    Mismatch { term: String, expected: String, found: Type },
    #[error("method `{name}` has non-arrow type {ty}")]
    MethodNotArrow { name: String, ty: Type },
}

fn snippet(t: &Term) -> String {
    let s = t.to_string();
    if s.chars().count() > 72 {
        let cut: String = s.chars().take(69).collect();
        format!("{cut}...")
    } else {
        s
    }
}

fn expect(term: &Term, expected: &Type, found: Type) -> Result<(), TypeError> {
    if *expected == found {
        Ok(())
    } else {
        Err(TypeError::Mismatch { term: snippet(term), expected: expected.to_string(), found })
    }
}

fn mismatch(term: &Term, expected: &str, found: Type) -> TypeError {
    TypeError::Mismatch { term: snippet(term), expected: expected.to_string(), found }
}

/// Synthesises the unique type of `term`. Names carry their types, so no
/// context is needed.
pub fn typecheck(term: &Term) -> Result<Type, TypeError> {
    match term {
        Term::Fail(t) => Ok(t.clone()),
        Term::Var(x) => Ok(x.ty.clone()),
        Term::Meth(m) => {
            if m.ty.as_arrow().is_none() {
                return Err(TypeError::MethodNotArrow { name: m.name.to_string(), ty: m.ty.clone() });
            }
            Ok(m.ty.clone())
        }
        Term::Int(_) => Ok(Type::Int),
        Term::Unit => Ok(Type::Unit),
        Term::Assign(r, m) => {
            expect(m, &r.ty, typecheck(m)?)?;
            Ok(Type::Unit)
        }
        Term::Deref(r) => Ok(r.ty.clone()),
        Term::BinOp(_, a, b) => {
            expect(a, &Type::Int, typecheck(a)?)?;
            expect(b, &Type::Int, typecheck(b)?)?;
            Ok(Type::Int)
        }
        Term::Pair(a, b) => Ok(Type::prod(typecheck(a)?, typecheck(b)?)),
        Term::Proj(side, m) => {
            let t = typecheck(m)?;
            match t.as_prod() {
                Some((a, b)) => Ok(match side {
                    super::Side::First => a.clone(),
                    super::Side::Second => b.clone(),
                }),
                None => Err(mismatch(m, "a product type", t)),
            }
        }
        Term::AppVar(x, m) => apply(term, &x.ty, m),
        Term::AppMeth(f, m) => apply(term, &f.ty, m),
        Term::If(c, t, e) => {
            expect(c, &Type::Int, typecheck(c)?)?;
            let tt = typecheck(t)?;
            expect(e, &tt, typecheck(e)?)?;
            Ok(tt)
        }
        Term::Let(x, m, n) => {
            expect(m, &x.ty, typecheck(m)?)?;
            typecheck(n)
        }
        Term::Letrec(f, x, body, cont) => {
            let b = typecheck(body)?;
            let want = Type::arrow(x.ty.clone(), b);
            if f.ty != want {
                return Err(TypeError::Mismatch {
                    term: snippet(term),
                    expected: f.ty.to_string(),
                    found: want,
                });
            }
            typecheck(cont)
        }
        Term::Lambda(x, body) => Ok(Type::arrow(x.ty.clone(), typecheck(body)?)),
    }
}

fn apply(term: &Term, fty: &Type, arg: &Term) -> Result<Type, TypeError> {
    match fty.as_arrow() {
        Some((a, b)) => {
            expect(arg, a, typecheck(arg)?)?;
            Ok(b.clone())
        }
        None => Err(mismatch(term, "an arrow type in head position", fty.clone())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{BinOp, Meth, Side, Var};

    #[test]
    fn lambda_types_as_arrow() {
        let x = Var::new("x", Type::Int);
        let t = Term::lambda(x.clone(), Term::binop(BinOp::Add, Term::Var(x), Term::Int(1)));
        assert_eq!(typecheck(&t), Ok(Type::arrow(Type::Int, Type::Int)));
    }

    #[test]
    fn projection_of_int_is_rejected() {
        let t = Term::proj(Side::First, Term::Int(3));
        assert!(matches!(typecheck(&t), Err(TypeError::Mismatch { .. })));
    }

    #[test]
    fn if_condition_must_be_int() {
        let t = Term::ite(Term::Unit, Term::Int(1), Term::Int(2));
        assert!(typecheck(&t).is_err());
    }

    #[test]
    fn application_of_non_arrow_variable() {
        let x = Var::new("x", Type::Int);
        assert!(typecheck(&Term::app_var(x, Term::Int(1))).is_err());
    }

    #[test]
    fn letrec_checks_declared_type() {
        let ii = Type::arrow(Type::Int, Type::Int);
        let f = Var::new("f", ii.clone());
        let x = Var::new("x", Type::Int);
        let good = Term::letrec(f.clone(), x.clone(), Term::Var(x.clone()), Term::Var(f.clone()));
        assert_eq!(typecheck(&good), Ok(ii));
        let bad = Term::letrec(f.clone(), x, Term::Unit, Term::Var(f));
        assert!(typecheck(&bad).is_err());
    }

    #[test]
    fn fail_has_its_annotated_type() {
        let t = Term::ite(Term::Int(1), Term::Unit, Term::Fail(Type::Unit));
        assert_eq!(typecheck(&t), Ok(Type::Unit));
        let bad = Term::ite(Term::Int(1), Term::Unit, Term::Fail(Type::Int));
        assert!(typecheck(&bad).is_err());
    }

    #[test]
    fn method_application() {
        let m = Meth::new("m", Type::arrow(Type::Int, Type::Unit));
        assert_eq!(typecheck(&Term::app_meth(m, Term::Int(0))), Ok(Type::Unit));
    }
}

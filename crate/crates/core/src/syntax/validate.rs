use std::collections::BTreeSet;

use super::{typecheck, Config, Term, Type, TypeError, Var};

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("name `{0}` is not bound in the repository or store")]
    DanglingName(String),
    #[error("free variable `{0}` has non-ground type {1}")]
    NonGroundFreeVar(String, Type),
    #[error("repository entry `{name}`: {reason}")]
    BadRepoEntry { name: String, reason: String },
    #[error("store entry `{name}` holds {value} which is not a closed value of type {ty}")]
    BadStoreEntry { name: String, value: String, ty: Type },
    #[error(transparent)]
    Type(#[from] TypeError),
}

/// What validation learned about a configuration.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ConfigReport {
    pub free_vars: BTreeSet<Var>,
    pub all_ground: bool,
    pub ty: Type,
}

/// Checks the configuration invariants: well-typed repository and store,
/// no dangling method or reference names, ground free variables only.
pub fn validate_config(c: &Config) -> Result<ConfigReport, ConfigError> {
    for (m, lam) in &c.repo {
        let Some((dom, cod)) = m.ty.as_arrow() else {
            return Err(ConfigError::BadRepoEntry {
                name: m.name.to_string(),
                reason: format!("type {} is not an arrow", m.ty),
            });
        };
        if lam.param.ty != *dom {
            return Err(ConfigError::BadRepoEntry {
                name: m.name.to_string(),
                reason: format!("parameter has type {}, expected {dom}", lam.param.ty),
            });
        }
        let bt = typecheck(&lam.body)?;
        if bt != *cod {
            return Err(ConfigError::BadRepoEntry {
                name: m.name.to_string(),
                reason: format!("body has type {bt}, expected {cod}"),
            });
        }
    }
    for (r, v) in &c.store {
        if v.ty() != r.ty || !v.is_closed() {
            return Err(ConfigError::BadStoreEntry {
                name: r.name.to_string(),
                value: v.to_string(),
                ty: r.ty.clone(),
            });
        }
    }
    let ty = typecheck(&c.term)?;

    let mut meths = c.term.meths();
    let mut refs = c.term.refs();
    let mut free = c.term.free_vars();
    for lam in c.repo.values() {
        meths.extend(lam.body.meths());
        refs.extend(lam.body.refs());
        free.extend(lam.body.free_vars().into_iter().filter(|x| *x != lam.param));
    }
    for v in c.store.values() {
        v.meths(&mut meths);
    }
    for m in &meths {
        if !c.repo.contains_key(m) {
            return Err(ConfigError::DanglingName(m.name.to_string()));
        }
    }
    for r in &refs {
        if !c.store.contains_key(r) {
            return Err(ConfigError::DanglingName(r.name.to_string()));
        }
    }
    for x in &free {
        if !x.ty.is_ground() {
            return Err(ConfigError::NonGroundFreeVar(x.name.to_string(), x.ty.clone()));
        }
    }
    Ok(ConfigReport { all_ground: true, free_vars: free, ty })
}

/// A term in which every binder is distinct and no binder is also free.
pub fn is_barendregt(t: &Term) -> bool {
    let free = t.free_vars();
    let mut seen = BTreeSet::new();
    t.binders().into_iter().all(|x| !free.contains(&x) && seen.insert(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{Bound, Lambda, Meth, Ref, Repo, Store, Value};

    fn ii() -> Type {
        Type::arrow(Type::Int, Type::Int)
    }

    fn config(term: Term, repo: Repo, store: Store) -> Config {
        Config { term, repo, store, bound: Bound::k(3), inputs: vec![] }
    }

    fn id_repo(m: &Meth) -> Repo {
        let x = Var::new("x", Type::Int);
        let mut r = Repo::new();
        r.insert(m.clone(), Lambda { param: x.clone(), body: Term::Var(x) });
        r
    }

    #[test]
    fn known_method_is_ok() {
        let m = Meth::new("m", ii());
        let c = config(Term::app_meth(m.clone(), Term::Int(1)), id_repo(&m), Store::new());
        assert!(validate_config(&c).is_ok());
    }

    #[test]
    fn missing_method_is_dangling() {
        let m = Meth::new("m", ii());
        let c = config(Term::app_meth(m, Term::Int(1)), Repo::new(), Store::new());
        assert_eq!(validate_config(&c), Err(ConfigError::DanglingName("m".into())));
    }

    #[test]
    fn missing_ref_is_dangling() {
        let r = Ref::new("r", Type::Int);
        let c = config(Term::Deref(r), Repo::new(), Store::new());
        assert_eq!(validate_config(&c), Err(ConfigError::DanglingName("r".into())));
    }

    #[test]
    fn higher_order_free_variable_is_rejected() {
        let f = Var::new("f", ii());
        let c = config(Term::app_var(f, Term::Int(1)), Repo::new(), Store::new());
        assert!(matches!(validate_config(&c), Err(ConfigError::NonGroundFreeVar(..))));
    }

    #[test]
    fn ground_free_variables_are_reported() {
        let n = Var::new("n", Type::Int);
        let c = config(Term::Var(n.clone()), Repo::new(), Store::new());
        let rep = validate_config(&c).unwrap();
        assert!(rep.all_ground);
        assert_eq!(rep.free_vars, [n].into_iter().collect());
    }

    #[test]
    fn store_value_must_match_type() {
        let r = Ref::new("r", Type::Int);
        let mut s = Store::new();
        s.insert(r, Value::Unit);
        assert!(matches!(
            validate_config(&config(Term::Unit, Repo::new(), s)),
            Err(ConfigError::BadStoreEntry { .. })
        ));
    }

    #[test]
    fn barendregt_detection() {
        let x = Var::new("x", Type::Int);
        let t = Term::let_(x.clone(), Term::Int(1), Term::let_(x.clone(), Term::Int(2), Term::Var(x.clone())));
        assert!(!is_barendregt(&t));
        let y = Var::new("y", Type::Int);
        let t = Term::let_(x.clone(), Term::Int(1), Term::let_(y, Term::Int(2), Term::Var(x)));
        assert!(is_barendregt(&t));
    }
}

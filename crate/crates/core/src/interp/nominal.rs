//! Permutations of method names and equivalence up to them.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{Answer, Outcome};
use crate::syntax::{Config, Lambda, Meth, Repo, Store, Term, Value};

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum PermutationError {
    #[error("permutation maps `{0}` : {1} to `{2}` : {3}")]
    TypeViolatingPermutation(String, String, String, String),
    #[error("mapping is not a bijection on its support")]
    NotBijective,
}

/// A finite, type-preserving permutation of method names. Names outside
/// the support are fixed.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Permutation {
    map: BTreeMap<Meth, Meth>,
}

impl Permutation {
    pub fn identity() -> Self {
        Permutation::default()
    }

    pub fn swap(a: Meth, b: Meth) -> Result<Self, PermutationError> {
        Permutation::from_pairs([(a.clone(), b.clone()), (b, a)])
    }

    /// The pairs must describe a bijection of a finite set onto itself.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Meth, Meth)>) -> Result<Self, PermutationError> {
        let mut map = BTreeMap::new();
        for (a, b) in pairs {
            if a.ty != b.ty {
                return Err(PermutationError::TypeViolatingPermutation(
                    a.name.to_string(),
                    a.ty.to_string(),
                    b.name.to_string(),
                    b.ty.to_string(),
                ));
            }
            if a != b {
                map.insert(a, b);
            }
        }
        let dom: BTreeSet<&Meth> = map.keys().collect();
        let img: BTreeSet<&Meth> = map.values().collect();
        if dom != img || img.len() != map.len() {
            return Err(PermutationError::NotBijective);
        }
        Ok(Permutation { map })
    }

    pub fn apply(&self, m: &Meth) -> Meth {
        self.map.get(m).cloned().unwrap_or_else(|| m.clone())
    }
}

/// Incrementally built injective, type-preserving name correspondence.
pub struct Matcher<'d> {
    fwd: HashMap<Meth, Meth>,
    bwd: HashMap<Meth, Meth>,
    delta: &'d BTreeSet<Meth>,
}

impl<'d> Matcher<'d> {
    pub fn new(delta: &'d BTreeSet<Meth>) -> Self {
        Matcher { fwd: HashMap::new(), bwd: HashMap::new(), delta }
    }

    pub fn meth(&mut self, a: &Meth, b: &Meth) -> bool {
        if a.ty != b.ty {
            return false;
        }
        if self.delta.contains(a) || self.delta.contains(b) {
            return a == b;
        }
        match (self.fwd.get(a), self.bwd.get(b)) {
            (Some(x), Some(y)) => x == b && y == a,
            (None, None) => {
                self.fwd.insert(a.clone(), b.clone());
                self.bwd.insert(b.clone(), a.clone());
                true
            }
            _ => false,
        }
    }
}

/// Objects that method-name permutations act on.
pub trait Nominal: Sized {
    fn permute(&self, pi: &Permutation) -> Self;
    fn matches(&self, other: &Self, m: &mut Matcher<'_>) -> bool;
}

impl Nominal for Meth {
    fn permute(&self, pi: &Permutation) -> Self {
        pi.apply(self)
    }
    fn matches(&self, other: &Self, m: &mut Matcher<'_>) -> bool {
        m.meth(self, other)
    }
}

impl Nominal for Value {
    fn permute(&self, pi: &Permutation) -> Self {
        match self {
            Value::Meth(m) => Value::Meth(pi.apply(m)),
            Value::Pair(a, b) => Value::pair(a.permute(pi), b.permute(pi)),
            v => v.clone(),
        }
    }
    fn matches(&self, other: &Self, m: &mut Matcher<'_>) -> bool {
        match (self, other) {
            (Value::Meth(a), Value::Meth(b)) => m.meth(a, b),
            (Value::Pair(a1, b1), Value::Pair(a2, b2)) => a1.matches(a2, m) && b1.matches(b2, m),
            (a, b) => a == b,
        }
    }
}

impl Nominal for Term {
    fn permute(&self, pi: &Permutation) -> Self {
        let go = |t: &Term| Box::new(t.permute(pi));
        match self {
            Term::Meth(m) => Term::Meth(pi.apply(m)),
            Term::AppMeth(m, a) => Term::AppMeth(pi.apply(m), go(a)),
            Term::Fail(_) | Term::Var(_) | Term::Int(_) | Term::Unit | Term::Deref(_) => self.clone(),
            Term::Assign(r, a) => Term::Assign(r.clone(), go(a)),
            Term::BinOp(op, a, b) => Term::BinOp(*op, go(a), go(b)),
            Term::Pair(a, b) => Term::Pair(go(a), go(b)),
            Term::Proj(s, a) => Term::Proj(*s, go(a)),
            Term::AppVar(x, a) => Term::AppVar(x.clone(), go(a)),
            Term::If(c, t, e) => Term::If(go(c), go(t), go(e)),
            Term::Let(x, a, b) => Term::Let(x.clone(), go(a), go(b)),
            Term::Letrec(f, x, a, b) => Term::Letrec(f.clone(), x.clone(), go(a), go(b)),
            Term::Lambda(x, a) => Term::Lambda(x.clone(), go(a)),
        }
    }

    fn matches(&self, other: &Self, m: &mut Matcher<'_>) -> bool {
        match (self, other) {
            (Term::Meth(a), Term::Meth(b)) => m.meth(a, b),
            (Term::AppMeth(a, x), Term::AppMeth(b, y)) => m.meth(a, b) && x.matches(y, m),
            (Term::Fail(a), Term::Fail(b)) => a == b,
            (Term::Var(a), Term::Var(b)) => a == b,
            (Term::Int(a), Term::Int(b)) => a == b,
            (Term::Unit, Term::Unit) => true,
            (Term::Deref(a), Term::Deref(b)) => a == b,
            (Term::Assign(r, x), Term::Assign(s, y)) => r == s && x.matches(y, m),
            (Term::BinOp(o, a, b), Term::BinOp(p, c, d)) => o == p && a.matches(c, m) && b.matches(d, m),
            (Term::Pair(a, b), Term::Pair(c, d)) => a.matches(c, m) && b.matches(d, m),
            (Term::Proj(s, a), Term::Proj(t, b)) => s == t && a.matches(b, m),
            (Term::AppVar(x, a), Term::AppVar(y, b)) => x == y && a.matches(b, m),
            (Term::If(a, b, c), Term::If(d, e, f)) => a.matches(d, m) && b.matches(e, m) && c.matches(f, m),
            (Term::Let(x, a, b), Term::Let(y, c, d)) => x == y && a.matches(c, m) && b.matches(d, m),
            (Term::Letrec(f, x, a, b), Term::Letrec(g, y, c, d)) => {
                f == g && x == y && a.matches(c, m) && b.matches(d, m)
            }
            (Term::Lambda(x, a), Term::Lambda(y, b)) => x == y && a.matches(b, m),
            _ => false,
        }
    }
}

impl Nominal for Lambda {
    fn permute(&self, pi: &Permutation) -> Self {
        Lambda { param: self.param.clone(), body: self.body.permute(pi) }
    }
    fn matches(&self, other: &Self, m: &mut Matcher<'_>) -> bool {
        self.param == other.param && self.body.matches(&other.body, m)
    }
}

impl Nominal for Repo {
    fn permute(&self, pi: &Permutation) -> Self {
        self.iter().map(|(k, v)| (pi.apply(k), v.permute(pi))).collect()
    }
    /// Entries are paired positionally.
    fn matches(&self, other: &Self, m: &mut Matcher<'_>) -> bool {
        self.len() == other.len()
            && self.iter().zip(other.iter()).all(|((k1, v1), (k2, v2))| m.meth(k1, k2) && v1.matches(v2, m))
    }
}

impl Nominal for Store {
    fn permute(&self, pi: &Permutation) -> Self {
        self.iter().map(|(r, v)| (r.clone(), v.permute(pi))).collect()
    }
    fn matches(&self, other: &Self, m: &mut Matcher<'_>) -> bool {
        self.len() == other.len()
            && self.iter().zip(other.iter()).all(|((r1, v1), (r2, v2))| r1 == r2 && v1.matches(v2, m))
    }
}

impl Nominal for Answer {
    fn permute(&self, pi: &Permutation) -> Self {
        match self {
            Answer::Val(v) => Answer::Val(v.permute(pi)),
            a => a.clone(),
        }
    }
    fn matches(&self, other: &Self, m: &mut Matcher<'_>) -> bool {
        match (self, other) {
            (Answer::Val(a), Answer::Val(b)) => a.matches(b, m),
            (a, b) => a == b,
        }
    }
}

impl Nominal for Outcome {
    fn permute(&self, pi: &Permutation) -> Self {
        Outcome { answer: self.answer.permute(pi), repo: self.repo.permute(pi), store: self.store.permute(pi) }
    }
    fn matches(&self, other: &Self, m: &mut Matcher<'_>) -> bool {
        self.answer.matches(&other.answer, m) && self.store.matches(&other.store, m) && self.repo.matches(&other.repo, m)
    }
}

impl Nominal for Config {
    fn permute(&self, pi: &Permutation) -> Self {
        Config {
            term: self.term.permute(pi),
            repo: self.repo.permute(pi),
            store: self.store.permute(pi),
            bound: self.bound,
            inputs: self.inputs.clone(),
        }
    }
    fn matches(&self, other: &Self, m: &mut Matcher<'_>) -> bool {
        self.bound == other.bound
            && self.inputs == other.inputs
            && self.term.matches(&other.term, m)
            && self.store.matches(&other.store, m)
            && self.repo.matches(&other.repo, m)
    }
}

/// `π·x`.
pub fn apply_permutation<T: Nominal>(x: &T, pi: &Permutation) -> T {
    x.permute(pi)
}

/// True iff some finite type-preserving permutation fixing `delta` maps
/// `x` to `y`.
pub fn nominally_equiv<T: Nominal>(x: &T, y: &T, delta: &BTreeSet<Meth>) -> bool {
    x.matches(y, &mut Matcher::new(delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{Type, Var};

    fn ii() -> Type {
        Type::arrow(Type::Int, Type::Int)
    }

    fn outcome(v: Value) -> Outcome {
        Outcome { answer: Answer::Val(v), repo: Repo::new(), store: Store::new() }
    }

    #[test]
    fn identity_leaves_objects_alone() {
        let o = outcome(Value::Meth(Meth::new("m1", ii())));
        assert_eq!(apply_permutation(&o, &Permutation::identity()), o);
    }

    #[test]
    fn swap_acts_on_values() {
        let m1 = Meth::new("m1", ii());
        let m2 = Meth::new("m2", ii());
        let pi = Permutation::swap(m1.clone(), m2.clone()).unwrap();
        assert_eq!(apply_permutation(&outcome(Value::Meth(m1)), &pi), outcome(Value::Meth(m2)));
    }

    #[test]
    fn swap_across_types_is_rejected() {
        let m1 = Meth::new("m1", ii());
        let m2 = Meth::new("m2", Type::arrow(Type::Int, Type::Unit));
        assert!(matches!(Permutation::swap(m1, m2), Err(PermutationError::TypeViolatingPermutation(..))));
    }

    #[test]
    fn non_bijective_mapping_is_rejected() {
        let m1 = Meth::new("m1", ii());
        let m2 = Meth::new("m2", ii());
        assert_eq!(Permutation::from_pairs([(m1, m2)]), Err(PermutationError::NotBijective));
    }

    #[test]
    fn equivalence_respects_delta() {
        let m1 = Meth::new("m1", ii());
        let m2 = Meth::new("m2", ii());
        let a = outcome(Value::Meth(m1.clone()));
        let b = outcome(Value::Meth(m2));
        assert!(nominally_equiv(&a, &a, &[m1.clone()].into_iter().collect()));
        assert!(nominally_equiv(&a, &b, &BTreeSet::new()));
        assert!(!nominally_equiv(&a, &b, &[m1].into_iter().collect()));
    }

    #[test]
    fn matching_must_be_injective() {
        let m1 = Meth::new("m1", ii());
        let m2 = Meth::new("m2", ii());
        let m3 = Meth::new("m3", ii());
        let a = Value::pair(Value::Meth(m1.clone()), Value::Meth(m2));
        let b = Value::pair(Value::Meth(m3.clone()), Value::Meth(m3));
        assert!(!nominally_equiv(&a, &b, &BTreeSet::new()));
    }

    #[test]
    fn repositories_match_positionally() {
        let x = Var::new("x", Type::Int);
        let lam = |body: Term| Lambda { param: x.clone(), body };
        let m1 = Meth::new("m1", ii());
        let m2 = Meth::new("m2", ii());
        let r1: Repo = [(m1.clone(), lam(Term::app_meth(m1.clone(), Term::Var(x.clone()))))].into_iter().collect();
        let r2: Repo = [(m2.clone(), lam(Term::app_meth(m2.clone(), Term::Var(x.clone()))))].into_iter().collect();
        assert!(nominally_equiv(&r1, &r2, &BTreeSet::new()));
        let r3: Repo = [(m2.clone(), lam(Term::app_meth(m1, Term::Var(x.clone()))))].into_iter().collect();
        assert!(!nominally_equiv(&r1, &r3, &BTreeSet::new()));
    }
}

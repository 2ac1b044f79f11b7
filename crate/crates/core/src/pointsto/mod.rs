//! Points-to analysis for method names, and the translation that uses it
//! to restrict variable applications to the names a variable may hold.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde_json::json;

use crate::syntax::{Meth, Ref, Repo, Side, Type, Value};
use crate::translate::{self, SymbolicConfig, TranslateError, TranslateOptions, TranslationResult};

/// A set of method names, or a pair of points-to sets for product values.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum PtsSet {
    Names(BTreeSet<Meth>),
    Pair(Box<PtsSet>, Box<PtsSet>),
}

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum PtsError {
    #[error("points-to shapes do not match: {0} and {1}")]
    ShapeMismatch(PtsSet, PtsSet),
    #[error("no points-to entry for `{0}`")]
    Missing(String),
}

impl Default for PtsSet {
    fn default() -> Self {
        PtsSet::empty()
    }
}

impl PtsSet {
    pub fn empty() -> PtsSet {
        PtsSet::Names(BTreeSet::new())
    }

    pub fn single(m: Meth) -> PtsSet {
        PtsSet::Names(BTreeSet::from([m]))
    }

    pub fn pair(a: PtsSet, b: PtsSet) -> PtsSet {
        PtsSet::Pair(Box::new(a), Box::new(b))
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, PtsSet::Names(s) if s.is_empty())
    }

    /// The set for a closed value stored in a reference.
    pub fn of_value(v: &Value) -> PtsSet {
        match v {
            Value::Meth(m) => PtsSet::single(m.clone()),
            Value::Pair(a, b) => PtsSet::pair(PtsSet::of_value(a), PtsSet::of_value(b)).normalize(&v.ty()),
            _ => PtsSet::empty(),
        }
    }

    /// Ground-typed expressions carry the empty set whatever their shape.
    pub fn normalize(self, ty: &Type) -> PtsSet {
        if ty.is_ground() {
            PtsSet::empty()
        } else {
            self
        }
    }

    /// Component of a pair set. The empty set projects to itself.
    pub fn proj(&self, side: Side) -> Result<PtsSet, PtsError> {
        match self {
            PtsSet::Pair(a, b) => Ok(if side == Side::First { (**a).clone() } else { (**b).clone() }),
            s if s.is_empty() => Ok(PtsSet::empty()),
            s => Err(PtsError::ShapeMismatch(s.clone(), PtsSet::pair(PtsSet::empty(), PtsSet::empty()))),
        }
    }

    /// The names an arrow-typed variable may hold.
    pub fn names(&self) -> Result<&BTreeSet<Meth>, PtsError> {
        match self {
            PtsSet::Names(s) => Ok(s),
            p => Err(PtsError::ShapeMismatch(p.clone(), PtsSet::empty())),
        }
    }

    pub fn all_names(&self, out: &mut BTreeSet<Meth>) {
        match self {
            PtsSet::Names(s) => out.extend(s.iter().cloned()),
            PtsSet::Pair(a, b) => {
                a.all_names(out);
                b.all_names(out);
            }
        }
    }

    fn to_json(&self, ids: &dyn Fn(&Meth) -> serde_json::Value) -> serde_json::Value {
        match self {
            PtsSet::Names(s) => {
                let mut v: Vec<serde_json::Value> = s.iter().map(ids).collect();
                v.sort_by_key(|x| x.to_string());
                serde_json::Value::Array(v)
            }
            PtsSet::Pair(a, b) => json!({ "fst": a.to_json(ids), "snd": b.to_json(ids) }),
        }
    }
}

impl fmt::Display for PtsSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PtsSet::Names(s) => {
                f.write_str("{")?;
                for (i, m) in s.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    f.write_str(&m.name)?;
                }
                f.write_str("}")
            }
            PtsSet::Pair(a, b) => write!(f, "<{a}, {b}>"),
        }
    }
}

/// Pointwise union. The empty name set is a unit for either shape.
pub fn pts_union(a: &PtsSet, b: &PtsSet) -> Result<PtsSet, PtsError> {
    match (a, b) {
        (PtsSet::Names(x), PtsSet::Names(y)) => Ok(PtsSet::Names(x.union(y).cloned().collect())),
        (PtsSet::Pair(a1, a2), PtsSet::Pair(b1, b2)) => Ok(PtsSet::pair(pts_union(a1, b1)?, pts_union(a2, b2)?)),
        (e, p) | (p, e) if e.is_empty() => Ok(p.clone()),
        _ => Err(PtsError::ShapeMismatch(a.clone(), b.clone())),
    }
}

/// Keys of a points-to map: logical variables and references.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum PtKey {
    Var(Arc<str>),
    Ref(Arc<str>),
}

impl fmt::Display for PtKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PtKey::Var(x) => f.write_str(x),
            PtKey::Ref(r) => write!(f, "!{r}"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct PtMap(BTreeMap<PtKey, PtsSet>);

impl PtMap {
    pub fn new() -> Self {
        PtMap::default()
    }

    /// Entries for every reference, from its initial value.
    pub fn from_store<'a>(store: impl IntoIterator<Item = (&'a Ref, &'a Value)>) -> Self {
        let mut pt = PtMap::new();
        for (r, v) in store {
            pt.set_ref(r, PtsSet::of_value(v));
        }
        pt
    }

    pub fn get(&self, k: &PtKey) -> Option<&PtsSet> {
        self.0.get(k)
    }

    pub fn var(&self, x: &str) -> Result<&PtsSet, PtsError> {
        self.0.get(&PtKey::Var(x.into())).ok_or_else(|| PtsError::Missing(x.to_string()))
    }

    pub fn reference(&self, r: &Ref) -> Result<&PtsSet, PtsError> {
        self.0.get(&PtKey::Ref(r.name.clone())).ok_or_else(|| PtsError::Missing(format!("!{}", r.name)))
    }

    pub fn set_var(&mut self, x: &str, a: PtsSet) {
        self.0.insert(PtKey::Var(x.into()), a);
    }

    pub fn set_ref(&mut self, r: &Ref, a: PtsSet) {
        self.0.insert(PtKey::Ref(r.name.clone()), a);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PtKey, &PtsSet)> {
        self.0.iter()
    }

    /// Debug dump: key to sorted method ids (names for methods not in `repo`).
    pub fn to_json(&self, repo: &Repo) -> serde_json::Value {
        let ids = |m: &Meth| match repo.get_index_of(m) {
            Some(i) => json!(i),
            None => json!(m.name.to_string()),
        };
        let obj: serde_json::Map<String, serde_json::Value> =
            self.0.iter().map(|(k, v)| (k.to_string(), v.to_json(&ids))).collect();
        serde_json::Value::Object(obj)
    }
}

impl FromIterator<(PtKey, PtsSet)> for PtMap {
    fn from_iter<I: IntoIterator<Item = (PtKey, PtsSet)>>(iter: I) -> Self {
        PtMap(iter.into_iter().collect())
    }
}

/// Union of maps; a key absent from a map counts as the empty set.
pub fn pt_merge<'a>(maps: impl IntoIterator<Item = &'a PtMap>) -> Result<PtMap, PtsError> {
    let mut out: BTreeMap<PtKey, PtsSet> = BTreeMap::new();
    for m in maps {
        for (k, v) in &m.0 {
            match out.get_mut(k) {
                Some(cur) => {
                    if cur != v {
                        *cur = pts_union(cur, v)?;
                    }
                }
                None => {
                    out.insert(k.clone(), v.clone());
                }
            }
        }
    }
    Ok(PtMap(out))
}

/// The optimised translation: returns the translation, the points-to set
/// of the result and the final map.
pub fn translate_opt(
    sc: &SymbolicConfig,
    pt: PtMap,
    opts: &TranslateOptions,
) -> Result<(TranslationResult, PtsSet, PtMap), TranslateError> {
    let (res, a, pt) = translate::run(sc, Some(pt), opts)?;
    Ok((res, a, pt.expect("optimised run returns a map")))
}

/// Points-to analysis alone: the optimised translation with its formula
/// discarded. Returns the result variable name, its set, the final
/// repository and map.
pub fn pt_analyze(sc: &SymbolicConfig, pt: PtMap) -> Result<(String, PtsSet, Repo, PtMap), TranslateError> {
    let (res, a, pt) = translate_opt(sc, pt, &TranslateOptions::default())?;
    Ok((res.ret.name.to_string(), a, res.repo, pt))
}

/// The starting map for a configuration: references from their initial
/// values and free (ground) inputs empty.
pub fn initial_pt(sc: &SymbolicConfig, store: &crate::syntax::Store) -> PtMap {
    let mut pt = PtMap::from_store(store);
    for x in &sc.free {
        pt.set_var(&x.name, PtsSet::empty());
    }
    pt
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(n: &str) -> Meth {
        Meth::new(n, Type::arrow(Type::Int, Type::Int))
    }

    fn names(ns: &[&str]) -> PtsSet {
        PtsSet::Names(ns.iter().map(|n| m(n)).collect())
    }

    #[test]
    fn union_cases() {
        assert_eq!(pts_union(&names(&["a"]), &names(&["b"])), Ok(names(&["a", "b"])));
        assert_eq!(pts_union(&names(&[]), &names(&["b"])), Ok(names(&["b"])));
        let p = PtsSet::pair(names(&["a"]), names(&[]));
        let q = PtsSet::pair(names(&[]), names(&["b"]));
        assert_eq!(pts_union(&p, &q), Ok(PtsSet::pair(names(&["a"]), names(&["b"]))));
        assert_eq!(pts_union(&PtsSet::empty(), &p), Ok(p.clone()));
        assert!(pts_union(&names(&["a"]), &p).is_err());
    }

    #[test]
    fn merge_cases() {
        let a: PtMap = [(PtKey::Var("x".into()), names(&["a"]))].into_iter().collect();
        let b: PtMap = [(PtKey::Var("x".into()), names(&["b"]))].into_iter().collect();
        let c: PtMap = [(PtKey::Var("y".into()), names(&["b"]))].into_iter().collect();
        assert_eq!(pt_merge([&a, &b]).unwrap().var("x"), Ok(&names(&["a", "b"])));
        let ac = pt_merge([&a, &c]).unwrap();
        assert_eq!(ac.len(), 2);
        assert_eq!(ac.var("y"), Ok(&names(&["b"])));
        assert!(pt_merge([]).unwrap().is_empty());
    }

    #[test]
    fn projections_and_normalisation() {
        let p = PtsSet::pair(names(&["a"]), names(&["b"]));
        assert_eq!(p.proj(Side::Second), Ok(names(&["b"])));
        assert_eq!(PtsSet::empty().proj(Side::First), Ok(PtsSet::empty()));
        assert!(names(&["a"]).proj(Side::First).is_err());
        let ground = Type::prod(Type::Int, Type::Unit);
        assert_eq!(PtsSet::pair(PtsSet::empty(), PtsSet::empty()).normalize(&ground), PtsSet::empty());
        let ho = Type::prod(Type::Int, Type::arrow(Type::Int, Type::Int));
        assert!(!PtsSet::pair(PtsSet::empty(), PtsSet::empty()).normalize(&ho).is_empty());
    }

    #[test]
    fn json_dump_uses_ids() {
        let mut repo = Repo::new();
        let lam = crate::syntax::Lambda { param: crate::syntax::Var::new("x", Type::Int), body: crate::syntax::Term::Int(0) };
        repo.insert(m("a"), lam.clone());
        repo.insert(m("b"), lam);
        let mut pt = PtMap::new();
        pt.set_var("x", names(&["b", "a"]));
        assert_eq!(pt.to_json(&repo), json!({ "x": [0, 1] }));
    }
}

//! The BMC translation `⟦M, R, C, D, φ, k⟧ = (ret, φ', R', C', D')`.
//!
//! Terms are executed symbolically. Every evaluation point gets a fresh
//! logical variable `ret<n>`, references are versioned in SSA form
//! (`r_i`), and applications through variables branch over every
//! candidate method. Both the base translation and the points-to
//! optimised one run through [`Translator`]; the latter simply carries a
//! [`PtMap`] along.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::formula::{emit_smtlib, emit_smtlib_queries, guard_f, prune_f, Expr, Formula, FormulaError, LogVar, Q};
use crate::pointsto::{pt_merge, pts_union, PtMap, PtsError, PtsSet};
use crate::syntax::{validate_config, Bound, Config, ConfigError, Lambda, Meth, Ref, Repo, Side, Term, Type, Value, Var};

pub mod reach;

pub use reach::reachability_q;

/// Current SSA version of every reference.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct SsaMap(BTreeMap<Ref, u32>);

pub fn ssa_var(r: &Ref, i: u32) -> LogVar {
    LogVar::new(format!("{}_{i}", r.name), r.ty.clone())
}

impl SsaMap {
    /// Every reference at version 0.
    pub fn initial<'a>(refs: impl IntoIterator<Item = &'a Ref>) -> Self {
        SsaMap(refs.into_iter().map(|r| (r.clone(), 0)).collect())
    }

    pub fn version(&self, r: &Ref) -> Option<u32> {
        self.0.get(r).copied()
    }

    pub fn var(&self, r: &Ref) -> Option<LogVar> {
        self.version(r).map(|i| ssa_var(r, i))
    }

    pub fn refs(&self) -> impl Iterator<Item = &Ref> {
        self.0.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Ref, u32)> {
        self.0.iter().map(|(r, i)| (r, *i))
    }

    fn set(&mut self, r: &Ref, i: u32) {
        self.0.insert(r.clone(), i);
    }
}

impl fmt::Display for SsaMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (r, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{r} -> {}", ssa_var(r, *v).name)?;
        }
        f.write_str("}")
    }
}

/// `(M, R, C, D, φ, k)`, plus the free ground inputs that need declaring.
#[derive(Clone, Debug)]
pub struct SymbolicConfig {
    pub term: Term,
    pub repo: Repo,
    pub c: SsaMap,
    pub d: SsaMap,
    pub phi: Vec<Formula>,
    pub bound: Bound,
    pub free: Vec<LogVar>,
}

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum TranslateError {
    #[error("free variable `{0}` has non-ground type {1}")]
    NonGroundFreeVar(String, Type),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    PointsTo(#[from] PtsError),
    #[error("method `{0}` is not in the repository")]
    UnknownMethod(String),
    #[error("reference `{0}` has no SSA version")]
    UnknownRef(String),
    #[error("`{0}` is not an arrow-typed variable")]
    NotAFunction(String),
    #[error("points-to set of `{var}` contains `{meth}`, which is not a candidate of type {ty}")]
    PtNotRefinement { var: String, meth: String, ty: Type },
    #[error("repository shrank during translation of `{0}`")]
    RepositoryShrank(String),
    #[error("store value for `{0}` is not closed")]
    OpenStoreValue(String),
    #[error("translation exceeded {0} clauses")]
    TooLarge(usize),
}

#[derive(Clone, Debug)]
pub struct TranslateOptions {
    /// Use the fail/nil pruned guard instead of the full one.
    pub prune: bool,
    /// Record a label for every clause.
    pub origins: bool,
    pub max_clauses: Option<usize>,
}

impl Default for TranslateOptions {
    fn default() -> Self {
        TranslateOptions { prune: true, origins: false, max_clauses: None }
    }
}

/// One variable application site: how deep in the call chain it was met
/// and how many methods it branched over.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct AppSite {
    pub depth: u32,
    pub candidates: usize,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct TranslationStats {
    pub vars: usize,
    pub clauses: usize,
    pub atoms: usize,
    /// Total candidates over all variable application sites.
    pub branches: usize,
    pub known_calls: usize,
    pub methods_created: usize,
    pub sites: Vec<AppSite>,
}

#[derive(Clone, Debug)]
pub struct TranslationResult {
    pub ret: LogVar,
    /// Conjuncts of the path formula, input clauses first.
    pub phi: Vec<Formula>,
    pub repo: Repo,
    pub c: SsaMap,
    pub d: SsaMap,
    /// Every logical variable, free inputs first.
    pub decls: Vec<LogVar>,
    /// Per-clause labels when requested.
    pub origins: Option<Vec<String>>,
    pub stats: TranslationStats,
    /// Which aborts `ret` may carry.
    pub q: Q,
}

impl TranslationResult {
    pub fn method_ids(&self) -> Vec<(u32, Meth)> {
        self.repo.keys().enumerate().map(|(i, m)| (i as u32, m.clone())).collect()
    }

    pub fn method_id(&self, m: &Meth) -> Option<u32> {
        self.repo.get_index_of(m).map(|i| i as u32)
    }

    pub fn smtlib(&self, query: &Formula) -> Result<String, FormulaError> {
        emit_smtlib(&self.decls, &self.method_ids(), &self.phi, query)
    }

    pub fn smtlib_queries(&self, queries: &[Formula]) -> Result<String, FormulaError> {
        emit_smtlib_queries(&self.decls, &self.method_ids(), &self.phi, queries)
    }

    /// The clause list with labels, one per line.
    pub fn dump_clauses(&self) -> String {
        let mut out = String::new();
        for (i, f) in self.phi.iter().enumerate() {
            let mut s = String::new();
            crate::formula::Emitter::formula(f, &mut s);
            match self.origins.as_ref().and_then(|o| o.get(i)) {
                Some(label) => out.push_str(&format!("; {label}\n{s}\n")),
                None => out.push_str(&format!("{s}\n")),
            }
        }
        out
    }
}

pub(crate) fn value_expr(v: &Value, repo: &Repo) -> Result<Expr, TranslateError> {
    Ok(match v {
        Value::Int(i) => Expr::Int(*i),
        Value::Unit => Expr::Unit,
        Value::Meth(m) => {
            let id = repo.get_index_of(m).ok_or_else(|| TranslateError::UnknownMethod(m.name.to_string()))?;
            Expr::Meth(id as u32, m.ty.clone())
        }
        Value::Pair(a, b) => Expr::pair(value_expr(a, repo)?, value_expr(b, repo)?),
        Value::Var(x) => return Err(TranslateError::OpenStoreValue(x.name.to_string())),
    })
}

/// Initial preconditions `⋀ r_0 = S(r)` and SSA maps `{r ↦ r_0}`.
pub fn build_initial(c: &Config) -> Result<SymbolicConfig, TranslateError> {
    let report = validate_config(c)?;
    for x in report.free_vars.iter().chain(c.inputs.iter()) {
        if !x.ty.is_ground() {
            return Err(TranslateError::NonGroundFreeVar(x.name.to_string(), x.ty.clone()));
        }
    }
    let mut free: Vec<LogVar> = c.inputs.iter().map(|x| LogVar::new(x.name.clone(), x.ty.clone())).collect();
    for x in &report.free_vars {
        if !c.inputs.contains(x) {
            free.push(LogVar::new(x.name.clone(), x.ty.clone()));
        }
    }
    let c0 = SsaMap::initial(c.store.keys());
    let mut phi = Vec::new();
    for (r, v) in &c.store {
        phi.push(Formula::eq(ssa_var(r, 0).e(), value_expr(v, &c.repo)?));
    }
    Ok(SymbolicConfig { term: c.term.clone(), repo: c.repo.clone(), d: c0.clone(), c: c0, phi, bound: c.bound, free })
}

/// The base translation.
pub fn translate(sc: &SymbolicConfig, opts: &TranslateOptions) -> Result<TranslationResult, TranslateError> {
    run(sc, None, opts).map(|(r, _, _)| r)
}

/// Runs `f` on a thread with a large stack; translation recursion follows
/// the nesting of terms and calls.
pub fn with_big_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(512 << 20)
            .spawn_scoped(s, f)
            .expect("spawn translation thread")
            .join()
            .unwrap_or_else(|e| std::panic::resume_unwind(e))
    })
}

pub(crate) fn run(
    sc: &SymbolicConfig,
    pt: Option<PtMap>,
    opts: &TranslateOptions,
) -> Result<(TranslationResult, PtsSet, Option<PtMap>), TranslateError> {
    let mut taken: HashSet<Arc<str>> = sc.free.iter().map(|x| x.name.clone()).collect();
    for r in sc.c.refs() {
        taken.insert(r.name.clone());
    }
    let mut meth_names: HashSet<Arc<str>> = sc.repo.keys().map(|m| m.name.clone()).collect();
    let mut scan = |t: &Term| {
        if let Term::Var(x) | Term::AppVar(x, _) | Term::Let(x, ..) | Term::Lambda(x, _) | Term::Letrec(x, ..) = t {
            taken.insert(x.name.clone());
        }
        if let Term::Meth(m) | Term::AppMeth(m, _) = t {
            meth_names.insert(m.name.clone());
        }
    };
    sc.term.visit(&mut scan);
    for lam in sc.repo.values() {
        lam.body.visit(&mut scan);
    }
    let mut decls: Vec<LogVar> = sc.free.clone();
    for (r, i) in sc.c.iter() {
        for v in 0..=i {
            decls.push(ssa_var(r, v));
        }
    }
    let mut t = Translator {
        repo: sc.repo.clone(),
        c: sc.c.clone(),
        clauses: sc.phi.clone(),
        origins: opts.origins.then(|| vec!["precondition".to_string(); sc.phi.len()]),
        decls,
        next_ret: 1,
        next_lam: 0,
        taken,
        meth_names,
        refs: sc.c.refs().cloned().collect(),
        opts: opts.clone(),
        k0: sc.bound,
        stats: TranslationStats::default(),
    };
    let out = t.tr(&sc.term, sc.d.clone(), pt, sc.bound)?;
    t.stats.vars = t.decls.len();
    t.stats.clauses = t.clauses.len();
    t.stats.atoms = t.clauses.iter().map(Formula::atoms).sum();
    let res = TranslationResult {
        ret: out.ret,
        phi: t.clauses,
        repo: t.repo,
        c: t.c,
        d: out.d,
        decls: t.decls,
        origins: t.origins,
        stats: t.stats,
        q: out.q,
    };
    Ok((res, out.a, out.pt))
}

/// Result of translating one subterm. `C` and the repository are
/// threaded through the translator itself.
struct Out {
    ret: LogVar,
    d: SsaMap,
    a: PtsSet,
    pt: Option<PtMap>,
    q: Q,
}

struct Translator {
    repo: Repo,
    c: SsaMap,
    clauses: Vec<Formula>,
    origins: Option<Vec<String>>,
    decls: Vec<LogVar>,
    next_ret: u64,
    next_lam: u64,
    taken: HashSet<Arc<str>>,
    meth_names: HashSet<Arc<str>>,
    refs: Vec<Ref>,
    opts: TranslateOptions,
    k0: Bound,
    stats: TranslationStats,
}

fn snippet(t: &Term) -> String {
    let s = t.to_string();
    if s.chars().count() > 60 {
        let cut: String = s.chars().take(57).collect();
        format!("{cut}...")
    } else {
        s
    }
}

/// Type of a well-typed term, without re-checking it.
pub fn type_of(t: &Term) -> Type {
    match t {
        Term::Fail(ty) => ty.clone(),
        Term::Var(x) => x.ty.clone(),
        Term::Meth(m) => m.ty.clone(),
        Term::Int(_) | Term::BinOp(..) => Type::Int,
        Term::Unit | Term::Assign(..) => Type::Unit,
        Term::Deref(r) => r.ty.clone(),
        Term::Pair(a, b) => Type::prod(type_of(a), type_of(b)),
        Term::Proj(s, m) => match type_of(m) {
            Type::Prod(a, b) => (*if *s == Side::First { a } else { b }).clone(),
            other => other,
        },
        Term::AppVar(Var { ty, .. }, _) | Term::AppMeth(Meth { ty, .. }, _) => match ty {
            Type::Arrow(_, b) => (**b).clone(),
            other => other.clone(),
        },
        Term::If(_, a, _) => type_of(a),
        Term::Let(_, _, n) | Term::Letrec(_, _, _, n) => type_of(n),
        Term::Lambda(x, b) => Type::arrow(x.ty.clone(), type_of(b)),
    }
}

fn as_var(v: &LogVar) -> Term {
    Term::Var(Var::new(v.name.clone(), v.sort.clone()))
}

impl Translator {
    fn fresh_ret(&mut self, sort: Type) -> LogVar {
        loop {
            let name = format!("ret{}", self.next_ret);
            self.next_ret += 1;
            if !self.taken.contains(name.as_str()) {
                let v = LogVar::new(name, sort);
                self.decls.push(v.clone());
                return v;
            }
        }
    }

    fn fresh_meth(&mut self, ty: Type) -> Meth {
        loop {
            let name = format!("lam#{}", self.next_lam);
            self.next_lam += 1;
            if self.meth_names.insert(Arc::from(name.as_str())) {
                self.stats.methods_created += 1;
                return Meth::new(name, ty);
            }
        }
    }

    fn meth_expr(&self, m: &Meth) -> Result<Expr, TranslateError> {
        let id = self.repo.get_index_of(m).ok_or_else(|| TranslateError::UnknownMethod(m.name.to_string()))?;
        Ok(Expr::Meth(id as u32, m.ty.clone()))
    }

    /// `C[r]`: the next version of `r`, declared.
    fn bump(&mut self, r: &Ref) -> Result<LogVar, TranslateError> {
        let i = self.c.version(r).ok_or_else(|| TranslateError::UnknownRef(r.name.to_string()))? + 1;
        self.c.set(r, i);
        let v = ssa_var(r, i);
        self.decls.push(v.clone());
        Ok(v)
    }

    /// Bumps every reference; returns the new map.
    fn bump_all(&mut self) -> Result<SsaMap, TranslateError> {
        for r in self.refs.clone() {
            self.bump(&r)?;
        }
        Ok(self.c.clone())
    }

    fn guard(&self, a: &LogVar, qa: Q, b: &LogVar, phi: Formula) -> Formula {
        if self.opts.prune {
            prune_f(a, b, phi, qa)
        } else {
            guard_f(a, b, phi)
        }
    }

    fn push(&mut self, f: Formula, rule: &str, t: &Term) -> Result<(), TranslateError> {
        if let Some(o) = &mut self.origins {
            o.push(format!("{rule}: {}", snippet(t)));
        }
        self.clauses.push(f);
        match self.opts.max_clauses {
            Some(n) if self.clauses.len() > n => Err(TranslateError::TooLarge(n)),
            _ => Ok(()),
        }
    }

    fn pt_lookup_var(&self, pt: &Option<PtMap>, x: &Var) -> Result<PtsSet, TranslateError> {
        match pt {
            Some(pt) if !x.ty.is_ground() => Ok(pt.var(&x.name)?.clone()),
            _ => Ok(PtsSet::empty()),
        }
    }

    fn joins(c: &SsaMap, d: &SsaMap) -> Vec<Formula> {
        c.iter()
            .map(|(r, i)| Formula::eq(ssa_var(r, i).e(), d.var(r).expect("same domain").e()))
            .collect()
    }

    /// The translation with the repository and clause-prefix invariants
    /// checked on return.
    fn tr(&mut self, t: &Term, d: SsaMap, pt: Option<PtMap>, k: Bound) -> Result<Out, TranslateError> {
        let len = self.repo.len();
        let last = len.checked_sub(1).map(|i| self.repo.get_index(i).unwrap().0.clone());
        let clauses = self.clauses.len();
        let out = self.tr_inner(t, d, pt, k)?;
        let kept = match &last {
            Some(m) => self.repo.get_index(len - 1).map(|(k, _)| k) == Some(m),
            None => true,
        };
        if self.repo.len() < len || !kept || self.clauses.len() < clauses {
            return Err(TranslateError::RepositoryShrank(snippet(t)));
        }
        Ok(out)
    }

    fn tr_inner(&mut self, t: &Term, d: SsaMap, pt: Option<PtMap>, k: Bound) -> Result<Out, TranslateError> {
        let zero = |ret: LogVar, d: SsaMap, a: PtsSet, pt: Option<PtMap>, q: Q| Ok(Out { ret, d, a, pt, q });
        if k.is_nil() {
            let ret = self.fresh_ret(type_of(t));
            self.push(Formula::eq(ret.e(), Expr::Nil(ret.sort.clone())), "nil", t)?;
            return zero(ret, d, PtsSet::empty(), pt, Q::Nil);
        }
        match t {
            Term::Fail(ty) => {
                let ret = self.fresh_ret(ty.clone());
                self.push(Formula::eq(ret.e(), Expr::Fail(ty.clone())), "fail", t)?;
                zero(ret, d, PtsSet::empty(), pt, Q::Fail)
            }
            Term::Int(i) => {
                let ret = self.fresh_ret(Type::Int);
                self.push(Formula::eq(ret.e(), Expr::Int(*i)), "value", t)?;
                zero(ret, d, PtsSet::empty(), pt, Q::Zero)
            }
            Term::Unit => {
                let ret = self.fresh_ret(Type::Unit);
                self.push(Formula::eq(ret.e(), Expr::Unit), "value", t)?;
                zero(ret, d, PtsSet::empty(), pt, Q::Zero)
            }
            Term::Meth(m) => {
                let e = self.meth_expr(m)?;
                let ret = self.fresh_ret(m.ty.clone());
                self.push(Formula::eq(ret.e(), e), "method", t)?;
                zero(ret, d, PtsSet::single(m.clone()), pt, Q::Zero)
            }
            Term::Var(x) => {
                let a = self.pt_lookup_var(&pt, x)?;
                let ret = self.fresh_ret(x.ty.clone());
                let xv = LogVar::new(x.name.clone(), x.ty.clone());
                self.push(Formula::eq(ret.e(), xv.e()), "var", t)?;
                zero(ret, d, a, pt, Q::Zero)
            }
            Term::Deref(r) => {
                let cur = d.var(r).ok_or_else(|| TranslateError::UnknownRef(r.name.to_string()))?;
                let a = match &pt {
                    Some(pt) if !r.ty.is_ground() => pt.reference(r)?.clone(),
                    _ => PtsSet::empty(),
                };
                let ret = self.fresh_ret(r.ty.clone());
                self.push(Formula::eq(ret.e(), cur.e()), "deref", t)?;
                zero(ret, d, a, pt, Q::Zero)
            }
            Term::Lambda(x, body) => {
                let ty = Type::arrow(x.ty.clone(), type_of(body));
                let m = self.fresh_meth(ty.clone());
                self.repo.insert(m.clone(), Lambda { param: x.clone(), body: (**body).clone() });
                let e = self.meth_expr(&m)?;
                let ret = self.fresh_ret(ty);
                self.push(Formula::eq(ret.e(), e), "lambda", t)?;
                zero(ret, d, PtsSet::single(m), pt, Q::Zero)
            }
            Term::Proj(s, m) => {
                let o1 = self.tr(m, d, pt, k)?;
                let sort = match &o1.ret.sort {
                    Type::Prod(a, b) => (**if *s == Side::First { a } else { b }).clone(),
                    _ => type_of(t),
                };
                let ret = self.fresh_ret(sort.clone());
                let body = Formula::eq(ret.e(), Expr::proj(*s, o1.ret.e()));
                let f = self.guard(&o1.ret, o1.q, &ret, body);
                self.push(f, "proj", t)?;
                let a = match o1.pt {
                    Some(_) => o1.a.proj(*s)?.normalize(&sort),
                    None => PtsSet::empty(),
                };
                zero(ret, o1.d, a, o1.pt, o1.q)
            }
            Term::Assign(r, m) => {
                let o1 = self.tr(m, d, pt, k)?;
                let next = self.bump(r)?;
                let mut d1 = o1.d;
                d1.set(r, self.c.version(r).unwrap());
                let ret = self.fresh_ret(Type::Unit);
                let body = Formula::and([Formula::eq(ret.e(), Expr::Unit), Formula::eq(next.e(), o1.ret.e())]);
                let f = self.guard(&o1.ret, o1.q, &ret, body);
                self.push(f, "assign", t)?;
                let pt = o1.pt.map(|mut pt| {
                    pt.set_ref(r, o1.a.normalize(&r.ty));
                    pt
                });
                zero(ret, d1, PtsSet::empty(), pt, o1.q)
            }
            Term::BinOp(op, a, b) => {
                let o1 = self.tr(a, d, pt, k)?;
                let o2 = self.tr(b, o1.d, o1.pt, k)?;
                let ret = self.fresh_ret(Type::Int);
                let body = Formula::eq(ret.e(), Expr::arith(*op, o1.ret.e(), o2.ret.e()));
                let inner = self.guard(&o2.ret, o2.q, &ret, body);
                let f = self.guard(&o1.ret, o1.q, &ret, inner);
                self.push(f, "binop", t)?;
                zero(ret, o2.d, PtsSet::empty(), o2.pt, o1.q + o2.q)
            }
            Term::Pair(a, b) => {
                let o1 = self.tr(a, d, pt, k)?;
                let o2 = self.tr(b, o1.d, o1.pt, k)?;
                let sort = Type::prod(o1.ret.sort.clone(), o2.ret.sort.clone());
                let ret = self.fresh_ret(sort.clone());
                let body = Formula::eq(ret.e(), Expr::pair(o1.ret.e(), o2.ret.e()));
                let inner = self.guard(&o2.ret, o2.q, &ret, body);
                let f = self.guard(&o1.ret, o1.q, &ret, inner);
                self.push(f, "pair", t)?;
                let a = PtsSet::pair(o1.a, o2.a).normalize(&sort);
                zero(ret, o2.d, a, o2.pt, o1.q + o2.q)
            }
            Term::Let(x, m, n) => {
                let o1 = self.tr(m, d, pt, k)?;
                let body = n.subst(x, &as_var(&o1.ret));
                let pt1 = o1.pt.map(|mut pt| {
                    pt.set_var(&o1.ret.name, o1.a.clone());
                    pt
                });
                let o2 = self.tr(&body, o1.d, pt1, k)?;
                let ret = self.fresh_ret(o2.ret.sort.clone());
                let inner = self.guard(&o2.ret, o2.q, &ret, Formula::eq(ret.e(), o2.ret.e()));
                let f = self.guard(&o1.ret, o1.q, &ret, inner);
                self.push(f, "let", t)?;
                zero(ret, o2.d, o2.a, o2.pt, o1.q + o2.q)
            }
            Term::Letrec(f, x, body, cont) => {
                let m = self.fresh_meth(f.ty.clone());
                let fv = self.fresh_ret(f.ty.clone());
                let fterm = as_var(&fv);
                self.repo.insert(m.clone(), Lambda { param: x.clone(), body: body.subst(f, &fterm) });
                let e = self.meth_expr(&m)?;
                self.push(Formula::eq(fv.e(), e), "letrec", t)?;
                let pt = pt.map(|mut pt| {
                    pt.set_var(&fv.name, PtsSet::single(m));
                    pt
                });
                self.tr(&cont.subst(f, &fterm), d, pt, k)
            }
            Term::AppMeth(m, arg) => {
                let o1 = self.tr(arg, d, pt, k)?;
                let lam = self.repo.get(m).cloned().ok_or_else(|| TranslateError::UnknownMethod(m.name.to_string()))?;
                let body = lam.body.subst(&lam.param, &as_var(&o1.ret));
                let pt1 = o1.pt.map(|mut pt| {
                    pt.set_var(&o1.ret.name, o1.a.clone());
                    pt
                });
                self.stats.known_calls += 1;
                let o2 = self.tr(&body, o1.d, pt1, k.dec())?;
                let ret = self.fresh_ret(o2.ret.sort.clone());
                let inner = self.guard(&o2.ret, o2.q, &ret, Formula::eq(ret.e(), o2.ret.e()));
                let f = self.guard(&o1.ret, o1.q, &ret, inner);
                self.push(f, "call", t)?;
                zero(ret, o2.d, o2.a, o2.pt, o1.q + o2.q)
            }
            Term::If(cond, then, els) => {
                let ob = self.tr(cond, d, pt, k)?;
                let o0 = self.tr(els, ob.d.clone(), ob.pt.clone(), k)?;
                let o1 = self.tr(then, ob.d, ob.pt, k)?;
                let c2 = self.bump_all()?;
                let ret = self.fresh_ret(o0.ret.sort.clone());
                let join0 = Formula::and(
                    std::iter::once(Formula::eq(ret.e(), o0.ret.e())).chain(Self::joins(&c2, &o0.d)),
                );
                let join1 = Formula::and(
                    std::iter::once(Formula::eq(ret.e(), o1.ret.e())).chain(Self::joins(&c2, &o1.d)),
                );
                let psi0 = Formula::implies(
                    Formula::eq(ob.ret.e(), Expr::Int(0)),
                    self.guard(&o0.ret, o0.q, &ret, join0),
                );
                let psi1 = Formula::implies(
                    Formula::NotEq(ob.ret.e(), Expr::Int(0)),
                    self.guard(&o1.ret, o1.q, &ret, join1),
                );
                let f = self.guard(&ob.ret, ob.q, &ret, Formula::And(vec![psi0, psi1]));
                self.push(f, "if", t)?;
                let (a, pt) = match (o0.pt, o1.pt) {
                    (Some(p0), Some(p1)) => (pts_union(&o0.a, &o1.a)?.normalize(&ret.sort), Some(pt_merge([&p0, &p1])?)),
                    _ => (PtsSet::empty(), None),
                };
                zero(ret, c2, a, pt, ob.q + o0.q + o1.q)
            }
            Term::AppVar(x, arg) => {
                let Some((_, cod)) = x.ty.as_arrow() else {
                    return Err(TranslateError::NotAFunction(x.name.to_string()));
                };
                let cod = cod.clone();
                let o0 = self.tr(arg, d, pt, k)?;
                let candidates = self.candidates(x, &o0.pt)?;
                self.stats.sites.push(AppSite { depth: depth(self.k0, k), candidates: candidates.len() });
                self.stats.branches += candidates.len();
                if candidates.is_empty() {
                    let ret = self.fresh_ret(cod.clone());
                    self.push(Formula::eq(ret.e(), Expr::Nil(cod)), "dead application", t)?;
                    return zero(ret, o0.d, PtsSet::empty(), o0.pt, o0.q + Q::Nil);
                }
                let pt0 = o0.pt.map(|mut pt| {
                    pt.set_var(&o0.ret.name, o0.a.clone());
                    pt
                });
                let mut outs = Vec::with_capacity(candidates.len());
                for m in &candidates {
                    let lam = self.repo.get(m).cloned().expect("candidate in repository");
                    let body = lam.body.subst(&lam.param, &as_var(&o0.ret));
                    outs.push((m.clone(), self.tr(&body, o0.d.clone(), pt0.clone(), k.dec())?));
                }
                let cn = self.bump_all()?;
                let ret = self.fresh_ret(cod.clone());
                let xv = LogVar::new(x.name.clone(), x.ty.clone());
                let mut psi = Vec::with_capacity(outs.len());
                let mut q = o0.q;
                for (m, oi) in &outs {
                    let pick = Formula::eq(xv.e(), self.meth_expr(m)?);
                    let result = self.guard(&oi.ret, oi.q, &ret, Formula::eq(ret.e(), oi.ret.e()));
                    let body = Formula::and(std::iter::once(result).chain(Self::joins(&cn, &oi.d)));
                    psi.push(Formula::implies(pick, body));
                    q = q + oi.q;
                }
                let f = self.guard(&o0.ret, o0.q, &ret, Formula::And(psi));
                self.push(f, "apply", t)?;
                let (a, pt) = if pt0.is_some() {
                    let mut a = PtsSet::empty();
                    for (_, oi) in &outs {
                        a = pts_union(&a, &oi.a)?;
                    }
                    let maps: Vec<&PtMap> = outs.iter().filter_map(|(_, o)| o.pt.as_ref()).collect();
                    (a.normalize(&cod), Some(pt_merge(maps)?))
                } else {
                    (PtsSet::empty(), None)
                };
                zero(ret, cn, a, pt, q)
            }
        }
    }

    /// Methods `x` may denote, in repository order: every method of the
    /// right type, or `pt(x)` in the optimised translation.
    fn candidates(&self, x: &Var, pt: &Option<PtMap>) -> Result<Vec<Meth>, TranslateError> {
        let all = self.repo.keys().filter(|m| m.ty == x.ty);
        let Some(pt) = pt else {
            return Ok(all.cloned().collect());
        };
        let names = pt.var(&x.name)?.names()?;
        for m in names {
            if m.ty != x.ty || !self.repo.contains_key(m) {
                return Err(TranslateError::PtNotRefinement {
                    var: x.name.to_string(),
                    meth: m.name.to_string(),
                    ty: x.ty.clone(),
                });
            }
        }
        Ok(all.filter(|m| names.contains(*m)).cloned().collect())
    }
}

fn depth(k0: Bound, k: Bound) -> u32 {
    match (k0.0, k.0) {
        (Some(a), Some(b)) => a.saturating_sub(b),
        _ => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::load;

    fn tr(src: &str, k: u32) -> TranslationResult {
        let c = load(src, Bound::k(k)).unwrap();
        translate(&build_initial(&c).unwrap(), &TranslateOptions::default()).unwrap()
    }

    #[test]
    fn value_is_one_clause() {
        let r = tr("Main () :(Int): 5", 3);
        assert_eq!(r.phi, vec![Formula::eq(r.ret.e(), Expr::Int(5))]);
        assert_eq!(r.ret.name.as_ref(), "ret1");
    }

    #[test]
    fn nil_bound_is_one_clause() {
        let c = load("Main () :(Int): 5", Bound::k(0)).unwrap();
        let mut sc = build_initial(&c).unwrap();
        sc.bound = Bound::NIL;
        let r = translate(&sc, &TranslateOptions::default()).unwrap();
        assert_eq!(r.phi, vec![Formula::eq(r.ret.e(), Expr::Nil(Type::Int))]);
    }

    #[test]
    fn store_preconditions() {
        let r = tr("Refs: r :(Int) = 0; Main () :(Int): !r", 1);
        assert_eq!(r.phi[0], Formula::eq(LogVar::new("r_0", Type::Int).e(), Expr::Int(0)));
        assert!(r.decls.iter().any(|v| &*v.name == "r_0"));
    }

    #[test]
    fn assignment_bumps_version() {
        let r = tr("Refs: r :(Int) = 0; Main () :(Unit): r := 1", 1);
        assert_eq!(r.c.version(&Ref::new("r", Type::Int)), Some(1));
        assert_eq!(r.d.version(&Ref::new("r", Type::Int)), Some(1));
    }

    #[test]
    fn empty_candidates_give_nil() {
        let src = "Main (n:Int) :(Int): let f :(Int -> Int) = (fail : Int -> Int) in f n";
        let r = tr(src, 2);
        assert_eq!(r.stats.sites, vec![AppSite { depth: 0, candidates: 0 }]);
        assert!(r.phi.iter().any(|f| matches!(f, Formula::Eq(_, Expr::Nil(_)))));
    }

    #[test]
    fn base_branches_over_all_methods_of_type() {
        let src = "Methods: a (x:Int) :(Int) = x; b (x:Int) :(Int) = x + 1; c (u:Unit) :(Unit) = u;
                   Main (n:Int) :(Int): let f :(Int -> Int) = a in f n";
        let r = tr(src, 2);
        assert_eq!(r.stats.sites, vec![AppSite { depth: 0, candidates: 2 }]);
    }

    #[test]
    fn translation_is_deterministic() {
        let src = "Refs: r :(Int) = 0; Main (n:Int) :(Unit): letrec f :(Int -> Unit) = fun (x:Int) -> if x then (r++; f (x - 1)) else skip in f n";
        let a = tr(src, 3);
        let b = tr(src, 3);
        let q = Formula::eq(a.ret.e(), Expr::Fail(Type::Unit));
        assert_eq!(a.smtlib(&q).unwrap(), b.smtlib(&q).unwrap());
    }

    #[test]
    fn origins_are_parallel_to_clauses() {
        let c = load("Main (n:Int) :(Int): n + 1", Bound::k(1)).unwrap();
        let opts = TranslateOptions { origins: true, ..Default::default() };
        let r = translate(&build_initial(&c).unwrap(), &opts).unwrap();
        assert_eq!(r.origins.as_ref().unwrap().len(), r.phi.len());
        assert!(r.dump_clauses().contains("; binop: n + 1"));
    }

    #[test]
    fn higher_order_inputs_are_rejected() {
        let mut c = load("Main (n:Int) :(Int): n", Bound::k(1)).unwrap();
        let f = Var::new("f", Type::arrow(Type::Int, Type::Int));
        c.term = Term::app_var(f.clone(), Term::Int(1));
        c.inputs.push(f);
        assert!(matches!(build_initial(&c), Err(TranslateError::Config(_) | TranslateError::NonGroundFreeVar(..))));
    }
}

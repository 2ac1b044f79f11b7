//! The checking procedure: preconditions, translation, query, solver,
//! model, and iteration over the bound.

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use crate::formula::{Expr, Formula, FormulaError, LogVar};
use crate::interp::{eval, Answer, EvalError, NameGen, Outcome};
use crate::pointsto::{initial_pt, translate_opt};
use crate::syntax::{BinOp, Config, Ref, Side, Type, Value};
use crate::translate::{
    build_initial, translate, value_expr, with_big_stack, TranslateError, TranslateOptions, TranslationResult,
    TranslationStats,
};

pub mod model;
pub mod sexpr;
pub mod solver;

pub use model::{parse_model, ModelParseError, ModelValue};
pub use solver::{run_solver, RawResult, SatStatus, SolverConfig, SolverError};

/// A property of a ground value.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Predicate {
    /// `v op c` for an integer `v`; `op` is a comparison.
    Compare(BinOp, i64),
    Equals(Value),
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Compare(op, c) => write!(f, "{} {c}", op.symbol()),
            Predicate::Equals(v) => write!(f, "== {v}"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CheckMode {
    /// Is `fail` reachable?
    FailReach,
    /// Is the bound reachable?
    NilReach,
    /// Can the program return a value violating the predicate?
    ReturnProp(Predicate),
    /// Can the program finish with some reference violating its predicate?
    StoreProps(Vec<(Ref, Predicate)>),
}

impl fmt::Display for CheckMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckMode::FailReach => f.write_str("fail"),
            CheckMode::NilReach => f.write_str("nil"),
            CheckMode::ReturnProp(p) => write!(f, "return {p}"),
            CheckMode::StoreProps(ps) => {
                f.write_str("store")?;
                for (r, p) in ps {
                    write!(f, " {r} {p}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Model(#[from] ModelParseError),
    #[error("invalid property: {0}")]
    Mode(String),
    #[error("replay failed: {0}")]
    Eval(#[from] EvalError),
}

#[derive(Clone, Debug)]
pub struct CheckOptions {
    /// Restrict variable applications with the points-to analysis.
    pub opt: bool,
    pub translate: TranslateOptions,
    pub solver: SolverConfig,
    /// Extra constraints on the inputs, e.g. from [`input_cmp`].
    pub assume: Vec<Formula>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            opt: true,
            translate: TranslateOptions::default(),
            solver: SolverConfig::default(),
            assume: Vec::new(),
        }
    }
}

/// Witness for a satisfiable query: values of the inputs and of `ret`.
/// An input missing from the model is unconstrained and reported as `None`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Counterexample {
    pub inputs: Vec<(String, Option<ModelValue>)>,
    pub ret: Option<ModelValue>,
}

impl Counterexample {
    /// The inputs as source values, with unconstrained ones set to 0-like
    /// defaults of their type.
    pub fn assignment(&self, c: &Config) -> BTreeMap<crate::syntax::Var, Value> {
        let mut out = BTreeMap::new();
        for (name, v) in &self.inputs {
            if let Some(x) = c.input(name) {
                let v = v.as_ref().and_then(|v| v.to_value(&c.repo)).unwrap_or_else(|| default_value(&x.ty));
                out.insert(x.clone(), v);
            }
        }
        out
    }

    pub fn input(&self, name: &str) -> Option<&ModelValue> {
        self.inputs.iter().find(|(n, _)| n == name).and_then(|(_, v)| v.as_ref())
    }
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inputs.is_empty() {
            return f.write_str("(no inputs)");
        }
        for (i, (n, v)) in self.inputs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match v {
                Some(v) => write!(f, "{n} = {v}")?,
                None => write!(f, "{n} unconstrained")?,
            }
        }
        Ok(())
    }
}

fn default_value(ty: &Type) -> Value {
    match ty {
        Type::Unit => Value::Unit,
        Type::Prod(a, b) => Value::pair(default_value(a), default_value(b)),
        _ => Value::Int(0),
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Verdict {
    Sat(Counterexample),
    Unsat,
    Unknown(String),
}

impl Verdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, Verdict::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, Verdict::Unsat)
    }
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub verdict: Verdict,
    pub stats: TranslationStats,
    pub translate_time: Duration,
    pub solve_time: Duration,
}

/// Translation of `c` at its own bound, base or optimised.
pub fn translate_config(c: &Config, opt: bool, topts: &TranslateOptions) -> Result<TranslationResult, TranslateError> {
    with_big_stack(|| {
        let sc = build_initial(c)?;
        if opt {
            translate_opt(&sc, initial_pt(&sc, &c.store), topts).map(|(r, _, _)| r)
        } else {
            translate(&sc, topts)
        }
    })
}

fn value_and(e: Expr, sort: &Type, out: &mut Vec<Formula>) {
    out.push(Formula::NotEq(e.clone(), Expr::Fail(sort.clone())));
    out.push(Formula::NotEq(e.clone(), Expr::Nil(sort.clone())));
    if let Type::Prod(a, b) = sort {
        value_and(Expr::proj(Side::First, e.clone()), a, out);
        value_and(Expr::proj(Side::Second, e), b, out);
    }
}

/// `e` and all its components are proper values.
pub fn is_proper(e: Expr, sort: &Type) -> Formula {
    let mut out = Vec::new();
    value_and(e, sort, &mut out);
    Formula::and(out)
}

/// Free inputs range over proper values only.
pub fn input_constraints(c: &Config) -> Formula {
    Formula::and(c.inputs.iter().map(|x| is_proper(LogVar::new(x.name.clone(), x.ty.clone()).e(), &x.ty)))
}

fn violates(e: Expr, sort: &Type, p: &Predicate, res: &TranslationResult) -> Result<Formula, CheckError> {
    if !sort.is_ground() {
        return Err(CheckError::Mode(format!("property on non-ground type {sort}")));
    }
    let bad = match p {
        Predicate::Compare(op, c) => {
            if *sort != Type::Int {
                return Err(CheckError::Mode(format!("integer comparison on a value of type {sort}")));
            }
            if !matches!(op, BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge) {
                return Err(CheckError::Mode(format!("`{}` is not a comparison", op.symbol())));
            }
            Formula::not(Formula::IntCmp(*op, e.clone(), Expr::Int(*c)))
        }
        Predicate::Equals(v) => {
            if v.ty() != *sort {
                return Err(CheckError::Mode(format!("{v} does not have type {sort}")));
            }
            Formula::NotEq(e.clone(), value_expr(v, &res.repo)?)
        }
    };
    Ok(Formula::and([is_proper(e, sort), bad]))
}

/// The query conjoined to the translation for `mode`.
pub fn query_formula(res: &TranslationResult, mode: &CheckMode) -> Result<Formula, CheckError> {
    let ret = &res.ret;
    match mode {
        CheckMode::FailReach => Ok(Formula::eq(ret.e(), Expr::Fail(ret.sort.clone()))),
        CheckMode::NilReach => Ok(Formula::eq(ret.e(), Expr::Nil(ret.sort.clone()))),
        CheckMode::ReturnProp(p) => violates(ret.e(), &ret.sort, p, res),
        CheckMode::StoreProps(ps) => {
            if ps.is_empty() {
                return Err(CheckError::Mode("no store property given".into()));
            }
            let mut any = Vec::new();
            for (r, p) in ps {
                let v = res.d.var(r).ok_or_else(|| CheckError::Mode(format!("unknown reference `{}`", r.name)))?;
                any.push(violates(v.e(), &v.sort, p, res)?);
            }
            Ok(Formula::and([is_proper(ret.e(), &ret.sort), Formula::Or(any)]))
        }
    }
}

/// `x op c` for the input named `x`.
pub fn input_cmp(c: &Config, name: &str, op: BinOp, k: i64) -> Result<Formula, CheckError> {
    let x = c.input(name).ok_or_else(|| CheckError::Mode(format!("no input named `{name}`")))?;
    if x.ty != Type::Int {
        return Err(CheckError::Mode(format!("input `{name}` is not an integer")));
    }
    Ok(Formula::IntCmp(op, LogVar::new(x.name.clone(), x.ty.clone()).e(), Expr::Int(k)))
}

/// `x = v` for every input in `sigma`.
pub fn input_assignment(c: &Config, sigma: &BTreeMap<String, Value>) -> Result<Formula, CheckError> {
    let mut out = Vec::new();
    for (name, v) in sigma {
        let x = c.input(name).ok_or_else(|| CheckError::Mode(format!("no input named `{name}`")))?;
        if v.ty() != x.ty {
            return Err(CheckError::Mode(format!("{v} does not have type {}", x.ty)));
        }
        out.push(Formula::eq(LogVar::new(x.name.clone(), x.ty.clone()).e(), value_expr(v, &c.repo)?));
    }
    Ok(Formula::and(out))
}

fn counterexample(raw: &RawResult, res: &TranslationResult, c: &Config) -> Result<Counterexample, CheckError> {
    let vals = match &raw.model {
        Some(m) => parse_model(m)?,
        None => BTreeMap::new(),
    };
    Ok(Counterexample {
        inputs: c.inputs.iter().map(|x| (x.name.to_string(), vals.get(x.name.as_ref()).cloned())).collect(),
        ret: vals.get(res.ret.name.as_ref()).cloned(),
    })
}

fn verdict(raw: &RawResult, res: &TranslationResult, c: &Config) -> Result<Verdict, CheckError> {
    Ok(match raw.status {
        SatStatus::Sat => Verdict::Sat(counterexample(raw, res, c)?),
        SatStatus::Unsat => Verdict::Unsat,
        SatStatus::Unknown => Verdict::Unknown("solver returned unknown".into()),
    })
}

/// Solves each query (conjoined with the input constraints and
/// assumptions) against one translation, in a single solver process.
pub fn solve_queries(
    res: &TranslationResult,
    c: &Config,
    queries: &[Formula],
    opts: &CheckOptions,
) -> Result<(Vec<Verdict>, Duration), CheckError> {
    let wf = input_constraints(c);
    let full: Vec<Formula> = queries
        .iter()
        .map(|q| Formula::and(std::iter::once(wf.clone()).chain(opts.assume.iter().cloned()).chain([q.clone()])))
        .collect();
    let smt = if full.len() == 1 { res.smtlib(&full[0])? } else { res.smtlib_queries(&full)? };
    let run = run_solver(&smt, &opts.solver)?;
    if run.results.len() != queries.len() {
        return Err(SolverError::Protocol(format!("{} answers for {} queries", run.results.len(), queries.len())).into());
    }
    let verdicts = run.results.iter().map(|r| verdict(r, res, c)).collect::<Result<_, _>>()?;
    Ok((verdicts, run.elapsed))
}

/// The emitted SMT-LIB problem for `mode`, without running a solver.
pub fn emit(c: &Config, mode: &CheckMode, opts: &CheckOptions) -> Result<String, CheckError> {
    let res = translate_config(c, opts.opt, &opts.translate)?;
    let q = query_formula(&res, mode)?;
    let wf = input_constraints(c);
    Ok(res.smtlib(&Formula::and(std::iter::once(wf).chain(opts.assume.iter().cloned()).chain([q])))?)
}

/// Checks one property of `c` at its bound.
pub fn check(c: &Config, mode: &CheckMode, opts: &CheckOptions) -> Result<CheckReport, CheckError> {
    let start = Instant::now();
    let res = translate_config(c, opts.opt, &opts.translate)?;
    let translate_time = start.elapsed();
    let q = query_formula(&res, mode)?;
    let (mut vs, solve_time) = solve_queries(&res, c, &[q], opts)?;
    Ok(CheckReport { verdict: vs.pop().unwrap(), stats: res.stats, translate_time, solve_time })
}

/// Checks several properties against one translation.
pub fn check_batch(c: &Config, modes: &[CheckMode], opts: &CheckOptions) -> Result<Vec<Verdict>, CheckError> {
    let res = translate_config(c, opts.opt, &opts.translate)?;
    let qs = modes.iter().map(|m| query_formula(&res, m)).collect::<Result<Vec<_>, _>>()?;
    Ok(solve_queries(&res, c, &qs, opts)?.0)
}

/// Smallest value of the integer input `name` in `[lo, hi]` for which the
/// query is satisfiable, by binary search over added bounds `name ≤ c`.
pub fn minimize(
    c: &Config,
    mode: &CheckMode,
    name: &str,
    lo: i64,
    hi: i64,
    opts: &CheckOptions,
) -> Result<Option<i64>, CheckError> {
    let res = translate_config(c, opts.opt, &opts.translate)?;
    let q = query_formula(&res, mode)?;
    let floor = input_cmp(c, name, BinOp::Ge, lo)?;
    let probe = |upper: i64| -> Result<Verdict, CheckError> {
        let f = Formula::and([q.clone(), floor.clone(), input_cmp(c, name, BinOp::Le, upper)?]);
        Ok(solve_queries(&res, c, &[f], opts)?.0.pop().unwrap())
    };
    let (mut lo_ok, mut hi_ok) = (lo, hi);
    match probe(hi)? {
        Verdict::Sat(cex) => {
            if let Some(ModelValue::Int(v)) = cex.input(name) {
                hi_ok = *v;
            }
        }
        Verdict::Unsat => return Ok(None),
        Verdict::Unknown(r) => return Err(SolverError::Protocol(format!("unknown during minimisation: {r}")).into()),
    }
    // Invariant: sat with bound hi_ok, unsat with bound lo_ok - 1.
    while lo_ok < hi_ok {
        let mid = lo_ok + (hi_ok - lo_ok) / 2;
        match probe(mid)? {
            Verdict::Sat(cex) => {
                hi_ok = match cex.input(name) {
                    Some(ModelValue::Int(v)) if *v <= mid => *v,
                    _ => mid,
                }
            }
            Verdict::Unsat => lo_ok = mid + 1,
            Verdict::Unknown(r) => {
                return Err(SolverError::Protocol(format!("unknown during minimisation: {r}")).into())
            }
        }
    }
    Ok(Some(hi_ok))
}

/// Runs the interpreter on `c` with the counterexample's inputs.
pub fn replay(c: &Config, cex: &Counterexample) -> Result<Outcome, CheckError> {
    let closed = c.close(&cex.assignment(c));
    Ok(with_big_stack(|| eval(&closed, &mut NameGen::new(0)))?)
}

/// Answer of the interpreter expected for a counterexample of `mode`.
pub fn replay_agrees(mode: &CheckMode, answer: &Answer) -> bool {
    match mode {
        CheckMode::FailReach => *answer == Answer::Fail,
        CheckMode::NilReach => *answer == Answer::Nil,
        _ => matches!(answer, Answer::Val(_)),
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum IterateVerdict {
    /// `fail` reachable at bound `k`.
    Counterexample { k: u32, cex: Counterexample },
    /// Neither `fail` nor `nil` reachable at bound `k`.
    Verified { k: u32 },
    /// `nil` still reachable at the last bound tried.
    BoundReached { kmax: u32 },
    Unknown { k: u32, reason: String },
}

#[derive(Clone, Debug)]
pub struct IterateStep {
    pub k: u32,
    pub fail: Verdict,
    pub nil: Option<Verdict>,
    pub seconds: f64,
    pub stats: TranslationStats,
}

#[derive(Clone, Debug)]
pub struct IterateReport {
    pub verdict: IterateVerdict,
    pub steps: Vec<IterateStep>,
}

/// For `k = 0..=kmax`: stop at the first counterexample, or when the
/// bound is no longer reachable.
pub fn bound_iterate(c: &Config, kmax: u32, opts: &CheckOptions) -> Result<IterateReport, CheckError> {
    let mut steps = Vec::new();
    for k in 0..=kmax {
        let start = Instant::now();
        let ck = c.with_bound(k);
        let res = translate_config(&ck, opts.opt, &opts.translate)?;
        let fq = query_formula(&res, &CheckMode::FailReach)?;
        let nq = query_formula(&res, &CheckMode::NilReach)?;
        let (vs, _) = solve_queries(&res, &ck, &[fq, nq], opts)?;
        let [fail, nil]: [Verdict; 2] = vs.try_into().expect("two answers");
        let seconds = start.elapsed().as_secs_f64();
        let stats = res.stats;
        let verdict = match (&fail, &nil) {
            (Verdict::Sat(cex), _) => Some(IterateVerdict::Counterexample { k, cex: cex.clone() }),
            (Verdict::Unknown(r), _) => Some(IterateVerdict::Unknown { k, reason: r.clone() }),
            (Verdict::Unsat, Verdict::Unsat) => Some(IterateVerdict::Verified { k }),
            (Verdict::Unsat, Verdict::Unknown(r)) => Some(IterateVerdict::Unknown { k, reason: r.clone() }),
            (Verdict::Unsat, Verdict::Sat(_)) => None,
        };
        steps.push(IterateStep { k, fail, nil: Some(nil), seconds, stats });
        if let Some(verdict) = verdict {
            return Ok(IterateReport { verdict, steps });
        }
    }
    Ok(IterateReport { verdict: IterateVerdict::BoundReached { kmax }, steps })
}

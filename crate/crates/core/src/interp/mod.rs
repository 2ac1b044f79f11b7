//! Bounded big-step interpreter, the ground truth for differential tests.

use std::collections::BTreeSet;
use std::fmt::{self, Write};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::syntax::{typecheck, ArithError, Bound, Config, Lambda, Meth, Repo, Store, Term, Type, Value};

pub mod nominal;

pub use nominal::{apply_permutation, nominally_equiv, Nominal, Permutation, PermutationError};

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Answer {
    Val(Value),
    Fail,
    Nil,
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Answer::Val(v) => write!(f, "{v}"),
            Answer::Fail => f.write_str("fail"),
            Answer::Nil => f.write_str("nil"),
        }
    }
}

/// Result of evaluation together with the repository and store at the
/// point evaluation finished or aborted.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Outcome {
    pub answer: Answer,
    pub repo: Repo,
    pub store: Store,
}

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum EvalError {
    #[error("stuck: {0}")]
    StuckState(String),
    #[error("{0} while evaluating `{1}`")]
    Arith(ArithError, String),
    #[error("evaluation exceeded {0} steps")]
    FuelExhausted(u64),
}

/// Deterministic supply of fresh method names, reproducible from a seed.
#[derive(Clone, Debug)]
pub struct NameGen {
    rng: ChaCha8Rng,
    issued: BTreeSet<Arc<str>>,
}

impl NameGen {
    pub fn new(seed: u64) -> Self {
        NameGen { rng: ChaCha8Rng::seed_from_u64(seed), issued: BTreeSet::new() }
    }

    /// A name of type `ty` that is neither in `repo` nor issued before.
    pub fn fresh(&mut self, ty: &Type, repo: &Repo) -> Meth {
        loop {
            let name: Arc<str> = format!("lam#{:08x}", self.rng.gen::<u32>()).into();
            if self.issued.contains(&name) || repo.keys().any(|m| m.name == name) {
                continue;
            }
            self.issued.insert(name.clone());
            return Meth::new(name, ty.clone());
        }
    }
}

#[derive(Clone, Debug)]
pub struct EvalOptions {
    pub fuel: u64,
    pub trace: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { fuel: 5_000_000, trace: false }
    }
}

#[derive(Clone, Debug, Default)]
pub struct EvalStats {
    pub steps: u64,
    /// Deepest chain of nested method applications entered.
    pub max_call_depth: u32,
    /// Derivation trace, one rule per line, indented by nesting.
    pub trace: Option<String>,
}

/// Evaluates a closed configuration.
pub fn eval(c: &Config, g: &mut NameGen) -> Result<Outcome, EvalError> {
    eval_with(c, g, &EvalOptions::default()).map(|(o, _)| o)
}

pub fn eval_with(c: &Config, g: &mut NameGen, opts: &EvalOptions) -> Result<(Outcome, EvalStats), EvalError> {
    let mut ev = Evaluator {
        repo: c.repo.clone(),
        store: c.store.clone(),
        gen: g,
        fuel: opts.fuel,
        stats: EvalStats::default(),
        trace: opts.trace.then(String::new),
    };
    let answer = ev.eval(&c.term, c.bound, 0, 0)?;
    let mut stats = ev.stats;
    stats.trace = ev.trace;
    Ok((Outcome { answer, repo: ev.repo, store: ev.store }, stats))
}

struct Evaluator<'g> {
    repo: Repo,
    store: Store,
    gen: &'g mut NameGen,
    fuel: u64,
    stats: EvalStats,
    trace: Option<String>,
}

macro_rules! value {
    ($e:expr) => {
        match $e {
            Answer::Val(v) => v,
            abort => return Ok(abort),
        }
    };
}

impl Evaluator<'_> {
    fn note(&mut self, indent: usize, rule: &str, t: &Term, k: Bound) {
        if let Some(tr) = &mut self.trace {
            let mut s = t.to_string();
            if s.len() > 60 {
                s.truncate(s.char_indices().nth(57).map(|(i, _)| i).unwrap_or(s.len()));
                s.push_str("...");
            }
            let _ = writeln!(tr, "{:indent$}{rule} [k={k}] {s}", "", indent = indent * 2);
        }
    }

    fn eval(&mut self, t: &Term, k: Bound, depth: u32, indent: usize) -> Result<Answer, EvalError> {
        self.stats.steps += 1;
        if self.stats.steps > self.fuel {
            return Err(EvalError::FuelExhausted(self.fuel));
        }
        if k.is_nil() {
            self.note(indent, "nil", t, k);
            return Ok(Answer::Nil);
        }
        let ind = indent + 1;
        match t {
            Term::Fail(_) => {
                self.note(indent, "fail", t, k);
                Ok(Answer::Fail)
            }
            Term::Var(x) => Err(EvalError::StuckState(format!("free variable `{x}`"))),
            Term::Meth(_) | Term::Int(_) | Term::Unit | Term::Pair(..) if t.is_value() => {
                self.note(indent, "val", t, k);
                Ok(Answer::Val(Value::from_term(t).expect("checked value")))
            }
            Term::Deref(r) => {
                self.note(indent, "deref", t, k);
                match self.store.get(r) {
                    Some(v) => Ok(Answer::Val(v.clone())),
                    None => Err(EvalError::StuckState(format!("reference `{r}` not in store"))),
                }
            }
            Term::Lambda(x, body) => {
                self.note(indent, "lambda", t, k);
                let cod = typecheck(body).map_err(|e| EvalError::StuckState(e.to_string()))?;
                let m = self.gen.fresh(&Type::arrow(x.ty.clone(), cod), &self.repo);
                self.repo.insert(m.clone(), Lambda { param: x.clone(), body: (**body).clone() });
                Ok(Answer::Val(Value::Meth(m)))
            }
            Term::Proj(side, m) => {
                self.note(indent, "proj", t, k);
                match value!(self.eval(m, k, depth, ind)?) {
                    Value::Pair(a, b) => Ok(Answer::Val(if side.index() == 1 { *a } else { *b })),
                    v => Err(EvalError::StuckState(format!("projection of non-pair {v}"))),
                }
            }
            Term::Assign(r, m) => {
                self.note(indent, "assign", t, k);
                let v = value!(self.eval(m, k, depth, ind)?);
                self.store.insert(r.clone(), v);
                Ok(Answer::Val(Value::Unit))
            }
            Term::BinOp(op, a, b) => {
                self.note(indent, "op", t, k);
                let x = value!(self.eval(a, k, depth, ind)?);
                let y = value!(self.eval(b, k, depth, ind)?);
                match (x, y) {
                    (Value::Int(i), Value::Int(j)) => {
                        op.apply(i, j).map(|v| Answer::Val(Value::Int(v))).map_err(|e| EvalError::Arith(e, t.to_string()))
                    }
                    (x, y) => Err(EvalError::StuckState(format!("arithmetic on {x} and {y}"))),
                }
            }
            Term::Pair(a, b) => {
                self.note(indent, "pair", t, k);
                let x = value!(self.eval(a, k, depth, ind)?);
                let y = value!(self.eval(b, k, depth, ind)?);
                Ok(Answer::Val(Value::pair(x, y)))
            }
            Term::Let(x, m, n) => {
                self.note(indent, "let", t, k);
                let v = value!(self.eval(m, k, depth, ind)?);
                self.eval(&n.subst(x, &v.to_term()), k, depth, ind)
            }
            Term::AppMeth(m, arg) => {
                self.note(indent, "app", t, k);
                let v = value!(self.eval(arg, k, depth, ind)?);
                let Some(lam) = self.repo.get(m) else {
                    return Err(EvalError::StuckState(format!("method `{m}` not in repository")));
                };
                let body = lam.body.subst(&lam.param, &v.to_term());
                let k1 = k.dec();
                if !k1.is_nil() {
                    self.stats.max_call_depth = self.stats.max_call_depth.max(depth + 1);
                }
                self.eval(&body, k1, depth + 1, ind)
            }
            Term::AppVar(x, _) => Err(EvalError::StuckState(format!("application of free variable `{x}`"))),
            Term::If(c, th, el) => {
                self.note(indent, "if", t, k);
                match value!(self.eval(c, k, depth, ind)?) {
                    Value::Int(0) => self.eval(el, k, depth, ind),
                    Value::Int(_) => self.eval(th, k, depth, ind),
                    v => Err(EvalError::StuckState(format!("condition evaluated to {v}"))),
                }
            }
            Term::Letrec(f, x, body, cont) => {
                self.note(indent, "letrec", t, k);
                let m = self.gen.fresh(&f.ty, &self.repo);
                let mt = Term::Meth(m.clone());
                self.repo.insert(m, Lambda { param: x.clone(), body: body.subst(f, &mt) });
                self.eval(&cont.subst(f, &mt), k, depth, ind)
            }
            Term::Meth(_) | Term::Int(_) | Term::Unit => unreachable!("values handled above"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::load;
    use crate::syntax::{BinOp, Ref};

    fn run(src: &str, k: u32) -> Outcome {
        let c = load(src, Bound::k(k)).unwrap();
        eval(&c, &mut NameGen::new(7)).unwrap()
    }

    const EXAMPLE2: &str = "Refs: r :(Int) = 0;
        Methods: f (x:Int) :(Int) = if x <= 0 then x else (r := !r + x; f (x - 1));
        Main () :(Unit): let y :(Int) = f 3 in assert(!r == 6 || y <> 0)";

    #[test]
    fn literal_needs_no_call() {
        let c = Config { term: Term::Int(7), repo: Repo::new(), store: Store::new(), bound: Bound::k(0), inputs: vec![] };
        let o = eval(&c, &mut NameGen::new(1)).unwrap();
        assert_eq!(o.answer, Answer::Val(Value::Int(7)));
        assert!(o.repo.is_empty() && o.store.is_empty());
    }

    #[test]
    fn nil_bound_aborts_everything() {
        let c = Config { term: Term::Int(7), repo: Repo::new(), store: Store::new(), bound: Bound::NIL, inputs: vec![] };
        assert_eq!(eval(&c, &mut NameGen::new(1)).unwrap().answer, Answer::Nil);
    }

    #[test]
    fn bound_exhaustion_gives_nil() {
        assert_eq!(run(EXAMPLE2, 2).answer, Answer::Nil);
        assert_eq!(run(EXAMPLE2, 6).answer, Answer::Val(Value::Unit));
    }

    #[test]
    fn abort_keeps_store_at_abort_time() {
        let o = run("Refs: r :(Int) = 0; Main () :(Unit): r := 5; assert(0); r := 9", 1);
        assert_eq!(o.answer, Answer::Fail);
        assert_eq!(o.store[&Ref::new("r", Type::Int)], Value::Int(5));
    }

    #[test]
    fn fail_propagates_left_to_right() {
        let o = run("Refs: r :(Int) = 0; Main () :(Int): (fail : Int) + (r := 1; 2)", 1);
        assert_eq!(o.answer, Answer::Fail);
        assert_eq!(o.store[&Ref::new("r", Type::Int)], Value::Int(0));
    }

    #[test]
    fn lambdas_become_fresh_methods() {
        let o = run("Main () :(Int): let g :(Int -> Int) = fun (x:Int) -> x * 2 in g 21", 1);
        assert_eq!(o.answer, Answer::Val(Value::Int(42)));
        assert_eq!(o.repo.len(), 1);
    }

    #[test]
    fn letrec_recursion_is_bounded() {
        let src = "Main () :(Int): letrec f :(Int -> Int) = fun (x:Int) -> if x <= 0 then 0 else x + f (x - 1) in f 3";
        assert_eq!(run(src, 3).answer, Answer::Nil);
        assert_eq!(run(src, 4).answer, Answer::Val(Value::Int(6)));
    }

    #[test]
    fn call_depth_never_exceeds_bound() {
        let c = load(EXAMPLE2, Bound::k(3)).unwrap();
        let (_, st) = eval_with(&c, &mut NameGen::new(0), &EvalOptions::default()).unwrap();
        assert!(st.max_call_depth <= 3);
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let c = Config {
            term: Term::binop(BinOp::Div, Term::Int(1), Term::Int(0)),
            repo: Repo::new(),
            store: Store::new(),
            bound: Bound::k(1),
            inputs: vec![],
        };
        assert!(matches!(eval(&c, &mut NameGen::new(0)), Err(EvalError::Arith(ArithError::DivisionByZero, _))));
    }

    #[test]
    fn fuel_guard_trips() {
        let c = load(EXAMPLE2, Bound::k(6)).unwrap();
        let r = eval_with(&c, &mut NameGen::new(0), &EvalOptions { fuel: 10, trace: false });
        assert_eq!(r.unwrap_err(), EvalError::FuelExhausted(10));
    }

    #[test]
    fn trace_lists_rules() {
        let c = load("Main () :(Int): 1 + 2", Bound::k(0)).unwrap();
        let (_, st) = eval_with(&c, &mut NameGen::new(0), &EvalOptions { trace: true, ..Default::default() }).unwrap();
        let tr = st.trace.unwrap();
        assert!(tr.starts_with("op [k=0]"));
        assert!(tr.contains("\n  val [k=0] 1"));
    }

    #[test]
    fn name_generator_avoids_repository() {
        let mut g = NameGen::new(3);
        let ty = Type::arrow(Type::Int, Type::Int);
        let a = g.fresh(&ty, &Repo::new());
        let mut repo = Repo::new();
        let x = crate::syntax::Var::new("x", Type::Int);
        repo.insert(a.clone(), Lambda { param: x.clone(), body: Term::Var(x) });
        let b = g.fresh(&ty, &repo);
        assert_ne!(a, b);
        assert_eq!(NameGen::new(3).fresh(&ty, &Repo::new()), a);
    }
}

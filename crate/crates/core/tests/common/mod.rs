//! Shared helpers for the integration suites: corpus loading, solver
//! detection and a generator of random well-typed `.bmc` programs.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use horef_bmc::parser::load;
use horef_bmc::syntax::{Bound, Config};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn corpus_program(name: &str, k: u32) -> Config {
    let path = corpus_dir().join(format!("{name}.bmc"));
    let src = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    load(&src, Bound::k(k)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Every corpus program, by name, at bound `k`.
pub fn corpus(k: u32) -> Vec<(String, Config)> {
    horef_bmc::bench::corpus_files(&corpus_dir())
        .unwrap()
        .iter()
        .map(|p| {
            let name = horef_bmc::bench::program_name(p);
            let c = corpus_program(&name, k);
            (name, c)
        })
        .collect()
}

pub fn solver_available() -> bool {
    let z3 = std::env::var("HOREF_BMC_SOLVER").unwrap_or_else(|_| "z3".into());
    std::process::Command::new(z3).arg("-version").output().is_ok()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Ty {
    Int,
    Unit,
    Fun,     // Int -> Int
    Pair,    // Int * Int
    HighFun, // (Int -> Int) -> Int
    Curried, // Int -> Int -> Int
}

impl Ty {
    fn src(self) -> &'static str {
        match self {
            Ty::Int => "Int",
            Ty::Unit => "Unit",
            Ty::Fun => "Int -> Int",
            Ty::Pair => "Int * Int",
            Ty::HighFun => "(Int -> Int) -> Int",
            Ty::Curried => "Int -> Int -> Int",
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            Ty::Int => "i",
            Ty::Unit => "u",
            Ty::Fun => "f",
            Ty::Pair => "p",
            Ty::HighFun => "h",
            Ty::Curried => "c",
        }
    }
}

/// Random well-typed programs over integers, pairs and first- and
/// second-order functions, with an integer reference `ri` and a
/// function reference `rf`. Every name carries its type in its prefix,
/// so names never clash across types.
pub struct ProgramGen {
    rng: ChaCha8Rng,
    fresh: u32,
    env: Vec<(String, Ty)>,
}

impl ProgramGen {
    pub fn new(seed: u64) -> Self {
        ProgramGen { rng: ChaCha8Rng::seed_from_u64(seed), fresh: 0, env: Vec::new() }
    }

    fn fresh(&mut self, t: Ty) -> String {
        self.fresh += 1;
        format!("{}{}", t.prefix(), self.fresh)
    }

    fn pick_var(&mut self, t: Ty) -> Option<String> {
        let vs: Vec<&String> = self.env.iter().filter(|(_, u)| *u == t).map(|(n, _)| n).collect();
        vs.choose(&mut self.rng).map(|s| s.to_string())
    }

    fn with<T>(&mut self, name: &str, t: Ty, f: impl FnOnce(&mut Self) -> T) -> T {
        self.env.push((name.to_string(), t));
        let r = f(self);
        self.env.pop();
        r
    }

    fn small(&mut self) -> String {
        match self.rng.gen_range(-3..=3) {
            v if v < 0 => format!("({v})"),
            v => v.to_string(),
        }
    }

    fn cond(&mut self, d: u32) -> String {
        let a = self.gen(Ty::Int, d);
        let b = self.gen(Ty::Int, d);
        let op = *["<=", "==", "<", "<>"].choose(&mut self.rng).unwrap();
        format!("({a} {op} {b})")
    }

    fn let_(&mut self, t: Ty, d: u32) -> String {
        let bt = *[Ty::Int, Ty::Fun, Ty::Pair, Ty::Unit].choose(&mut self.rng).unwrap();
        let x = self.fresh(bt);
        let m = self.gen(bt, d);
        let body = self.with(&x, bt, |g| g.gen(t, d));
        format!("(let {x} :({}) = {m} in {body})", bt.src())
    }

    fn letrec(&mut self, t: Ty, d: u32) -> String {
        let f = self.fresh(Ty::Fun);
        let x = self.fresh(Ty::Int);
        let base = self.with(&x, Ty::Int, |g| g.gen(Ty::Int, d));
        let step = self.with(&f, Ty::Fun, |g| {
            g.with(&x, Ty::Int, |g| {
                let e = g.gen(Ty::Int, d);
                format!("{e} + {f} ({x} - 1)")
            })
        });
        let cont = self.with(&f, Ty::Fun, |g| g.gen(t, d));
        format!("(letrec {f} ({x}:Int) :(Int) = if {x} <= 0 then {base} else {step} in {cont})")
    }

    fn gen(&mut self, t: Ty, depth: u32) -> String {
        let d = depth.saturating_sub(1);
        let leaf = depth == 0 || self.rng.gen_bool(0.25);
        if !leaf {
            match self.rng.gen_range(0..10) {
                0 => return self.let_(t, d),
                1 if t == Ty::Int || t == Ty::Unit => return self.letrec(t, d),
                2 => {
                    let c = self.cond(d);
                    let a = self.gen(t, d);
                    let b = self.gen(t, d);
                    return format!("(if {c} then {a} else {b})");
                }
                3 => {
                    let s = self.gen(Ty::Unit, d);
                    let e = self.gen(t, d);
                    return format!("({s}; {e})");
                }
                _ => {}
            }
        }
        match t {
            Ty::Int => {
                if leaf {
                    return match self.rng.gen_range(0..4) {
                        0 => self.pick_var(Ty::Int).unwrap_or_else(|| "n".into()),
                        1 => "!ri".into(),
                        2 => "n".into(),
                        _ => self.small(),
                    };
                }
                match self.rng.gen_range(0..7) {
                    0 | 1 => {
                        let f = self.gen(Ty::Fun, d);
                        let a = self.gen(Ty::Int, d);
                        let fv = self.fresh(Ty::Fun);
                        format!("(let {fv} :(Int -> Int) = {f} in {fv} {a})")
                    }
                    2 => {
                        let h = self.gen(Ty::HighFun, d);
                        let f = self.gen(Ty::Fun, d);
                        let hv = self.fresh(Ty::HighFun);
                        format!("(let {hv} :((Int -> Int) -> Int) = {h} in {hv} {f})")
                    }
                    3 => {
                        let c = self.gen(Ty::Curried, d);
                        let a = self.gen(Ty::Int, d);
                        let b = self.gen(Ty::Int, d);
                        let cv = self.fresh(Ty::Curried);
                        format!("(let {cv} :(Int -> Int -> Int) = {c} in {cv} {a} {b})")
                    }
                    4 => {
                        let p = self.gen(Ty::Pair, d);
                        let side = if self.rng.gen_bool(0.5) { "fst" } else { "snd" };
                        format!("({side} {p})")
                    }
                    _ => {
                        let a = self.gen(Ty::Int, d);
                        let b = self.gen(Ty::Int, d);
                        let op = if self.rng.gen_bool(0.5) { "+" } else { "-" };
                        format!("({a} {op} {b})")
                    }
                }
            }
            Ty::Unit => {
                if leaf {
                    return "skip".into();
                }
                match self.rng.gen_range(0..6) {
                    0 | 1 => {
                        let c = self.cond(d);
                        format!("assert {c}")
                    }
                    2 => format!("ri := {}", self.gen(Ty::Int, d)),
                    3 => format!("rf := {}", self.gen(Ty::Fun, d)),
                    4 if self.rng.gen_bool(0.2) => "fail".into(),
                    _ => self.pick_var(Ty::Unit).unwrap_or_else(|| "skip".into()),
                }
            }
            Ty::Fun => {
                if leaf {
                    return match self.rng.gen_range(0..4) {
                        0 => self.pick_var(Ty::Fun).unwrap_or_else(|| "inc".into()),
                        1 => "!rf".into(),
                        2 => "inc".into(),
                        _ => "dec".into(),
                    };
                }
                if self.rng.gen_bool(0.3) {
                    let c = self.gen(Ty::Curried, d);
                    let a = self.gen(Ty::Int, d);
                    let cv = self.fresh(Ty::Curried);
                    return format!("(let {cv} :(Int -> Int -> Int) = {c} in {cv} {a})");
                }
                let x = self.fresh(Ty::Int);
                let body = self.with(&x, Ty::Int, |g| g.gen(Ty::Int, d));
                format!("(fun ({x}:Int) -> {body})")
            }
            Ty::Pair => {
                if leaf {
                    if let Some(p) = self.pick_var(Ty::Pair) {
                        return p;
                    }
                }
                let a = self.gen(Ty::Int, d);
                let b = self.gen(Ty::Int, d);
                format!("({a}, {b})")
            }
            Ty::HighFun => {
                if leaf {
                    if let Some(h) = self.pick_var(Ty::HighFun) {
                        return h;
                    }
                    return "twice0".into();
                }
                let f = self.fresh(Ty::Fun);
                let body = self.with(&f, Ty::Fun, |g| {
                    let a = g.gen(Ty::Int, d);
                    format!("{f} {a}")
                });
                format!("(fun ({f}:Int -> Int) -> {body})")
            }
            Ty::Curried => {
                if leaf {
                    return self.pick_var(Ty::Curried).unwrap_or_else(|| "add".into());
                }
                let x = self.fresh(Ty::Int);
                let y = self.fresh(Ty::Int);
                let body = self.with(&x, Ty::Int, |g| g.with(&y, Ty::Int, |g| g.gen(Ty::Int, d)));
                format!("(fun ({x}:Int) -> fun ({y}:Int) -> {body})")
            }
        }
    }

    /// A complete program with one integer input `n`.
    pub fn program(&mut self, depth: u32) -> String {
        self.fresh = 0;
        self.env.clear();
        let ret = if self.rng.gen_bool(0.5) { Ty::Int } else { Ty::Unit };
        let body = self.gen(ret, depth);
        format!(
            "Refs:\nri :(Int) = 0;\nrf :(Int -> Int) = inc;\n\n\
             Methods:\ninc (a:Int) :(Int) = a + 1;\ndec (a:Int) :(Int) = a - 1;\n\
             add (a:Int) (b:Int) :(Int) = a + b;\ntwice0 (g:Int -> Int) :(Int) = g (g 0);\n\n\
             Main (n:Int) :({}):\n  {body}\n",
            ret.src()
        )
    }
}

/// `count` generated programs that parse and typecheck, from `seed`.
pub fn generated(seed: u64, count: usize, depth: u32) -> Vec<(String, Config)> {
    let mut g = ProgramGen::new(seed);
    let mut out = Vec::new();
    let mut tries = 0;
    while out.len() < count {
        tries += 1;
        assert!(tries < count * 20, "generator produces too many ill-typed programs");
        let src = g.program(depth);
        match load(&src, Bound::k(0)) {
            Ok(c) => out.push((src, c)),
            Err(e) => panic!("generated program rejected: {e}\n{src}"),
        }
    }
    out
}

use std::collections::BTreeMap;

use horef_bmc::checker::{query_formula, solve_queries, translate_config, CheckMode, CheckOptions, Predicate, Verdict};
use horef_bmc::formula::Formula;
use horef_bmc::interp::{eval, Answer, NameGen};
use horef_bmc::syntax::{Type, Value, Var};
use horef_bmc::translate::{with_big_stack, TranslateError};

/// Every assignment of values in `-r..=r` to the integer inputs of `c`.
/// Programs with non-integer inputs get no grid.
pub fn input_grid(c: &Config, r: i64) -> Vec<BTreeMap<Var, Value>> {
    if c.inputs.iter().any(|x| x.ty != Type::Int) {
        return Vec::new();
    }
    let mut out = vec![BTreeMap::new()];
    for x in &c.inputs {
        let mut next = Vec::new();
        for s in &out {
            for v in -r..=r {
                let mut s = s.clone();
                s.insert(x.clone(), Value::Int(v));
                next.push(s);
            }
        }
        out = next;
    }
    out
}

/// One disagreement between the interpreter and the solver.
#[derive(Debug)]
pub struct Mismatch {
    pub program: String,
    pub k: u32,
    pub inputs: String,
    pub interp: String,
    pub query: &'static str,
    pub solver: String,
}

/// Checks `c` at bound `k` on every grid point: `ret = fail` is
/// satisfiable exactly when the interpreter fails, `ret = nil` exactly
/// when it runs out of bound, and a proper result other than the
/// interpreter's value is unsatisfiable. All queries for one bound go to
/// one solver process. A translation over the clause budget in `opts` is
/// reported as skipped.
pub fn differential(name: &str, c: &Config, k: u32, grid: i64, opts: &CheckOptions) -> DiffOutcome {
    let ck = c.with_bound(k);
    let points = input_grid(&ck, grid);
    if points.is_empty() {
        return DiffOutcome::default();
    }
    let res = match translate_config(&ck, opts.opt, &opts.translate) {
        Ok(r) => r,
        Err(TranslateError::TooLarge(_)) => return DiffOutcome { skipped: true, ..DiffOutcome::default() },
        Err(e) => panic!("{name} k={k}: {e}"),
    };
    let fail_q = query_formula(&res, &CheckMode::FailReach).unwrap();
    let nil_q = query_formula(&res, &CheckMode::NilReach).unwrap();
    let mut queries = Vec::new();
    let mut meta = Vec::new();
    for sigma in &points {
        let closed = ck.close(sigma);
        let answer = with_big_stack(|| eval(&closed, &mut NameGen::new(0)))
            .unwrap_or_else(|e| panic!("{name} k={k} {sigma:?}: {e}"))
            .answer;
        let named: BTreeMap<String, Value> = sigma.iter().map(|(x, v)| (x.name.to_string(), v.clone())).collect();
        let fix = horef_bmc::checker::input_assignment(&ck, &named).unwrap();
        let shown = named.iter().map(|(n, v)| format!("{n}={v}")).collect::<Vec<_>>().join(",");
        queries.push(Formula::and([fix.clone(), fail_q.clone()]));
        meta.push((shown.clone(), answer.clone(), "fail", matches!(answer, Answer::Fail)));
        queries.push(Formula::and([fix.clone(), nil_q.clone()]));
        meta.push((shown.clone(), answer.clone(), "nil", matches!(answer, Answer::Nil)));
        if let Answer::Val(v) = &answer {
            if v.ty().is_ground() {
                let q = query_formula(&res, &CheckMode::ReturnProp(Predicate::Equals(v.clone()))).unwrap();
                queries.push(Formula::and([fix, q]));
                meta.push((shown, answer.clone(), "other value", false));
            }
        }
    }
    let (verdicts, _) = solve_queries(&res, &ck, &queries, opts).unwrap_or_else(|e| panic!("{name} k={k}: {e}"));
    let mut bad = Vec::new();
    for ((inputs, answer, query, expect_sat), v) in meta.into_iter().zip(verdicts) {
        let got = match &v {
            Verdict::Sat(_) => Some(true),
            Verdict::Unsat => Some(false),
            Verdict::Unknown(_) => None,
        };
        if got != Some(expect_sat) {
            bad.push(Mismatch {
                program: name.to_string(),
                k,
                inputs,
                interp: answer.to_string(),
                query,
                solver: format!("{v:?}"),
            });
        }
    }
    DiffOutcome { queries: queries.len(), mismatches: bad, skipped: false }
}

#[derive(Debug, Default)]
pub struct DiffOutcome {
    pub queries: usize,
    pub mismatches: Vec<Mismatch>,
    pub skipped: bool,
}

/// `differential` over every program and every bound up to `kmax`, in
/// parallel. Returns (queries, skipped translations, mismatches).
pub fn differential_all(programs: &[(String, Config)], kmax: u32, opts: &CheckOptions) -> (usize, usize, Vec<Mismatch>) {
    use rayon::prelude::*;
    let results: Vec<DiffOutcome> = programs
        .par_iter()
        .flat_map_iter(|(name, c)| (0..=kmax).map(move |k| (name, c, k)))
        .map(|(name, c, k)| differential(name, c, k, 8, opts))
        .collect();
    let queries = results.iter().map(|r| r.queries).sum();
    let skipped = results.iter().filter(|r| r.skipped).count();
    (queries, skipped, results.into_iter().flat_map(|r| r.mismatches).collect())
}

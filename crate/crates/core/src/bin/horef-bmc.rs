//! `horef-bmc`: bounded model checking of `.bmc` programs.
//!
//! Exit codes: 0 verified or unsat, 1 counterexample, 2 bound reached or
//! unknown, 3 error.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use horef_bmc::bench::{bench_files, corpus_files, summary, write_csv, BenchOptions};
use horef_bmc::checker::{
    bound_iterate, check, emit, input_assignment, input_cmp, minimize, replay, translate_config, CheckMode,
    CheckOptions, IterateVerdict, Predicate, SolverConfig, Verdict,
};
use horef_bmc::interp::{eval_with, EvalOptions, NameGen};
use horef_bmc::parser::{load, parse_value};
use horef_bmc::pointsto::{initial_pt, translate_opt};
use horef_bmc::syntax::{BinOp, Bound, Config, Ref, Type, Value};
use horef_bmc::translate::{build_initial, with_big_stack, TranslateOptions};

#[derive(Parser)]
#[command(name = "horef-bmc", version, about = "Bounded model checker for higher-order programs with references")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check one property at one bound.
    Check(CheckArgs),
    /// Raise the bound until a counterexample is found or the bound is no longer reachable.
    Iterate(IterateArgs),
    /// Run every program in a directory at every bound, with and without the points-to analysis.
    Bench(BenchArgs),
    /// Print the SMT-LIB problem without solving it.
    DumpSmt(DumpArgs),
    /// Evaluate a program with the reference interpreter.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

impl OnOff {
    fn on(self) -> bool {
        matches!(self, OnOff::On)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Fail,
    Nil,
    Return,
    Store,
}

#[derive(Args, Clone)]
struct Common {
    /// Restrict variable applications to their points-to sets.
    #[arg(long, value_enum, default_value = "on")]
    opt: OnOff,
    /// Emit only the fail/nil propagation clauses that can fire.
    #[arg(long, value_enum, default_value = "on")]
    prune: OnOff,
    /// Solver executable; defaults to $HOREF_BMC_SOLVER or `z3`.
    #[arg(long)]
    solver: Option<PathBuf>,
    /// Per-query timeout in seconds.
    #[arg(long, default_value_t = 10.0)]
    timeout: f64,
    /// Keep the emitted .smt2 files in this directory.
    #[arg(long)]
    keep_files: Option<PathBuf>,
    /// Constraint on an input, e.g. `n >= 0`. Repeatable.
    #[arg(long = "assume", value_name = "CONSTRAINT")]
    assume: Vec<String>,
    /// Fix an input, e.g. `n=3`. Repeatable.
    #[arg(long = "input", value_name = "NAME=VALUE")]
    inputs: Vec<String>,
}

#[derive(Args)]
struct CheckArgs {
    file: PathBuf,
    #[arg(long, short = 'k', default_value_t = 1)]
    bound: u32,
    #[arg(long, value_enum, default_value = "fail")]
    mode: ModeArg,
    /// Return property for `--mode return`, e.g. `>= 0`.
    #[arg(long)]
    prop: Option<String>,
    /// Store property for `--mode store`, e.g. `r >= 0`. Repeatable.
    #[arg(long = "store")]
    store: Vec<String>,
    /// Also write the SMT-LIB problem here.
    #[arg(long)]
    emit_smt: Option<PathBuf>,
    /// Report the smallest value of this integer input with a counterexample.
    #[arg(long)]
    minimize: Option<String>,
    /// Search range for --minimize.
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    min_lo: i64,
    #[arg(long, default_value_t = 1 << 20, allow_negative_numbers = true)]
    min_hi: i64,
    /// Replay the counterexample in the interpreter.
    #[arg(long)]
    replay: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct IterateArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 10)]
    kmax: u32,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BenchArgs {
    dir: PathBuf,
    #[arg(long, default_value_t = 10)]
    kmax: u32,
    #[arg(long, default_value_t = 3)]
    repeat: u32,
    /// Write the records here; stdout otherwise.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Parallel workers.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Only run with this setting of the points-to analysis.
    #[arg(long, value_enum)]
    only: Option<OnOff>,
    #[arg(long, default_value_t = 10.0)]
    timeout: f64,
    #[arg(long)]
    solver: Option<PathBuf>,
}

#[derive(Args)]
struct DumpArgs {
    file: PathBuf,
    #[arg(long, short = 'k', default_value_t = 1)]
    bound: u32,
    #[arg(long, value_enum, default_value = "fail")]
    mode: ModeArg,
    #[arg(long)]
    prop: Option<String>,
    #[arg(long = "store")]
    store: Vec<String>,
    /// Print the labelled clause list instead of SMT-LIB.
    #[arg(long)]
    clauses: bool,
    /// Print the final points-to map as JSON instead of SMT-LIB.
    #[arg(long)]
    pt_json: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct RunArgs {
    file: PathBuf,
    #[arg(long, short = 'k', default_value_t = 10)]
    bound: u32,
    /// Fix an input, e.g. `n=3`. Repeatable.
    #[arg(long = "input", value_name = "NAME=VALUE")]
    inputs: Vec<String>,
    /// Print the derivation.
    #[arg(long)]
    trace: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(3)
}

fn load_file(path: &PathBuf, k: u32) -> Result<Config, String> {
    let src = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    load(&src, Bound::k(k)).map_err(|e| format!("{}: {e}", path.display()))
}

fn comparison(s: &str) -> Result<(BinOp, &str), String> {
    let s = s.trim();
    for (sym, op) in [
        ("<=", BinOp::Le),
        (">=", BinOp::Ge),
        ("==", BinOp::Eq),
        ("!=", BinOp::Ne),
        ("<>", BinOp::Ne),
        ("<", BinOp::Lt),
        (">", BinOp::Gt),
        ("=", BinOp::Eq),
    ] {
        if let Some(rest) = s.strip_prefix(sym) {
            return Ok((op, rest.trim()));
        }
    }
    Err(format!("`{s}` does not start with a comparison"))
}

fn predicate(s: &str, ty: &Type) -> Result<Predicate, String> {
    let (op, rest) = comparison(s)?;
    if *ty == Type::Int {
        let k = rest.parse::<i64>().map_err(|_| format!("`{rest}` is not an integer"))?;
        return Ok(Predicate::Compare(op, k));
    }
    if op != BinOp::Eq {
        return Err(format!("only `==` applies to values of type {ty}"));
    }
    parse_value(rest, ty).map(Predicate::Equals).map_err(|e| e.to_string())
}

fn mode(c: &Config, m: ModeArg, prop: &Option<String>, store: &[String]) -> Result<CheckMode, String> {
    Ok(match m {
        ModeArg::Fail => CheckMode::FailReach,
        ModeArg::Nil => CheckMode::NilReach,
        ModeArg::Return => {
            let p = prop.as_ref().ok_or("--mode return needs --prop")?;
            let ty = horef_bmc::syntax::typecheck(&c.term).map_err(|e| e.to_string())?;
            CheckMode::ReturnProp(predicate(p, &ty)?)
        }
        ModeArg::Store => {
            if store.is_empty() {
                return Err("--mode store needs at least one --store".into());
            }
            let mut ps = Vec::new();
            for s in store {
                let s = s.trim();
                let split = s.find(|c: char| "<>=!".contains(c)).ok_or_else(|| format!("cannot read `{s}`"))?;
                let name = s[..split].trim();
                let r: &Ref = c
                    .store
                    .keys()
                    .find(|r| &*r.name == name)
                    .ok_or_else(|| format!("no reference named `{name}`"))?;
                ps.push((r.clone(), predicate(&s[split..], &r.ty)?));
            }
            CheckMode::StoreProps(ps)
        }
    })
}

fn inputs(c: &Config, given: &[String]) -> Result<BTreeMap<String, Value>, String> {
    let mut out = BTreeMap::new();
    for g in given {
        let (name, v) = g.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, found `{g}`"))?;
        let x = c.input(name.trim()).ok_or_else(|| format!("no input named `{}`", name.trim()))?;
        out.insert(x.name.to_string(), parse_value(v.trim(), &x.ty).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

fn options(c: &Config, common: &Common) -> Result<CheckOptions, String> {
    let mut solver = SolverConfig::default();
    if let Some(p) = &common.solver {
        solver.path = p.clone();
    }
    solver.timeout = Duration::from_secs_f64(common.timeout);
    solver.keep_dir = common.keep_files.clone();
    let mut assume = Vec::new();
    for a in &common.assume {
        let a = a.trim();
        let split = a.find(|ch: char| "<>=!".contains(ch)).ok_or_else(|| format!("cannot read `{a}`"))?;
        let (op, rest) = comparison(&a[split..])?;
        let k = rest.parse::<i64>().map_err(|_| format!("`{rest}` is not an integer"))?;
        assume.push(input_cmp(c, a[..split].trim(), op, k).map_err(|e| e.to_string())?);
    }
    let fixed = inputs(c, &common.inputs)?;
    if !fixed.is_empty() {
        assume.push(input_assignment(c, &fixed).map_err(|e| e.to_string())?);
    }
    Ok(CheckOptions {
        opt: common.opt.on(),
        translate: TranslateOptions { prune: common.prune.on(), ..TranslateOptions::default() },
        solver,
        assume,
    })
}

fn run_check(a: CheckArgs) -> ExitCode {
    let c = match load_file(&a.file, a.bound) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let (m, opts) = match mode(&c, a.mode, &a.prop, &a.store).and_then(|m| Ok((m, options(&c, &a.common)?))) {
        Ok(x) => x,
        Err(e) => return fail(e),
    };
    if let Some(path) = &a.emit_smt {
        match emit(&c, &m, &opts) {
            Ok(smt) => {
                if let Err(e) = std::fs::write(path, smt) {
                    return fail(format!("{}: {e}", path.display()));
                }
            }
            Err(e) => return fail(e),
        }
    }
    let report = match check(&c, &m, &opts) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    println!(
        "bound {} mode {m}: {} vars, {} clauses, {} branches ({:.3}s translate, {:.3}s solve)",
        a.bound,
        report.stats.vars,
        report.stats.clauses,
        report.stats.branches,
        report.translate_time.as_secs_f64(),
        report.solve_time.as_secs_f64()
    );
    match report.verdict {
        Verdict::Sat(cex) => {
            println!("counterexample: {cex}");
            if let Some(r) = &cex.ret {
                println!("result: {r}");
            }
            if let Some(name) = &a.minimize {
                match minimize(&c, &m, name, a.min_lo, a.min_hi, &opts) {
                    Ok(Some(v)) => println!("minimum {name} = {v}"),
                    Ok(None) => println!("no counterexample with {name} in [{}, {}]", a.min_lo, a.min_hi),
                    Err(e) => return fail(e),
                }
            }
            if a.replay {
                match replay(&c, &cex) {
                    Ok(o) => println!("replay: {}", o.answer),
                    Err(e) => return fail(e),
                }
            }
            ExitCode::from(1)
        }
        Verdict::Unsat => {
            println!("unsat: no counterexample at bound {}", a.bound);
            ExitCode::SUCCESS
        }
        Verdict::Unknown(r) => {
            println!("unknown: {r}");
            ExitCode::from(2)
        }
    }
}

fn run_iterate(a: IterateArgs) -> ExitCode {
    let c = match load_file(&a.file, 0) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let opts = match options(&c, &a.common) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    let report = match bound_iterate(&c, a.kmax, &opts) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    for s in &report.steps {
        let word = |v: &Verdict| match v {
            Verdict::Sat(_) => "sat",
            Verdict::Unsat => "unsat",
            Verdict::Unknown(_) => "unknown",
        };
        println!(
            "k={:<3} fail {:<7} nil {:<7} {:>8.3}s  {} clauses, {} branches",
            s.k,
            word(&s.fail),
            s.nil.as_ref().map_or("-", word),
            s.seconds,
            s.stats.clauses,
            s.stats.branches
        );
    }
    match report.verdict {
        IterateVerdict::Counterexample { k, cex } => {
            println!("counterexample at k={k}: {cex}");
            ExitCode::from(1)
        }
        IterateVerdict::Verified { k } => {
            println!("verified at k={k}");
            ExitCode::SUCCESS
        }
        IterateVerdict::BoundReached { kmax } => {
            println!("bound reached: nil still reachable at k={kmax}");
            ExitCode::from(2)
        }
        IterateVerdict::Unknown { k, reason } => {
            println!("unknown at k={k}: {reason}");
            ExitCode::from(2)
        }
    }
}

fn run_bench(a: BenchArgs) -> ExitCode {
    let files = match corpus_files(&a.dir) {
        Ok(f) if !f.is_empty() => f,
        Ok(_) => return fail(format!("no .bmc files in {}", a.dir.display())),
        Err(e) => return fail(format!("{}: {e}", a.dir.display())),
    };
    let mut check = CheckOptions::default();
    if let Some(p) = a.solver {
        check.solver.path = p;
    }
    check.solver.timeout = Duration::from_secs_f64(a.timeout);
    let opts = BenchOptions {
        kmax: a.kmax,
        repeat: a.repeat,
        opt_settings: a.only.map_or(vec![false, true], |o| vec![o.on()]),
        check,
        jobs: a.jobs,
    };
    let records = match bench_files(&files, &opts) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let written = match &a.csv {
        Some(p) => std::fs::File::create(p).map_err(|e| e.to_string()).and_then(|f| write_csv(&records, f).map_err(|e| e.to_string())),
        None => write_csv(&records, std::io::stdout()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        return fail(e);
    }
    eprint!("{}", summary(&records, a.timeout));
    ExitCode::SUCCESS
}

fn run_dump(a: DumpArgs) -> ExitCode {
    let c = match load_file(&a.file, a.bound) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let (m, mut opts) = match mode(&c, a.mode, &a.prop, &a.store).and_then(|m| Ok((m, options(&c, &a.common)?))) {
        Ok(x) => x,
        Err(e) => return fail(e),
    };
    if a.pt_json {
        let out = with_big_stack(|| {
            let sc = build_initial(&c)?;
            translate_opt(&sc, initial_pt(&sc, &c.store), &opts.translate)
        });
        return match out {
            Ok((res, _, pt)) => {
                println!("{}", serde_json::to_string_pretty(&pt.to_json(&res.repo)).unwrap());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        };
    }
    if a.clauses {
        opts.translate.origins = true;
        return match translate_config(&c, opts.opt, &opts.translate) {
            Ok(res) => {
                print!("{}", res.dump_clauses());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        };
    }
    match emit(&c, &m, &opts) {
        Ok(s) => {
            print!("{s}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

fn run_eval(a: RunArgs) -> ExitCode {
    let c = match load_file(&a.file, a.bound) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let given = match inputs(&c, &a.inputs) {
        Ok(g) => g,
        Err(e) => return fail(e),
    };
    let mut sigma = BTreeMap::new();
    for x in &c.inputs {
        match given.get(x.name.as_ref()) {
            Some(v) => {
                sigma.insert(x.clone(), v.clone());
            }
            None => return fail(format!("input `{}` needs a value (--input {}=...)", x.name, x.name)),
        }
    }
    let closed = c.close(&sigma);
    let opts = EvalOptions { trace: a.trace, ..EvalOptions::default() };
    match with_big_stack(|| eval_with(&closed, &mut NameGen::new(a.seed), &opts)) {
        Ok((o, stats)) => {
            if let Some(t) = stats.trace {
                print!("{t}");
            }
            println!("{} ({} steps, call depth {})", o.answer, stats.steps, stats.max_call_depth);
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Check(a) => run_check(a),
        Cmd::Iterate(a) => run_iterate(a),
        Cmd::Bench(a) => run_bench(a),
        Cmd::DumpSmt(a) => run_dump(a),
        Cmd::Run(a) => run_eval(a),
    }
}

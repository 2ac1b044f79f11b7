//! Benchmark runner: every program, both translations, every bound,
//! several runs. Results go to CSV plus a percentage-change summary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::checker::{query_formula, solve_queries, translate_config, CheckError, CheckMode, CheckOptions, SolverError, Verdict};
use crate::parser::load;
use crate::syntax::{Bound, Config};

/// One row of the CSV.
#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct RunRecord {
    pub program: String,
    pub k: u32,
    pub opt: bool,
    pub run: u32,
    pub verdict: String,
    pub seconds: f64,
    pub vars: usize,
    pub clauses: usize,
    pub branches: usize,
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub kmax: u32,
    pub repeat: u32,
    pub opt_settings: Vec<bool>,
    pub check: CheckOptions,
    /// Worker threads; 0 picks the rayon default.
    pub jobs: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions { kmax: 10, repeat: 3, opt_settings: vec![false, true], check: CheckOptions::default(), jobs: 0 }
    }
}

/// `.bmc` files directly inside `dir`, sorted by name.
pub fn corpus_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "bmc"))
        .collect();
    out.sort();
    Ok(out)
}

pub fn program_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Checks `fail` then `nil` at bound `k`; the verdict label is one of
/// `counterexample`, `verified`, `bound`, `timeout`, `unknown`, `error`.
fn run_once(c: &Config, k: u32, opt: bool, opts: &CheckOptions) -> (String, f64, usize, usize, usize) {
    let start = Instant::now();
    let ck = c.with_bound(k);
    let res = match translate_config(&ck, opt, &opts.translate) {
        Ok(r) => r,
        Err(_) => return ("error".into(), start.elapsed().as_secs_f64(), 0, 0, 0),
    };
    let (vars, clauses, branches) = (res.stats.vars, res.stats.clauses, res.stats.branches);
    let queries = [query_formula(&res, &CheckMode::FailReach), query_formula(&res, &CheckMode::NilReach)];
    let queries: Vec<_> = match queries.into_iter().collect::<Result<_, _>>() {
        Ok(q) => q,
        Err(_) => return ("error".into(), start.elapsed().as_secs_f64(), vars, clauses, branches),
    };
    let label = match solve_queries(&res, &ck, &queries, opts) {
        Ok((vs, _)) => match (&vs[0], &vs[1]) {
            (Verdict::Sat(_), _) => "counterexample",
            (Verdict::Unsat, Verdict::Unsat) => "verified",
            (Verdict::Unsat, Verdict::Sat(_)) => "bound",
            _ => "unknown",
        },
        Err(CheckError::Solver(SolverError::Timeout(_))) => "timeout",
        Err(_) => "error",
    };
    (label.into(), start.elapsed().as_secs_f64(), vars, clauses, branches)
}

/// All runs for one program. Bounds past a timeout are skipped for that
/// translation, as they would only time out again.
pub fn bench_program(name: &str, c: &Config, opts: &BenchOptions) -> Vec<RunRecord> {
    let mut out = Vec::new();
    for &opt in &opts.opt_settings {
        'bounds: for k in 0..=opts.kmax {
            for run in 1..=opts.repeat {
                let (verdict, seconds, vars, clauses, branches) = run_once(c, k, opt, &opts.check);
                let stop = verdict == "timeout";
                out.push(RunRecord { program: name.into(), k, opt, run, verdict, seconds, vars, clauses, branches });
                if stop {
                    break 'bounds;
                }
            }
        }
    }
    out
}

/// Benchmarks every file, programs in parallel.
pub fn bench_files(files: &[PathBuf], opts: &BenchOptions) -> Result<Vec<RunRecord>, String> {
    let mut programs = Vec::new();
    for f in files {
        let src = std::fs::read_to_string(f).map_err(|e| format!("{}: {e}", f.display()))?;
        let c = load(&src, Bound::k(0)).map_err(|e| format!("{}: {e}", f.display()))?;
        programs.push((program_name(f), c));
    }
    let work = || -> Vec<RunRecord> {
        programs.par_iter().flat_map_iter(|(name, c)| bench_program(name, c, opts)).collect()
    };
    let mut records = if opts.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| e.to_string())?
            .install(work)
    } else {
        work()
    };
    records.sort_by(|a, b| (&a.program, a.opt, a.k, a.run).cmp(&(&b.program, b.opt, b.k, b.run)));
    Ok(records)
}

pub fn write_csv<W: std::io::Write>(records: &[RunRecord], w: W) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    for r in records {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

/// Per bound: mean time with the optimisation against mean time without,
/// over programs measured both ways at that bound. A timed-out bound
/// counts at the timeout value.
pub fn percent_change(records: &[RunRecord], timeout_secs: f64) -> BTreeMap<u32, f64> {
    let mut sums: BTreeMap<(u32, bool, &str), (f64, u32)> = BTreeMap::new();
    for r in records {
        let t = if r.verdict == "timeout" { timeout_secs } else { r.seconds };
        let e = sums.entry((r.k, r.opt, &r.program)).or_default();
        e.0 += t;
        e.1 += 1;
    }
    let mut per_k: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
    for (&(k, opt, prog), &(s, n)) in &sums {
        if opt {
            continue;
        }
        if let Some(&(so, no)) = sums.get(&(k, true, prog)) {
            let e = per_k.entry(k).or_default();
            e.0 += s / n as f64;
            e.1 += so / no as f64;
        }
    }
    per_k
        .into_iter()
        .filter(|(_, (base, _))| *base > 0.0)
        .map(|(k, (base, opt))| (k, (opt - base) / base * 100.0))
        .collect()
}

/// Smallest bound with a counterexample, per program, for one setting.
pub fn first_counterexample(records: &[RunRecord], opt: bool) -> BTreeMap<String, u32> {
    let mut out = BTreeMap::new();
    for r in records.iter().filter(|r| r.opt == opt && r.verdict == "counterexample") {
        let e = out.entry(r.program.clone()).or_insert(r.k);
        *e = (*e).min(r.k);
    }
    out
}

/// Text summary: first counterexample bounds and the change per bound.
pub fn summary(records: &[RunRecord], timeout_secs: f64) -> String {
    let mut s = String::from("program            k\n");
    for (p, k) in first_counterexample(records, true) {
        s.push_str(&format!("{p:<18} {k}\n"));
    }
    s.push_str("\n k     %change\n");
    for (k, d) in percent_change(records, timeout_secs) {
        s.push_str(&format!("{k:>2}  {d:>10.3}\n"));
    }
    s
}

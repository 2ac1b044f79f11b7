//! Running an external SMT-LIB 2 solver as a subprocess.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use wait_timeout::ChildExt;

use super::sexpr::{parse_all, SExpr};

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub path: PathBuf,
    pub args: Vec<String>,
    pub timeout: Duration,
    /// Keep the emitted `.smt2` files in this directory.
    pub keep_dir: Option<PathBuf>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let path = std::env::var_os("HOREF_BMC_SOLVER").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("z3"));
        SolverConfig { path, args: Vec::new(), timeout: Duration::from_secs(10), keep_dir: None }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum SolverError {
    #[error("solver `{0}` not found")]
    NotFound(String),
    #[error("solver timed out after {0:?}")]
    Timeout(Duration),
    #[error("solver exited with {status}: {detail}")]
    Crashed { status: String, detail: String },
    #[error("solver reported an error: {0}")]
    Reported(String),
    #[error("unexpected solver output: {0}")]
    Protocol(String),
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SatStatus {
    Sat,
    Unsat,
    Unknown,
}

/// One `(check-sat)` answer and the `(get-model)` reply that followed it.
#[derive(Clone, PartialEq, Debug)]
pub struct RawResult {
    pub status: SatStatus,
    pub model: Option<SExpr>,
}

/// Output of one solver process.
#[derive(Clone, PartialEq, Debug)]
pub struct SolverRun {
    pub results: Vec<RawResult>,
    pub elapsed: Duration,
    pub file: Option<PathBuf>,
}

fn is_model_unavailable(msg: &str) -> bool {
    msg.contains("model is not available")
}

/// Splits solver output into one result per `(check-sat)`.
pub fn parse_responses(stdout: &str) -> Result<Vec<RawResult>, SolverError> {
    let items = parse_all(stdout).map_err(|e| SolverError::Protocol(format!("{e}: {}", first_line(stdout))))?;
    let mut out: Vec<RawResult> = Vec::new();
    let mut it = items.into_iter().peekable();
    while let Some(item) = it.next() {
        let status = match &item {
            SExpr::Atom(a) if a == "sat" => SatStatus::Sat,
            SExpr::Atom(a) if a == "unsat" => SatStatus::Unsat,
            SExpr::Atom(a) if a == "unknown" => SatStatus::Unknown,
            SExpr::List(l) if l.first().and_then(SExpr::atom) == Some("error") => {
                let msg = l.get(1).map(|m| m.to_string()).unwrap_or_default();
                return Err(SolverError::Reported(msg));
            }
            SExpr::Atom(a) if a == "success" => continue,
            other => return Err(SolverError::Protocol(format!("expected sat/unsat/unknown, found {other}"))),
        };
        let mut model = None;
        if let Some(SExpr::List(l)) = it.peek() {
            let is_error = l.first().and_then(SExpr::atom) == Some("error");
            if is_error {
                let msg = l.get(1).map(|m| m.to_string()).unwrap_or_default();
                if status == SatStatus::Sat || !is_model_unavailable(&msg) {
                    return Err(SolverError::Reported(msg));
                }
                it.next();
            } else {
                model = it.next();
            }
        }
        out.push(RawResult { status, model });
    }
    Ok(out)
}

fn first_line(s: &str) -> &str {
    s.lines().next().unwrap_or("")
}

/// Runs the solver on `smt` and returns every answer it printed.
///
/// z3 exits with status 1 when `(get-model)` follows `unsat`; that case
/// is accepted as long as every reported error is the missing model.
pub fn run_solver(smt: &str, cfg: &SolverConfig) -> Result<SolverRun, SolverError> {
    let io = |e: std::io::Error| SolverError::Io(e.to_string());
    let mut builder = tempfile::Builder::new();
    builder.prefix("horef-bmc-").suffix(".smt2");
    let mut file = match &cfg.keep_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(io)?;
            builder.tempfile_in(dir).map_err(io)?
        }
        None => builder.tempfile().map_err(io)?,
    };
    file.write_all(smt.as_bytes()).map_err(io)?;
    file.flush().map_err(io)?;

    let start = Instant::now();
    let mut child = Command::new(&cfg.path)
        .args(&cfg.args)
        .arg(file.path())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => SolverError::NotFound(cfg.path.display().to_string()),
            _ => io(e),
        })?;
    let mut stdout = child.stdout.take().expect("piped stdout");
    let mut stderr = child.stderr.take().expect("piped stderr");
    let out_reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let err_reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr.read_to_string(&mut s);
        s
    });
    let status = match child.wait_timeout(cfg.timeout).map_err(io)? {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(SolverError::Timeout(cfg.timeout));
        }
    };
    let elapsed = start.elapsed();
    let out = out_reader.join().unwrap_or_default();
    let err = err_reader.join().unwrap_or_default();

    let kept = if cfg.keep_dir.is_some() {
        let (_, path) = file.keep().map_err(|e| SolverError::Io(e.to_string()))?;
        Some(path)
    } else {
        None
    };

    let parsed = parse_responses(&out);
    match (status.code(), parsed) {
        (Some(0), Ok(results)) | (Some(1), Ok(results)) if !results.is_empty() => {
            Ok(SolverRun { results, elapsed, file: kept })
        }
        (Some(0), Ok(_)) => Err(SolverError::Protocol("no answer".into())),
        (_, Err(e @ SolverError::Reported(_))) => Err(e),
        (code, _) => Err(SolverError::Crashed {
            status: code.map_or_else(|| "a signal".to_string(), |c| format!("status {c}")),
            detail: format!("{}{}", first_line(&out), first_line(&err)),
        }),
    }
}

//! External SMT solver process speaking SMT-LIB2 over stdin/stdout.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use super::{Model, Oracle, OracleError, Query, Validity};

pub const SOLVER_ENV: &str = "LIQUID_MINI_SOLVER";

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub path: PathBuf,
    pub timeout: Duration,
    /// One process reused across queries with push/pop.
    pub incremental: bool,
    /// Write each query script to a numbered file here.
    pub dump_dir: Option<PathBuf>,
}

fn on_path(name: &str) -> Option<PathBuf> {
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path).map(|d| d.join(name)).find(|p| p.is_file())
}

impl SolverConfig {
    /// Use `explicit`, else the environment variable, else the first of
    /// z3, cvc4, cvc5 found on the search path.
    pub fn discover(explicit: Option<&Path>) -> Result<SolverConfig, OracleError> {
        let path = match explicit {
            Some(p) => p.to_path_buf(),
            None => match std::env::var_os(SOLVER_ENV) {
                Some(p) if !p.is_empty() => PathBuf::from(p),
                _ => ["z3", "cvc4", "cvc5"]
                    .iter()
                    .find_map(|n| on_path(n))
                    .ok_or_else(|| OracleError::Solver("no SMT solver (z3, cvc4, cvc5) found on PATH".into()))?,
            },
        };
        Ok(SolverConfig { path, timeout: Duration::from_secs(10), incremental: true, dump_dir: None })
    }

    fn flavor(&self) -> &'static str {
        let name = self.path.file_name().map(|s| s.to_string_lossy().to_lowercase()).unwrap_or_default();
        if name.contains("cvc") {
            "cvc"
        } else {
            "z3"
        }
    }

    fn args(&self) -> Vec<String> {
        let ms = self.timeout.as_millis();
        match self.flavor() {
            "cvc" => vec![
                "--lang=smt2".into(),
                "--incremental".into(),
                "--produce-models".into(),
                format!("--tlimit-per={ms}"),
            ],
            _ => vec!["-in".into(), "-smt2".into(), format!("-t:{ms}")],
        }
    }
}

struct Process {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

impl Process {
    fn spawn(cfg: &SolverConfig) -> Result<Process, OracleError> {
        let mut child = Command::new(&cfg.path)
            .args(cfg.args())
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| OracleError::Solver(format!("cannot start `{}`: {e}", cfg.path.display())))?;
        let stdin = child.stdin.take().unwrap();
        let stdout = child.stdout.take().unwrap();
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut p = Process { child, stdin, lines: rx };
        p.send(&["(set-option :print-success false)", "(set-logic QF_UFLIA)"])?;
        Ok(p)
    }

    fn send<S: AsRef<str>>(&mut self, cmds: &[S]) -> Result<(), OracleError> {
        for c in cmds {
            writeln!(self.stdin, "{}", c.as_ref()).map_err(|e| OracleError::Solver(format!("write failed: {e}")))?;
        }
        self.stdin.flush().map_err(|e| OracleError::Solver(format!("write failed: {e}")))
    }

    fn line(&mut self, timeout: Duration) -> Result<Option<String>, OracleError> {
        match self.lines.recv_timeout(timeout) {
            Ok(l) => Ok(Some(l)),
            Err(RecvTimeoutError::Timeout) => Ok(None),
            Err(RecvTimeoutError::Disconnected) => Err(OracleError::Solver("solver process exited".into())),
        }
    }

    /// Read the answer to `(check-sat)`. `None` on timeout.
    fn answer(&mut self, timeout: Duration) -> Result<Option<String>, OracleError> {
        loop {
            let Some(l) = self.line(timeout)? else { return Ok(None) };
            let t = l.trim();
            match t {
                "sat" | "unsat" | "unknown" => return Ok(Some(t.to_string())),
                "" | "success" => continue,
                _ if t.starts_with("(error") => return Err(OracleError::Solver(t.to_string())),
                _ => continue,
            }
        }
    }

    /// Read one balanced s-expression spanning possibly many lines.
    fn sexpr(&mut self, timeout: Duration) -> Result<Option<String>, OracleError> {
        let mut buf = String::new();
        let mut depth = 0i32;
        loop {
            let Some(l) = self.line(timeout)? else { return Ok(None) };
            if buf.is_empty() && l.trim().is_empty() {
                continue;
            }
            for c in l.chars() {
                match c {
                    '(' => depth += 1,
                    ')' => depth -= 1,
                    _ => {}
                }
            }
            buf.push_str(&l);
            buf.push('\n');
            if depth <= 0 {
                return Ok(Some(buf));
            }
        }
    }
}

impl Drop for Process {
    fn drop(&mut self) {
        let _ = writeln!(self.stdin, "(exit)");
        let _ = self.stdin.flush();
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Oracle backed by an external solver.
pub struct SmtOracle {
    cfg: SolverConfig,
    proc: Option<Process>,
    declared: BTreeSet<String>,
    counter: usize,
    pub queries: usize,
}

impl SmtOracle {
    pub fn new(cfg: SolverConfig) -> Result<SmtOracle, OracleError> {
        if let Some(d) = &cfg.dump_dir {
            std::fs::create_dir_all(d).map_err(|e| OracleError::Solver(format!("{}: {e}", d.display())))?;
        }
        let mut o = SmtOracle { cfg, proc: None, declared: BTreeSet::new(), counter: 0, queries: 0 };
        if o.cfg.incremental {
            o.proc = Some(Process::spawn(&o.cfg)?);
        }
        Ok(o)
    }

    fn grace(&self) -> Duration {
        self.cfg.timeout + Duration::from_secs(2)
    }

    fn run(&mut self, q: &Query) -> Result<Validity, OracleError> {
        let grace = self.grace();
        if self.proc.is_none() || !self.cfg.incremental {
            self.proc = Some(Process::spawn(&self.cfg)?);
            self.declared.clear();
        }
        let p = self.proc.as_mut().unwrap();
        let globals: Vec<String> = q.global_decls().into_iter().filter(|d| !self.declared.contains(d)).collect();
        p.send(&globals)?;
        self.declared.extend(globals);
        let mut cmds = vec!["(push 1)".to_string()];
        cmds.extend(q.local_commands());
        cmds.push("(check-sat)".into());
        p.send(&cmds)?;
        let result = match p.answer(grace)? {
            None => {
                self.proc = None;
                return Ok(Validity::Unknown("solver timed out".into()));
            }
            Some(a) if a == "unsat" => Validity::Valid,
            Some(a) if a == "sat" => {
                p.send(&["(get-model)"])?;
                match p.sexpr(grace)? {
                    Some(m) => Validity::Invalid(Some(parse_model(&m, q))),
                    None => {
                        self.proc = None;
                        return Ok(Validity::Invalid(None));
                    }
                }
            }
            Some(_) => Validity::Unknown("solver answered unknown".into()),
        };
        p.send(&["(pop 1)"])?;
        if !self.cfg.incremental {
            self.proc = None;
        }
        Ok(result)
    }
}

impl Oracle for SmtOracle {
    fn check(&mut self, q: &Query) -> Result<Validity, OracleError> {
        self.queries += 1;
        if let Some(d) = &self.cfg.dump_dir {
            self.counter += 1;
            let path = d.join(format!("{:05}.smt2", self.counter));
            std::fs::write(&path, q.script()).map_err(|e| OracleError::Solver(format!("{}: {e}", path.display())))?;
        }
        match self.run(q) {
            Ok(v) => Ok(v),
            Err(e) => {
                // A dead or confused process is restarted once.
                self.proc = None;
                self.run(q).map_err(|_| e)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum SExp {
    Atom(String),
    List(Vec<SExp>),
}

fn parse_sexp(s: &str) -> Option<SExp> {
    fn go(toks: &[String], i: &mut usize) -> Option<SExp> {
        let t = toks.get(*i)?;
        *i += 1;
        if t == "(" {
            let mut items = Vec::new();
            while toks.get(*i)? != ")" {
                items.push(go(toks, i)?);
            }
            *i += 1;
            Some(SExp::List(items))
        } else {
            Some(SExp::Atom(t.clone()))
        }
    }
    let mut toks = Vec::new();
    let mut cur = String::new();
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '(' | ')' => {
                if !cur.is_empty() {
                    toks.push(std::mem::take(&mut cur));
                }
                toks.push(c.to_string());
            }
            '|' => {
                cur.push(c);
                for d in chars.by_ref() {
                    cur.push(d);
                    if d == '|' {
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    toks.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        toks.push(cur);
    }
    go(&toks, &mut 0)
}

fn render_value(e: &SExp) -> String {
    match e {
        SExp::Atom(a) => a.clone(),
        SExp::List(xs) => match xs.as_slice() {
            [SExp::Atom(m), SExp::Atom(n)] if m == "-" => format!("-{n}"),
            _ => format!("({})", xs.iter().map(render_value).collect::<Vec<_>>().join(" ")),
        },
    }
}

/// Values of the query's constants, keyed by display name.
fn parse_model(text: &str, q: &Query) -> Model {
    let mut out = BTreeMap::new();
    let Some(SExp::List(defs)) = parse_sexp(text) else { return out };
    let defs = match defs.first() {
        Some(SExp::Atom(a)) if a == "model" => &defs[1..],
        _ => &defs[..],
    };
    for d in defs {
        if let SExp::List(items) = d {
            if let [SExp::Atom(kw), SExp::Atom(name), SExp::List(params), _sort, value] = items.as_slice() {
                if kw == "define-fun" && params.is_empty() {
                    if let Some((_, display)) = q.consts.get(name) {
                        out.insert(display.clone(), render_value(value));
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{Ident, Pred, RelOp, Sort, SortCtx};

    fn z3() -> Option<SmtOracle> {
        let cfg = SolverConfig::discover(None).ok()?;
        SmtOracle::new(cfg).ok()
    }

    #[test]
    fn model_parsing() {
        let vars = BTreeMap::from([(Ident::vv(), Sort::Int)]);
        let q = Query::new(vec![], Pred::rel(RelOp::Ge, Pred::vv(), Pred::Int(0)), &vars, &SortCtx::default())
            .unwrap();
        let m = parse_model("(\n  (define-fun VV () Int\n    (- 1))\n)\n", &q);
        assert_eq!(m.get("v").map(String::as_str), Some("-1"));
    }

    #[test]
    fn falsifiable_query_has_negative_witness() {
        let Some(mut o) = z3() else { return };
        let vars = BTreeMap::from([(Ident::vv(), Sort::Int)]);
        let q = Query::new(vec![], Pred::rel(RelOp::Ge, Pred::vv(), Pred::Int(0)), &vars, &SortCtx::default())
            .unwrap();
        match o.check(&q).unwrap() {
            Validity::Invalid(Some(m)) => {
                let n: i64 = m["v"].parse().unwrap();
                assert!(n < 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn max_obligation_is_valid() {
        let Some(mut o) = z3() else { return };
        let (x, y) = (Ident::new("x", 1), Ident::new("y", 2));
        let vars = BTreeMap::from([(Ident::vv(), Sort::Int), (x.clone(), Sort::Int), (y.clone(), Sort::Int)]);
        let goal = Pred::and([
            Pred::rel(RelOp::Ge, Pred::vv(), Pred::var(&x)),
            Pred::rel(RelOp::Ge, Pred::vv(), Pred::var(&y)),
        ]);
        let hyps = vec![Pred::rel(RelOp::Ge, Pred::var(&x), Pred::var(&y)), Pred::eq(Pred::vv(), Pred::var(&x))];
        let q = Query::new(hyps, goal.clone(), &vars, &SortCtx::default()).unwrap();
        assert_eq!(o.check(&q).unwrap(), Validity::Valid);
        // The same session keeps answering after push/pop.
        let q = Query::new(vec![], goal, &vars, &SortCtx::default()).unwrap();
        assert!(matches!(o.check(&q).unwrap(), Validity::Invalid(_)));
    }

    #[test]
    fn non_incremental_mode() {
        let Ok(mut cfg) = SolverConfig::discover(None) else { return };
        cfg.incremental = false;
        let mut o = SmtOracle::new(cfg).unwrap();
        let vars = BTreeMap::from([(Ident::vv(), Sort::Int)]);
        let p = Pred::rel(RelOp::Gt, Pred::vv(), Pred::Int(3));
        let q = Query::new(vec![p], Pred::rel(RelOp::Gt, Pred::vv(), Pred::Int(2)), &vars, &SortCtx::default())
            .unwrap();
        assert_eq!(o.check(&q).unwrap(), Validity::Valid);
        assert_eq!(o.check(&q).unwrap(), Validity::Valid);
    }
}

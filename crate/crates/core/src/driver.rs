//! The checking pipeline over whole files and the rendering of verdicts.

use std::fmt::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use crate::cgen::{self, ConstraintSet, Origin};
use crate::front::{self, FrontError};
use crate::hm;
use crate::lang::{Program, Qualifier, Span};
use crate::logic::embed::LogicCtx;
use crate::logic::smt::{SmtOracle, SolverConfig};
use crate::logic::{Cached, Model, Oracle, Validity};
use crate::measure;
use crate::solver::{self, Failure, Solver};

#[derive(Debug, Clone)]
pub struct Options {
    pub solver: Option<PathBuf>,
    pub qualifiers: Option<PathBuf>,
    pub dump_constraints: bool,
    pub dump_solution: bool,
    pub dump_smt: Option<PathBuf>,
    pub dump_shapes: bool,
    pub dump_measures: bool,
    pub incremental: bool,
    pub timeout: Duration,
    pub jobs: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            solver: None,
            qualifiers: None,
            dump_constraints: false,
            dump_solution: false,
            dump_smt: None,
            dump_shapes: false,
            dump_measures: false,
            incremental: true,
            timeout: Duration::from_secs(10),
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub path: String,
    pub span: Span,
    pub message: String,
    /// The implication after the solution is applied.
    pub implication: String,
    pub model: Option<Model>,
    /// Types of the binding being checked, with the solution applied.
    pub types: Vec<String>,
}

impl Diagnostic {
    pub fn render(&self) -> String {
        let mut s = format!("{}:{}: error: {}\n", self.path, self.span, self.message);
        if !self.implication.is_empty() {
            let _ = writeln!(s, "    violated: {}", self.implication);
        }
        if let Some(m) = &self.model {
            if !m.is_empty() {
                let vals: Vec<String> = m.iter().map(|(k, v)| format!("{k} = {v}")).collect();
                let _ = writeln!(s, "    counterexample: {}", vals.join(", "));
            }
        }
        for t in &self.types {
            let _ = writeln!(s, "    {t}");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Safe,
    Unsafe(Vec<Diagnostic>),
    ToolError(String),
}

impl Verdict {
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Safe => 0,
            Verdict::Unsafe(_) => 1,
            Verdict::ToolError(_) => 2,
        }
    }
}

/// Result of checking one file: the verdict and any requested dumps.
#[derive(Debug, Clone)]
pub struct FileReport {
    pub path: String,
    pub verdict: Verdict,
    pub dumps: String,
}

impl FileReport {
    pub fn render(&self) -> String {
        let mut s = self.dumps.clone();
        match &self.verdict {
            Verdict::Safe => {}
            Verdict::Unsafe(ds) => {
                for d in ds {
                    s.push_str(&d.render());
                }
            }
            Verdict::ToolError(m) => {
                let _ = writeln!(s, "{m}");
            }
        }
        s
    }
}

fn tool_error(path: &str, e: &FrontError) -> Verdict {
    Verdict::ToolError(format!("{path}:{}: error: {}", e.span, e.message))
}

/// Everything up to the constraint set.
pub struct Checked {
    pub prog: Program,
    pub shapes: hm::Shapes,
    pub constraints: ConstraintSet,
}

pub fn front_end(path: &str, text: &str) -> Result<Checked, FrontError> {
    let prog = front::load(path, text)?;
    let shapes = hm::infer_program(&prog)?;
    for m in &prog.measures {
        let d = prog
            .data(&m.data)
            .ok_or_else(|| FrontError::new(m.span, format!("measure `{}` over unknown type `{}`", m.name, m.data)))?;
        measure::check_measure(m, d).map_err(|e| FrontError::new(m.span, e))?;
    }
    let constraints = cgen::generate(&prog, &shapes)?;
    Ok(Checked { prog, shapes, constraints })
}

pub fn load_qualifier_file(path: &Path, prog: &Program) -> Result<Vec<Qualifier>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with("--") {
            continue;
        }
        let q = front::lower::parse_qualifier(line, prog)
            .map_err(|e| format!("{}:{}: error: {}", path.display(), i + 1, e.message))?;
        out.push(q);
    }
    Ok(out)
}

fn describe(c: &cgen::Constraint, v: &Validity) -> String {
    match (&c.origin, v) {
        (Origin::PatError(_), _) => "possible pattern-match failure".to_string(),
        (_, Validity::Unknown(why)) => format!("could not establish refinement in `{}` ({why})", c.owner),
        _ => format!("refinement type error in `{}`", c.owner),
    }
}

fn diagnostics(path: &str, ck: &Checked, sol: &solver::Solution, failures: &[Failure]) -> Vec<Diagnostic> {
    let mut out: Vec<Diagnostic> = Vec::new();
    for f in failures {
        let c = &ck.constraints.constraints[f.constraint];
        if out.iter().any(|d| d.span == c.span) {
            continue;
        }
        let implication = match &f.query {
            Some(q) => q.implication().to_string(),
            None => format!("{} => {}", sol.apply(&c.lhs), sol.apply(&c.rhs)),
        };
        let model = match &f.validity {
            Validity::Invalid(m) => m.clone(),
            _ => None,
        };
        let types = ck
            .constraints
            .globals
            .get(&c.owner)
            .map(|t| vec![format!("{} :: {}", c.owner, sol.apply_type(t))])
            .unwrap_or_default();
        out.push(Diagnostic { path: path.to_string(), span: c.span, message: describe(c, &f.validity), implication, model, types });
    }
    out.sort_by_key(|d| d.span);
    out
}

/// Check one program text against an oracle.
pub fn check_source(path: &str, text: &str, opts: &Options, oracle: &mut dyn Oracle) -> FileReport {
    let mut dumps = String::new();
    let ck = match front_end(path, text) {
        Ok(ck) => ck,
        Err(e) => return FileReport { path: path.into(), verdict: tool_error(path, &e), dumps },
    };
    if opts.dump_shapes {
        dumps.push_str(&ck.shapes.dump(&ck.prog));
    }
    if opts.dump_measures {
        dumps.push_str(&measure::dump(&ck.prog));
    }
    if opts.dump_constraints {
        dumps.push_str(&ck.constraints.dump(path));
    }
    let mut pool = solver::harvest_default_qualifiers(&ck.prog);
    if let Some(qf) = &opts.qualifiers {
        match load_qualifier_file(qf, &ck.prog) {
            Ok(extra) => {
                for q in extra {
                    if !pool.contains(&q) {
                        pool.push(q);
                    }
                }
            }
            Err(e) => return FileReport { path: path.into(), verdict: Verdict::ToolError(e), dumps },
        }
    }
    let ctx = LogicCtx { sorts: ck.prog.sort_ctx(), measures: ck.prog.measures.clone() };
    let init = solver::initial_solution(&pool, &ck.constraints, &ctx.sorts);
    let outcome = match Solver::new(&ctx, oracle).solve(&ck.constraints.constraints, init) {
        Ok(o) => o,
        Err(e) => {
            return FileReport { path: path.into(), verdict: Verdict::ToolError(format!("{path}: error: {e}")), dumps }
        }
    };
    if opts.dump_solution {
        dumps.push_str(&outcome.solution.dump(&ck.constraints.kvars));
    }
    let verdict = if outcome.is_safe() {
        Verdict::Safe
    } else {
        Verdict::Unsafe(diagnostics(path, &ck, &outcome.solution, &outcome.failures))
    };
    FileReport { path: path.into(), verdict, dumps }
}

pub fn solver_config(opts: &Options) -> Result<SolverConfig, String> {
    let mut cfg = SolverConfig::discover(opts.solver.as_deref()).map_err(|e| e.to_string())?;
    cfg.timeout = opts.timeout;
    cfg.incremental = opts.incremental;
    cfg.dump_dir = opts.dump_smt.clone();
    Ok(cfg)
}

/// Read and check one file with a fresh solver session.
pub fn check_file(path: &str, opts: &Options) -> FileReport {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            return FileReport {
                path: path.into(),
                verdict: Verdict::ToolError(format!("{path}: error: {e}")),
                dumps: String::new(),
            }
        }
    };
    let mut cfg = match solver_config(opts) {
        Ok(c) => c,
        Err(e) => return FileReport { path: path.into(), verdict: Verdict::ToolError(e), dumps: String::new() },
    };
    if let Some(d) = &cfg.dump_dir {
        let stem = Path::new(path).file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
        cfg.dump_dir = Some(d.join(stem));
    }
    let oracle = match SmtOracle::new(cfg) {
        Ok(o) => o,
        Err(e) => {
            return FileReport {
                path: path.into(),
                verdict: Verdict::ToolError(format!("{path}: error: {e}")),
                dumps: String::new(),
            }
        }
    };
    let mut oracle = Cached::new(oracle);
    check_source(path, &text, opts, &mut oracle)
}

/// Check every file, up to `opts.jobs` at a time. Reports come back in
/// input order.
pub fn check_files(paths: &[String], opts: &Options) -> Vec<FileReport> {
    let slots: Vec<Mutex<Option<FileReport>>> = paths.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = opts.jobs.max(1).min(paths.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= paths.len() {
                    break;
                }
                let r = check_file(&paths[i], opts);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().unwrap().expect("every file checked")).collect()
}

/// Rendered output and exit code for a run over several files.
pub fn run(paths: &[String], opts: &Options) -> (String, i32) {
    let reports = check_files(paths, opts);
    let mut out = String::new();
    let mut code = 0;
    for r in &reports {
        out.push_str(&r.render());
        code = code.max(r.verdict.exit_code());
    }
    match code {
        0 => out.push_str("SAFE\n"),
        1 => out.push_str("UNSAFE\n"),
        _ => {}
    }
    (out, code)
}

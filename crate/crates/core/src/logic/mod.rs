//! Validity checking of quantifier-free implications: SMT-LIB2 emission,
//! an external solver session, a syntactic fast path and a bounded
//! brute-force evaluator used for cross-checking.

pub mod embed;
pub mod eval;
pub mod smt;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};

use thiserror::Error;

use crate::lang::{ArithOp, Ident, Pred, RelOp, Sort, SortCtx};

/// A validity query `hyps => goal`. Declarations are derived from the
/// predicates and a sort environment, so every symbol is declared once.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Query {
    /// Uninterpreted sorts, one per datatype.
    pub sorts: BTreeSet<String>,
    /// Measure symbols: name, argument sorts, result sort (solver names).
    pub funs: BTreeMap<String, (Vec<String>, String)>,
    /// Free constants: solver name to (sort, display name).
    pub consts: BTreeMap<String, (String, String)>,
    pub hyps: Vec<Pred>,
    pub goal: Pred,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{0}")]
    Fragment(String),
    #[error("solver: {0}")]
    Solver(String),
}

/// Countermodel: display name of each constant to its value.
pub type Model = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Validity {
    Valid,
    Invalid(Option<Model>),
    Unknown(String),
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }
}

pub trait Oracle {
    fn check(&mut self, q: &Query) -> Result<Validity, OracleError>;
}

impl<O: Oracle + ?Sized> Oracle for Box<O> {
    fn check(&mut self, q: &Query) -> Result<Validity, OracleError> {
        (**self).check(q)
    }
}

impl Query {
    /// Build a query. Every free variable must have a sort in `vars` and
    /// every applied symbol a sort in `ctx`.
    pub fn new(
        hyps: Vec<Pred>,
        goal: Pred,
        vars: &BTreeMap<Ident, Sort>,
        ctx: &SortCtx,
    ) -> Result<Query, OracleError> {
        let mut q = Query {
            sorts: BTreeSet::new(),
            funs: BTreeMap::new(),
            consts: BTreeMap::new(),
            hyps,
            goal,
        };
        let mut seen_vars = BTreeSet::new();
        let mut apps = BTreeSet::new();
        for p in q.hyps.iter().chain([&q.goal]) {
            if p.has_kvars() {
                return Err(OracleError::Fragment(format!("unsolved refinement variable in `{p}`")));
            }
            if !p.is_linear() {
                return Err(OracleError::Fragment(format!("non-linear arithmetic in `{p}`")));
            }
            seen_vars.extend(p.free_vars());
            collect_symbols(p, &mut apps);
        }
        for x in seen_vars {
            let s = vars
                .get(&x)
                .ok_or_else(|| OracleError::Fragment(format!("variable `{x}` has no sort")))?;
            q.add_sort(s);
            q.consts.insert(x.smt_name(), (s.smt(), x.to_string()));
        }
        for f in apps {
            let fs = ctx
                .funs
                .get(f.as_str())
                .ok_or_else(|| OracleError::Fragment(format!("unknown measure `{f}`")))?;
            for s in fs.args.iter().chain([&fs.result]) {
                q.add_sort(s);
            }
            q.funs.insert(f.smt_name(), (fs.args.iter().map(Sort::smt).collect(), fs.result.smt()));
        }
        Ok(q)
    }

    fn add_sort(&mut self, s: &Sort) {
        if let Sort::Data(..) = s {
            self.sorts.insert(s.smt());
        }
    }

    /// `true` when answered without a solver: the goal is trivially true,
    /// a hypothesis is false, or every goal conjunct is a hypothesis.
    pub fn fast_path(&self) -> Option<Validity> {
        if self.goal.is_true() {
            return Some(Validity::Valid);
        }
        let hyps: Vec<&Pred> = self.hyps.iter().flat_map(|h| h.conjuncts()).collect();
        if hyps.iter().any(|h| h.is_false()) {
            return Some(Validity::Valid);
        }
        if self.goal.conjuncts().iter().all(|g| hyps.contains(g)) {
            return Some(Validity::Valid);
        }
        None
    }

    /// Declarations shared by every query over the same program.
    pub fn global_decls(&self) -> Vec<String> {
        let mut out: Vec<String> = self.sorts.iter().map(|s| format!("(declare-sort {s} 0)")).collect();
        for (f, (args, res)) in &self.funs {
            out.push(format!("(declare-fun {f} ({}) {res})", args.join(" ")));
        }
        out
    }

    /// Per-query commands: constants, hypotheses and the negated goal.
    pub fn local_commands(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (c, (s, _)) in &self.consts {
            out.push(format!("(declare-fun {c} () {s})"));
        }
        for h in &self.hyps {
            if !h.is_true() {
                out.push(format!("(assert {})", term(h)));
            }
        }
        out.push(format!("(assert (not {}))", term(&self.goal)));
        out
    }

    /// Complete, deterministic script for the query.
    pub fn script(&self) -> String {
        let mut s = String::from("(set-logic QF_UFLIA)\n");
        for l in self.global_decls().into_iter().chain(self.local_commands()) {
            s.push_str(&l);
            s.push('\n');
        }
        s.push_str("(check-sat)\n");
        s
    }

    /// The implication as one formula, for diagnostics.
    pub fn implication(&self) -> Pred {
        Pred::imp(Pred::and(self.hyps.clone()), self.goal.clone())
    }
}

pub fn emit_script(q: &Query) -> String {
    q.script()
}

fn collect_symbols(p: &Pred, out: &mut BTreeSet<Ident>) {
    if let Pred::App(f, _) = p {
        out.insert(f.clone());
    }
    for c in p.children() {
        collect_symbols(c, out);
    }
}

fn int_lit(n: i64) -> String {
    if n < 0 {
        format!("(- {})", n.unsigned_abs())
    } else {
        n.to_string()
    }
}

/// SMT-LIB2 rendering of a kvar-free predicate.
pub fn term(p: &Pred) -> String {
    let mut s = String::new();
    write_term(p, &mut s).unwrap();
    s
}

fn write_term(p: &Pred, s: &mut String) -> fmt::Result {
    let nary = |s: &mut String, op: &str, ps: &[&Pred]| -> fmt::Result {
        write!(s, "({op}")?;
        for q in ps {
            s.push(' ');
            write_term(q, s)?;
        }
        s.push(')');
        Ok(())
    };
    match p {
        Pred::Bool(b) => write!(s, "{b}"),
        Pred::Int(n) => write!(s, "{}", int_lit(*n)),
        Pred::Var(x) => write!(s, "{}", x.smt_name()),
        Pred::KVar(k) => panic!("kvar {} reached the solver", k.id),
        Pred::Arith(op, a, b) => {
            let o = match op {
                ArithOp::Add => "+",
                ArithOp::Sub => "-",
                ArithOp::Mul => "*",
            };
            nary(s, o, &[a, b])
        }
        Pred::Rel(RelOp::Ne, a, b) => {
            s.push_str("(not ");
            nary(s, "=", &[a, b])?;
            s.push(')');
            Ok(())
        }
        Pred::Rel(op, a, b) => {
            let o = match op {
                RelOp::Eq => "=",
                RelOp::Lt => "<",
                RelOp::Le => "<=",
                RelOp::Gt => ">",
                RelOp::Ge => ">=",
                RelOp::Ne => unreachable!(),
            };
            nary(s, o, &[a, b])
        }
        Pred::And(ps) if ps.is_empty() => write!(s, "true"),
        Pred::Or(ps) if ps.is_empty() => write!(s, "false"),
        Pred::And(ps) => nary(s, "and", &ps.iter().collect::<Vec<_>>()),
        Pred::Or(ps) => nary(s, "or", &ps.iter().collect::<Vec<_>>()),
        Pred::Not(a) => nary(s, "not", &[a]),
        Pred::Imp(a, b) => nary(s, "=>", &[a, b]),
        Pred::Ite(c, a, b) => nary(s, "ite", &[c, a, b]),
        Pred::App(f, args) => {
            if args.is_empty() {
                write!(s, "{}", f.smt_name())
            } else {
                nary(s, &f.smt_name(), &args.iter().collect::<Vec<_>>())
            }
        }
    }
}

/// Memoizes answers by script text.
pub struct Cached<O> {
    pub inner: O,
    cache: BTreeMap<Query, Validity>,
    pub hits: usize,
    pub misses: usize,
}

impl<O: Oracle> Cached<O> {
    pub fn new(inner: O) -> Self {
        Cached { inner, cache: BTreeMap::new(), hits: 0, misses: 0 }
    }
}

impl<O: Oracle> Oracle for Cached<O> {
    fn check(&mut self, q: &Query) -> Result<Validity, OracleError> {
        if let Some(v) = self.cache.get(q) {
            self.hits += 1;
            return Ok(v.clone());
        }
        self.misses += 1;
        let v = self.inner.check(q)?;
        self.cache.insert(q.clone(), v.clone());
        Ok(v)
    }
}

//! Refinement predicates: quantifier-free formulas over linear integer
//! arithmetic, booleans, uninterpreted measure applications and refinement
//! variables (kvars).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::ident::Ident;
use super::sort::{Sort, SortSubst};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KVarId(pub u32);

impl fmt::Display for KVarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "$k{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl RelOp {
    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Eq => "=",
            RelOp::Ne => "/=",
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            RelOp::Eq => a == b,
            RelOp::Ne => a != b,
            RelOp::Lt => a < b,
            RelOp::Le => a <= b,
            RelOp::Gt => a > b,
            RelOp::Ge => a >= b,
        }
    }
}

/// A kvar occurrence with its pending substitution. The substitution is
/// applied to the kvar's eventual solution, never eagerly.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KVarApp {
    pub id: KVarId,
    pub subst: Vec<(Ident, Pred)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pred {
    Bool(bool),
    Int(i64),
    Var(Ident),
    KVar(KVarApp),
    Arith(ArithOp, Box<Pred>, Box<Pred>),
    Rel(RelOp, Box<Pred>, Box<Pred>),
    And(Vec<Pred>),
    Or(Vec<Pred>),
    Not(Box<Pred>),
    Imp(Box<Pred>, Box<Pred>),
    Ite(Box<Pred>, Box<Pred>, Box<Pred>),
    /// Application of an uninterpreted measure symbol.
    App(Ident, Vec<Pred>),
}

pub type Subst = BTreeMap<Ident, Pred>;

impl Pred {
    pub fn tt() -> Pred {
        Pred::Bool(true)
    }

    pub fn ff() -> Pred {
        Pred::Bool(false)
    }

    pub fn var(x: &Ident) -> Pred {
        Pred::Var(x.clone())
    }

    pub fn vv() -> Pred {
        Pred::Var(Ident::vv())
    }

    pub fn kvar(id: KVarId) -> Pred {
        Pred::KVar(KVarApp { id, subst: Vec::new() })
    }

    pub fn rel(op: RelOp, a: Pred, b: Pred) -> Pred {
        Pred::Rel(op, Box::new(a), Box::new(b))
    }

    pub fn eq(a: Pred, b: Pred) -> Pred {
        Pred::rel(RelOp::Eq, a, b)
    }

    pub fn arith(op: ArithOp, a: Pred, b: Pred) -> Pred {
        Pred::Arith(op, Box::new(a), Box::new(b))
    }

    pub fn ite(c: Pred, a: Pred, b: Pred) -> Pred {
        Pred::Ite(Box::new(c), Box::new(a), Box::new(b))
    }

    pub fn imp(a: Pred, b: Pred) -> Pred {
        Pred::Imp(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(p: Pred) -> Pred {
        match p {
            Pred::Bool(b) => Pred::Bool(!b),
            Pred::Not(q) => *q,
            p => Pred::Not(Box::new(p)),
        }
    }

    /// Flattening conjunction; drops `true`, collapses on `false`.
    pub fn and(ps: impl IntoIterator<Item = Pred>) -> Pred {
        let mut out = Vec::new();
        for p in ps {
            match p {
                Pred::Bool(true) => {}
                Pred::Bool(false) => return Pred::ff(),
                Pred::And(qs) => out.extend(qs),
                p => out.push(p),
            }
        }
        match out.len() {
            0 => Pred::tt(),
            1 => out.pop().unwrap(),
            _ => Pred::And(out),
        }
    }

    pub fn or(ps: impl IntoIterator<Item = Pred>) -> Pred {
        let mut out = Vec::new();
        for p in ps {
            match p {
                Pred::Bool(false) => {}
                Pred::Bool(true) => return Pred::tt(),
                Pred::Or(qs) => out.extend(qs),
                p => out.push(p),
            }
        }
        match out.len() {
            0 => Pred::ff(),
            1 => out.pop().unwrap(),
            _ => Pred::Or(out),
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Pred::Bool(true))
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Pred::Bool(false))
    }

    /// Top-level conjuncts (a non-conjunction is its own single conjunct).
    pub fn conjuncts(&self) -> Vec<&Pred> {
        match self {
            Pred::And(ps) => ps.iter().flat_map(|p| p.conjuncts()).collect(),
            Pred::Bool(true) => Vec::new(),
            p => vec![p],
        }
    }

    pub fn into_conjuncts(self) -> Vec<Pred> {
        match self {
            Pred::And(ps) => ps.into_iter().flat_map(Pred::into_conjuncts).collect(),
            Pred::Bool(true) => Vec::new(),
            p => vec![p],
        }
    }

    pub fn children(&self) -> Vec<&Pred> {
        match self {
            Pred::Bool(_) | Pred::Int(_) | Pred::Var(_) => Vec::new(),
            Pred::KVar(k) => k.subst.iter().map(|(_, t)| t).collect(),
            Pred::Arith(_, a, b) | Pred::Rel(_, a, b) | Pred::Imp(a, b) => vec![a, b],
            Pred::And(ps) | Pred::Or(ps) | Pred::App(_, ps) => ps.iter().collect(),
            Pred::Not(a) => vec![a],
            Pred::Ite(c, a, b) => vec![c, a, b],
        }
    }

    /// Free program variables (including the value variable), excluding
    /// kvar pending-substitution domains.
    pub fn free_vars(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Ident>) {
        if let Pred::Var(x) = self {
            out.insert(x.clone());
        }
        for c in self.children() {
            c.collect_vars(out);
        }
    }

    pub fn mentions(&self, x: &Ident) -> bool {
        match self {
            Pred::Var(y) => x == y,
            _ => self.children().into_iter().any(|c| c.mentions(x)),
        }
    }

    pub fn kvars(&self) -> BTreeSet<KVarId> {
        let mut out = BTreeSet::new();
        self.collect_kvars(&mut out);
        out
    }

    fn collect_kvars(&self, out: &mut BTreeSet<KVarId>) {
        if let Pred::KVar(k) = self {
            out.insert(k.id);
        }
        for c in self.children() {
            c.collect_kvars(out);
        }
    }

    pub fn has_kvars(&self) -> bool {
        match self {
            Pred::KVar(_) => true,
            _ => self.children().into_iter().any(Pred::has_kvars),
        }
    }

    /// All measure applications occurring in the predicate.
    pub fn measure_apps(&self, out: &mut BTreeSet<Pred>) {
        if let Pred::App(..) = self {
            out.insert(self.clone());
        }
        for c in self.children() {
            c.measure_apps(out);
        }
    }

    /// Linear arithmetic check: every multiplication has a literal operand.
    pub fn is_linear(&self) -> bool {
        match self {
            Pred::Arith(ArithOp::Mul, a, b)
                if !matches!(**a, Pred::Int(_)) && !matches!(**b, Pred::Int(_)) =>
            {
                false
            }
            _ => self.children().into_iter().all(Pred::is_linear),
        }
    }

    /// Simultaneous substitution of terms for variables. Predicates have no
    /// binders, so this cannot capture. Kvars accumulate the substitution as
    /// pending.
    pub fn subst(&self, map: &Subst) -> Pred {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            Pred::Var(x) => map.get(x).cloned().unwrap_or_else(|| self.clone()),
            Pred::Bool(_) | Pred::Int(_) => self.clone(),
            Pred::KVar(k) => {
                let mut subst: Vec<(Ident, Pred)> =
                    k.subst.iter().map(|(x, t)| (x.clone(), t.subst(map))).collect();
                for (y, s) in map {
                    if !k.subst.iter().any(|(x, _)| x == y) {
                        subst.push((y.clone(), s.clone()));
                    }
                }
                Pred::KVar(KVarApp { id: k.id, subst })
            }
            Pred::Arith(op, a, b) => Pred::arith(*op, a.subst(map), b.subst(map)),
            Pred::Rel(op, a, b) => Pred::rel(*op, a.subst(map), b.subst(map)),
            Pred::And(ps) => Pred::And(ps.iter().map(|p| p.subst(map)).collect()),
            Pred::Or(ps) => Pred::Or(ps.iter().map(|p| p.subst(map)).collect()),
            Pred::Not(p) => Pred::Not(Box::new(p.subst(map))),
            Pred::Imp(a, b) => Pred::imp(a.subst(map), b.subst(map)),
            Pred::Ite(c, a, b) => Pred::ite(c.subst(map), a.subst(map), b.subst(map)),
            Pred::App(f, args) => Pred::App(f.clone(), args.iter().map(|p| p.subst(map)).collect()),
        }
    }

    pub fn subst1(&self, x: &Ident, t: &Pred) -> Pred {
        let mut m = Subst::new();
        m.insert(x.clone(), t.clone());
        self.subst(&m)
    }

    /// Substitution that first checks each replacement term's sort against
    /// the sort of the variable it replaces.
    pub fn subst_checked(
        &self,
        map: &Subst,
        ctx: &SortCtx,
        vars: &BTreeMap<Ident, Sort>,
    ) -> Result<Pred, SortError> {
        for (x, t) in map {
            let want = vars
                .get(x)
                .cloned()
                .ok_or_else(|| SortError::Unbound(x.to_string()))?;
            let mut chk = SortChecker::new(ctx, vars);
            let got = chk.sort_of(t)?;
            if !chk.subst.unify(&want, &got) {
                return Err(SortError::Mismatch {
                    term: t.to_string(),
                    expected: want,
                    found: chk.subst.apply(&got),
                });
            }
        }
        Ok(self.subst(map))
    }

    /// Replace kvars using `f`, which receives the kvar occurrence.
    pub fn map_kvars(&self, f: &mut impl FnMut(&KVarApp) -> Pred) -> Pred {
        match self {
            Pred::KVar(k) => f(k),
            Pred::Bool(_) | Pred::Int(_) | Pred::Var(_) => self.clone(),
            Pred::Arith(op, a, b) => Pred::arith(*op, a.map_kvars(f), b.map_kvars(f)),
            Pred::Rel(op, a, b) => Pred::rel(*op, a.map_kvars(f), b.map_kvars(f)),
            Pred::And(ps) => Pred::and(ps.iter().map(|p| p.map_kvars(f)).collect::<Vec<_>>()),
            Pred::Or(ps) => Pred::or(ps.iter().map(|p| p.map_kvars(f)).collect::<Vec<_>>()),
            Pred::Not(p) => Pred::not(p.map_kvars(f)),
            Pred::Imp(a, b) => Pred::imp(a.map_kvars(f), b.map_kvars(f)),
            Pred::Ite(c, a, b) => Pred::ite(c.map_kvars(f), a.map_kvars(f), b.map_kvars(f)),
            Pred::App(m, args) => Pred::App(m.clone(), args.iter().map(|p| p.map_kvars(f)).collect()),
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Pred::Imp(..) => 1,
            Pred::Or(_) => 2,
            Pred::And(_) => 3,
            Pred::Not(_) => 4,
            Pred::Rel(..) => 5,
            Pred::Arith(ArithOp::Add | ArithOp::Sub, ..) => 6,
            Pred::Arith(ArithOp::Mul, ..) => 7,
            Pred::App(..) => 8,
            Pred::Int(n) if *n < 0 => 8,
            _ => 9,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, ctx: u8) -> fmt::Result {
        let p = self.prec();
        let paren = p < ctx || (p == 8 && ctx > 8);
        if paren {
            write!(f, "(")?;
        }
        match self {
            Pred::Bool(b) => write!(f, "{b}")?,
            Pred::Int(n) => write!(f, "{n}")?,
            Pred::Var(x) => write!(f, "{x}")?,
            Pred::KVar(k) => {
                write!(f, "{}", k.id)?;
                if !k.subst.is_empty() {
                    write!(f, "[")?;
                    for (i, (x, t)) in k.subst.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{x} := {t}")?;
                    }
                    write!(f, "]")?;
                }
            }
            Pred::Arith(op, a, b) => {
                let sym = match op {
                    ArithOp::Add => "+",
                    ArithOp::Sub => "-",
                    ArithOp::Mul => "*",
                };
                a.fmt_prec(f, p)?;
                write!(f, " {sym} ")?;
                b.fmt_prec(f, p + 1)?;
            }
            Pred::Rel(op, a, b) => {
                a.fmt_prec(f, p + 1)?;
                write!(f, " {} ", op.symbol())?;
                b.fmt_prec(f, p + 1)?;
            }
            Pred::And(ps) | Pred::Or(ps) => {
                let sym = if matches!(self, Pred::And(_)) { "&&" } else { "||" };
                for (i, q) in ps.iter().enumerate() {
                    if i > 0 {
                        write!(f, " {sym} ")?;
                    }
                    q.fmt_prec(f, p + 1)?;
                }
            }
            Pred::Not(q) => {
                write!(f, "not ")?;
                q.fmt_prec(f, 9)?;
            }
            Pred::Imp(a, b) => {
                a.fmt_prec(f, p + 1)?;
                write!(f, " => ")?;
                b.fmt_prec(f, p)?;
            }
            Pred::Ite(c, a, b) => {
                if !paren {
                    write!(f, "(")?;
                }
                write!(f, "if {c} then {a} else {b}")?;
                if !paren {
                    write!(f, ")")?;
                }
            }
            Pred::App(m, args) => {
                write!(f, "{m}")?;
                for a in args {
                    write!(f, " ")?;
                    a.fmt_prec(f, 9)?;
                }
            }
        }
        if paren {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SortError {
    #[error("unbound variable `{0}` in refinement")]
    Unbound(String),
    #[error("unknown measure `{0}`")]
    UnknownMeasure(String),
    #[error("measure `{name}` expects {expected} argument(s), got {found}")]
    Arity { name: String, expected: usize, found: usize },
    #[error("sort mismatch in `{term}`: expected {expected}, found {found}")]
    Mismatch { term: String, expected: Sort, found: Sort },
    #[error("non-linear multiplication `{0}`")]
    NonLinear(String),
    #[error("ordering comparison on unordered sort {0} in `{1}`")]
    Unordered(Sort, String),
}

/// Signature of an uninterpreted function symbol. Type variables in the
/// sorts are instantiated afresh at every use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunSort {
    pub args: Vec<Sort>,
    pub result: Sort,
}

/// Global sorting context: declared measure symbols.
#[derive(Debug, Clone, Default)]
pub struct SortCtx {
    pub funs: BTreeMap<String, FunSort>,
}

pub struct SortChecker<'a> {
    ctx: &'a SortCtx,
    vars: &'a BTreeMap<Ident, Sort>,
    pub subst: SortSubst,
    next_meta: u32,
}

impl<'a> SortChecker<'a> {
    pub fn new(ctx: &'a SortCtx, vars: &'a BTreeMap<Ident, Sort>) -> Self {
        let next_meta = vars
            .values()
            .filter_map(max_meta)
            .max()
            .map_or(1000, |m| m.max(999) + 1);
        SortChecker { ctx, vars, subst: SortSubst::new(), next_meta }
    }

    fn fresh(&mut self) -> Sort {
        self.next_meta += 1;
        Sort::Meta(self.next_meta)
    }

    fn expect(&mut self, p: &Pred, want: &Sort) -> Result<(), SortError> {
        let got = self.sort_of(p)?;
        if self.subst.unify(&got, want) {
            Ok(())
        } else {
            Err(SortError::Mismatch {
                term: p.to_string(),
                expected: self.subst.apply(want),
                found: self.subst.apply(&got),
            })
        }
    }

    pub fn sort_of(&mut self, p: &Pred) -> Result<Sort, SortError> {
        match p {
            Pred::Bool(_) | Pred::KVar(_) => Ok(Sort::Bool),
            Pred::Int(_) => Ok(Sort::Int),
            Pred::Var(x) => self
                .vars
                .get(x)
                .cloned()
                .ok_or_else(|| SortError::Unbound(x.to_string())),
            Pred::Arith(op, a, b) => {
                if *op == ArithOp::Mul && !matches!(**a, Pred::Int(_)) && !matches!(**b, Pred::Int(_)) {
                    return Err(SortError::NonLinear(p.to_string()));
                }
                self.expect(a, &Sort::Int)?;
                self.expect(b, &Sort::Int)?;
                Ok(Sort::Int)
            }
            Pred::Rel(op, a, b) => {
                let sa = self.sort_of(a)?;
                self.expect(b, &sa)?;
                if !matches!(op, RelOp::Eq | RelOp::Ne) {
                    let s = self.subst.apply(&sa);
                    if !(s.is_ordered() || matches!(s, Sort::Meta(_))) {
                        return Err(SortError::Unordered(s, p.to_string()));
                    }
                }
                Ok(Sort::Bool)
            }
            Pred::And(ps) | Pred::Or(ps) => {
                for q in ps {
                    self.expect(q, &Sort::Bool)?;
                }
                Ok(Sort::Bool)
            }
            Pred::Not(q) => {
                self.expect(q, &Sort::Bool)?;
                Ok(Sort::Bool)
            }
            Pred::Imp(a, b) => {
                self.expect(a, &Sort::Bool)?;
                self.expect(b, &Sort::Bool)?;
                Ok(Sort::Bool)
            }
            Pred::Ite(c, a, b) => {
                self.expect(c, &Sort::Bool)?;
                let sa = self.sort_of(a)?;
                self.expect(b, &sa)?;
                Ok(sa)
            }
            Pred::App(m, args) => {
                let sig = self
                    .ctx
                    .funs
                    .get(m.as_str())
                    .cloned()
                    .ok_or_else(|| SortError::UnknownMeasure(m.to_string()))?;
                if sig.args.len() != args.len() {
                    return Err(SortError::Arity {
                        name: m.to_string(),
                        expected: sig.args.len(),
                        found: args.len(),
                    });
                }
                let mut inst = BTreeMap::new();
                let mut instantiate = |s: &Sort, this: &mut Self| inst_tyvars(s, &mut inst, &mut || this.fresh());
                let params: Vec<Sort> = sig.args.iter().map(|s| instantiate(s, self)).collect();
                let result = instantiate(&sig.result, self);
                for (a, s) in args.iter().zip(&params) {
                    self.expect(a, s)?;
                }
                Ok(result)
            }
        }
    }
}

fn max_meta(s: &Sort) -> Option<u32> {
    match s {
        Sort::Meta(n) => Some(*n),
        Sort::Data(_, args) => args.iter().filter_map(max_meta).max(),
        _ => None,
    }
}

fn inst_tyvars(s: &Sort, inst: &mut BTreeMap<String, Sort>, fresh: &mut dyn FnMut() -> Sort) -> Sort {
    match s {
        Sort::TyVar(a) => {
            if let Some(t) = inst.get(a) {
                return t.clone();
            }
            let t = fresh();
            inst.insert(a.clone(), t.clone());
            t
        }
        Sort::Data(d, args) => Sort::Data(d.clone(), args.iter().map(|a| inst_tyvars(a, inst, fresh)).collect()),
        s => s.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Ident {
        Ident::new("x", 1)
    }
    fn y() -> Ident {
        Ident::new("y", 2)
    }

    #[test]
    fn subst_value_variable() {
        let p = Pred::rel(RelOp::Gt, Pred::vv(), Pred::var(&x()));
        let q = p.subst1(&Ident::vv(), &Pred::var(&y()));
        assert_eq!(q, Pred::rel(RelOp::Gt, Pred::var(&y()), Pred::var(&x())));
        assert_eq!(q.to_string(), "y > x");
    }

    #[test]
    fn subst_max_binding() {
        // v >= x && v >= y with v := x
        let p = Pred::and([
            Pred::rel(RelOp::Ge, Pred::vv(), Pred::var(&x())),
            Pred::rel(RelOp::Ge, Pred::vv(), Pred::var(&y())),
        ]);
        let q = p.subst1(&Ident::vv(), &Pred::var(&x()));
        assert_eq!(q.to_string(), "x >= x && x >= y");
    }

    #[test]
    fn empty_subst_is_identity() {
        let p = Pred::and([Pred::rel(RelOp::Ge, Pred::vv(), Pred::Int(0)), Pred::kvar(KVarId(3))]);
        assert_eq!(p.subst(&Subst::new()), p);
    }

    #[test]
    fn kvar_substitution_is_pending() {
        let k = Pred::kvar(KVarId(1)).subst1(&Ident::vv(), &Pred::var(&x()));
        let k2 = k.subst1(&x(), &Pred::var(&y()));
        match k2 {
            Pred::KVar(app) => {
                assert_eq!(app.subst, vec![(Ident::vv(), Pred::var(&y())), (x(), Pred::var(&y()))]);
            }
            _ => panic!("expected kvar"),
        }
    }

    #[test]
    fn checked_subst_rejects_mismatch() {
        let ctx = SortCtx::default();
        let mut vars = BTreeMap::new();
        vars.insert(x(), Sort::Int);
        vars.insert(y(), Sort::Bool);
        let p = Pred::rel(RelOp::Gt, Pred::var(&x()), Pred::Int(0));
        let mut m = Subst::new();
        m.insert(x(), Pred::var(&y()));
        assert!(matches!(p.subst_checked(&m, &ctx, &vars), Err(SortError::Mismatch { .. })));
        m.insert(x(), Pred::Int(4));
        assert!(p.subst_checked(&m, &ctx, &vars).is_ok());
    }

    #[test]
    fn display_precedence() {
        let p = Pred::not(Pred::rel(RelOp::Ge, Pred::var(&x()), Pred::var(&y())));
        assert_eq!(p.to_string(), "not (x >= y)");
        let q = Pred::arith(
            ArithOp::Sub,
            Pred::var(&x()),
            Pred::arith(ArithOp::Sub, Pred::var(&y()), Pred::Int(1)),
        );
        assert_eq!(q.to_string(), "x - (y - 1)");
    }

    #[test]
    fn sort_checking_measures() {
        let mut ctx = SortCtx::default();
        ctx.funs.insert(
            "len".into(),
            FunSort { args: vec![Sort::list(Sort::TyVar("a".into()))], result: Sort::Int },
        );
        let a = Ident::new("a", 3);
        let mut vars = BTreeMap::new();
        vars.insert(a.clone(), Sort::list(Sort::Int));
        vars.insert(x(), Sort::Int);
        vars.insert(Ident::vv(), Sort::Int);
        let good = Pred::rel(RelOp::Lt, Pred::vv(), Pred::App(Ident::global("len"), vec![Pred::var(&a)]));
        assert_eq!(SortChecker::new(&ctx, &vars).sort_of(&good), Ok(Sort::Bool));
        let bad = Pred::rel(RelOp::Lt, Pred::vv(), Pred::App(Ident::global("len"), vec![Pred::var(&x())]));
        assert!(SortChecker::new(&ctx, &vars).sort_of(&bad).is_err());
        let nonlin = Pred::arith(ArithOp::Mul, Pred::var(&x()), Pred::vv());
        assert!(matches!(SortChecker::new(&ctx, &vars).sort_of(&nonlin), Err(SortError::NonLinear(_))));
    }
}

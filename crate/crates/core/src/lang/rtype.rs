use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicU32, Ordering};

use super::ident::Ident;
use super::pred::{KVarId, Pred, SortChecker, SortCtx, SortError, Subst};
use super::sort::Sort;
use super::{is_tuple_name, LIST};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BaseType {
    Int,
    Bool,
    TyVar(String),
    TyCon(String, Vec<RType>),
}

/// Refinement types. Every base refinement binds the value variable
/// `Ident::vv()`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RType {
    Base { base: BaseType, pred: Pred },
    Fun { binder: Ident, dom: Box<RType>, cod: Box<RType> },
    Forall { tyvar: String, body: Box<RType> },
}

static RENAME: AtomicU32 = AtomicU32::new(1 << 30);

fn rename_binder(x: &Ident) -> Ident {
    Ident::new(&x.name, RENAME.fetch_add(1, Ordering::Relaxed))
}

impl RType {
    pub fn base(base: BaseType) -> RType {
        RType::Base { base, pred: Pred::tt() }
    }

    pub fn refined(base: BaseType, pred: Pred) -> RType {
        RType::Base { base, pred }
    }

    pub fn int() -> RType {
        RType::base(BaseType::Int)
    }

    pub fn bool() -> RType {
        RType::base(BaseType::Bool)
    }

    pub fn tyvar(a: &str) -> RType {
        RType::base(BaseType::TyVar(a.to_string()))
    }

    pub fn con(name: &str, args: Vec<RType>) -> RType {
        RType::base(BaseType::TyCon(name.to_string(), args))
    }

    pub fn list(elem: RType) -> RType {
        RType::con(LIST, vec![elem])
    }

    pub fn fun(binder: Ident, dom: RType, cod: RType) -> RType {
        RType::Fun { binder, dom: Box::new(dom), cod: Box::new(cod) }
    }

    pub fn is_base(&self) -> bool {
        matches!(self, RType::Base { .. })
    }

    pub fn is_fun(&self) -> bool {
        matches!(self, RType::Fun { .. } | RType::Forall { .. })
    }

    pub fn pred(&self) -> Option<&Pred> {
        match self {
            RType::Base { pred, .. } => Some(pred),
            _ => None,
        }
    }

    /// Erase all refinements.
    pub fn shape(&self) -> RType {
        match self {
            RType::Base { base, .. } => RType::base(match base {
                BaseType::TyCon(c, args) => BaseType::TyCon(c.clone(), args.iter().map(RType::shape).collect()),
                b => b.clone(),
            }),
            RType::Fun { binder, dom, cod } => RType::fun(binder.clone(), dom.shape(), cod.shape()),
            RType::Forall { tyvar, body } => RType::Forall { tyvar: tyvar.clone(), body: Box::new(body.shape()) },
        }
    }

    /// Shape comparison ignoring binder names and refinements.
    pub fn same_shape(&self, other: &RType) -> bool {
        match (self, other) {
            (RType::Base { base: b1, .. }, RType::Base { base: b2, .. }) => match (b1, b2) {
                (BaseType::TyCon(c1, a1), BaseType::TyCon(c2, a2)) => {
                    c1 == c2 && a1.len() == a2.len() && a1.iter().zip(a2).all(|(x, y)| x.same_shape(y))
                }
                _ => b1 == b2,
            },
            (RType::Fun { dom: d1, cod: c1, .. }, RType::Fun { dom: d2, cod: c2, .. }) => {
                d1.same_shape(d2) && c1.same_shape(c2)
            }
            (RType::Forall { tyvar: a, body: b1 }, RType::Forall { tyvar: c, body: b2 }) => a == c && b1.same_shape(b2),
            _ => false,
        }
    }

    /// Logic sort of values of a base type.
    pub fn sort(&self) -> Option<Sort> {
        match self {
            RType::Base { base, .. } => Some(base.sort()),
            _ => None,
        }
    }

    /// Conjoin `p` onto the top-level refinement.
    pub fn strengthen(&self, p: Pred) -> RType {
        match self {
            RType::Base { base, pred } => RType::Base { base: base.clone(), pred: Pred::and([pred.clone(), p]) },
            t => t.clone(),
        }
    }

    pub fn with_pred(&self, p: Pred) -> RType {
        match self {
            RType::Base { base, .. } => RType::Base { base: base.clone(), pred: p },
            t => t.clone(),
        }
    }

    /// Substitute terms for program variables in every refinement.
    /// Function binders shadow and are renamed when they would capture.
    pub fn subst(&self, map: &Subst) -> RType {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            RType::Base { base, pred } => {
                let base = match base {
                    BaseType::TyCon(c, args) => BaseType::TyCon(c.clone(), args.iter().map(|a| a.subst(map)).collect()),
                    b => b.clone(),
                };
                RType::Base { base, pred: pred.subst(map) }
            }
            RType::Fun { binder, dom, cod } => {
                let dom = dom.subst(map);
                let mut inner = map.clone();
                inner.remove(binder);
                let captures = inner.values().any(|t| t.mentions(binder));
                if captures {
                    let fresh = rename_binder(binder);
                    inner.insert(binder.clone(), Pred::var(&fresh));
                    RType::fun(fresh, dom, cod.subst(&inner))
                } else {
                    RType::fun(binder.clone(), dom, cod.subst(&inner))
                }
            }
            RType::Forall { tyvar, body } => RType::Forall { tyvar: tyvar.clone(), body: Box::new(body.subst(map)) },
        }
    }

    pub fn subst1(&self, x: &Ident, t: &Pred) -> RType {
        let mut m = Subst::new();
        m.insert(x.clone(), t.clone());
        self.subst(&m)
    }

    /// Instantiate type variables. A refined occurrence `{v:a | p}` becomes
    /// the replacement strengthened with `p`.
    pub fn subst_tyvars(&self, map: &BTreeMap<String, RType>) -> RType {
        match self {
            RType::Base { base: BaseType::TyVar(a), pred } => match map.get(a) {
                Some(t) if t.is_base() => t.strengthen(pred.clone()),
                Some(t) => t.clone(),
                None => self.clone(),
            },
            RType::Base { base: BaseType::TyCon(c, args), pred } => RType::Base {
                base: BaseType::TyCon(c.clone(), args.iter().map(|a| a.subst_tyvars(map)).collect()),
                pred: pred.clone(),
            },
            RType::Base { .. } => self.clone(),
            RType::Fun { binder, dom, cod } => RType::fun(binder.clone(), dom.subst_tyvars(map), cod.subst_tyvars(map)),
            RType::Forall { tyvar, body } => {
                if map.contains_key(tyvar) {
                    let mut inner = map.clone();
                    inner.remove(tyvar);
                    RType::Forall { tyvar: tyvar.clone(), body: Box::new(body.subst_tyvars(&inner)) }
                } else {
                    RType::Forall { tyvar: tyvar.clone(), body: Box::new(body.subst_tyvars(map)) }
                }
            }
        }
    }

    /// Quantified type variables and the body under them.
    pub fn split_foralls(&self) -> (Vec<String>, &RType) {
        let mut vars = Vec::new();
        let mut t = self;
        while let RType::Forall { tyvar, body } = t {
            vars.push(tyvar.clone());
            t = body;
        }
        (vars, t)
    }

    /// Close over free type variables in order of first occurrence.
    pub fn generalize(self) -> RType {
        let vars = self.free_tyvars();
        vars.into_iter().rev().fold(self, |body, a| RType::Forall { tyvar: a, body: Box::new(body) })
    }

    pub fn free_tyvars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_tyvars(&mut out, &mut Vec::new());
        out
    }

    fn collect_tyvars(&self, out: &mut Vec<String>, bound: &mut Vec<String>) {
        match self {
            RType::Base { base: BaseType::TyVar(a), .. } => {
                if !bound.contains(a) && !out.contains(a) {
                    out.push(a.clone());
                }
            }
            RType::Base { base: BaseType::TyCon(_, args), .. } => {
                for a in args {
                    a.collect_tyvars(out, bound);
                }
            }
            RType::Base { .. } => {}
            RType::Fun { dom, cod, .. } => {
                dom.collect_tyvars(out, bound);
                cod.collect_tyvars(out, bound);
            }
            RType::Forall { tyvar, body } => {
                bound.push(tyvar.clone());
                body.collect_tyvars(out, bound);
                bound.pop();
            }
        }
    }

    pub fn kvars(&self) -> BTreeSet<KVarId> {
        let mut out = BTreeSet::new();
        self.for_each_pred(&mut |p| out.extend(p.kvars()));
        out
    }

    pub fn for_each_pred(&self, f: &mut impl FnMut(&Pred)) {
        match self {
            RType::Base { base, pred } => {
                f(pred);
                if let BaseType::TyCon(_, args) = base {
                    for a in args {
                        a.for_each_pred(f);
                    }
                }
            }
            RType::Fun { dom, cod, .. } => {
                dom.for_each_pred(f);
                cod.for_each_pred(f);
            }
            RType::Forall { body, .. } => body.for_each_pred(f),
        }
    }

    pub fn map_preds(&self, f: &mut impl FnMut(&Pred) -> Pred) -> RType {
        match self {
            RType::Base { base, pred } => {
                let base = match base {
                    BaseType::TyCon(c, args) => BaseType::TyCon(c.clone(), args.iter().map(|a| a.map_preds(f)).collect()),
                    b => b.clone(),
                };
                RType::Base { base, pred: f(pred) }
            }
            RType::Fun { binder, dom, cod } => RType::fun(binder.clone(), dom.map_preds(f), cod.map_preds(f)),
            RType::Forall { tyvar, body } => RType::Forall { tyvar: tyvar.clone(), body: Box::new(body.map_preds(f)) },
        }
    }

    /// Check that every refinement is a well-sorted boolean formula over
    /// the value variable and the binders in scope.
    pub fn check_wf(&self, ctx: &SortCtx, vars: &BTreeMap<Ident, Sort>) -> Result<(), SortError> {
        match self {
            RType::Base { base, pred } => {
                let mut scope = vars.clone();
                scope.insert(Ident::vv(), base.sort());
                let mut chk = SortChecker::new(ctx, &scope);
                let s = chk.sort_of(pred)?;
                if !chk.subst.unify(&s, &Sort::Bool) {
                    return Err(SortError::Mismatch { term: pred.to_string(), expected: Sort::Bool, found: s });
                }
                if let BaseType::TyCon(_, args) = base {
                    for a in args {
                        a.check_wf(ctx, vars)?;
                    }
                }
                Ok(())
            }
            RType::Fun { binder, dom, cod } => {
                dom.check_wf(ctx, vars)?;
                let mut scope = vars.clone();
                if let Some(s) = dom.sort() {
                    scope.insert(binder.clone(), s);
                }
                cod.check_wf(ctx, &scope)
            }
            RType::Forall { body, .. } => body.check_wf(ctx, vars),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, arg: bool) -> fmt::Result {
        match self {
            RType::Base { base, pred } if pred.is_true() => base.fmt_prec(f, arg),
            RType::Base { base, pred } => write!(f, "{{v:{base} | {pred}}}"),
            RType::Fun { binder, dom, cod } => {
                if arg {
                    write!(f, "(")?;
                }
                if dom.is_base() {
                    write!(f, "{binder}:")?;
                    dom.fmt_prec(f, true)?;
                } else {
                    write!(f, "(")?;
                    dom.fmt_prec(f, false)?;
                    write!(f, ")")?;
                }
                write!(f, " -> ")?;
                cod.fmt_prec(f, false)?;
                if arg {
                    write!(f, ")")?;
                }
                Ok(())
            }
            RType::Forall { tyvar, body } => {
                if arg {
                    write!(f, "(")?;
                }
                write!(f, "forall {tyvar}. ")?;
                body.fmt_prec(f, false)?;
                if arg {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl BaseType {
    pub fn sort(&self) -> Sort {
        match self {
            BaseType::Int => Sort::Int,
            BaseType::Bool => Sort::Bool,
            BaseType::TyVar(a) => Sort::TyVar(a.clone()),
            BaseType::TyCon(c, args) => Sort::Data(
                c.clone(),
                args.iter().map(|a| a.sort().unwrap_or(Sort::Int)).collect(),
            ),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, arg: bool) -> fmt::Result {
        match self {
            BaseType::Int => write!(f, "Int"),
            BaseType::Bool => write!(f, "Bool"),
            BaseType::TyVar(a) => write!(f, "{a}"),
            BaseType::TyCon(c, args) if c == LIST && args.len() == 1 => {
                write!(f, "[")?;
                args[0].fmt_prec(f, false)?;
                write!(f, "]")
            }
            BaseType::TyCon(c, args) if is_tuple_name(c) => {
                write!(f, "(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    a.fmt_prec(f, false)?;
                }
                write!(f, ")")
            }
            BaseType::TyCon(c, args) => {
                if arg && !args.is_empty() {
                    write!(f, "(")?;
                }
                write!(f, "{c}")?;
                for a in args {
                    write!(f, " ")?;
                    a.fmt_prec(f, true)?;
                }
                if arg && !args.is_empty() {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for BaseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, false)
    }
}

impl fmt::Display for RType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::pred::RelOp;

    fn ge(a: Pred, b: Pred) -> Pred {
        Pred::rel(RelOp::Ge, a, b)
    }

    fn max_sig() -> RType {
        let x = Ident::new("x", 1);
        let y = Ident::new("y", 2);
        RType::fun(
            x.clone(),
            RType::int(),
            RType::fun(
                y.clone(),
                RType::int(),
                RType::refined(BaseType::Int, Pred::and([ge(Pred::vv(), Pred::var(&x)), ge(Pred::vv(), Pred::var(&y))])),
            ),
        )
    }

    #[test]
    fn shape_of_max() {
        let t = max_sig();
        assert_eq!(t.to_string(), "x:Int -> y:Int -> {v:Int | v >= x && v >= y}");
        assert_eq!(t.shape().to_string(), "x:Int -> y:Int -> Int");
        assert_eq!(t.shape().shape(), t.shape());
        assert!(t.same_shape(&t.shape()));
    }

    #[test]
    fn dependent_range_substitution() {
        let t = max_sig();
        let RType::Fun { binder, cod, .. } = &t else { panic!() };
        let z = Ident::new("z", 7);
        let c = cod.subst1(binder, &Pred::var(&z));
        assert_eq!(c.to_string(), "y:Int -> {v:Int | v >= z && v >= y}");
    }

    #[test]
    fn substitution_avoids_capture() {
        // (y:Int -> {v | v >= x})[x := y] must not capture the binder y.
        let x = Ident::new("x", 1);
        let y = Ident::new("y", 2);
        let t = RType::fun(y.clone(), RType::int(), RType::refined(BaseType::Int, ge(Pred::vv(), Pred::var(&x))));
        let s = t.subst1(&x, &Pred::var(&y));
        let RType::Fun { binder, cod, .. } = &s else { panic!() };
        assert_ne!(binder, &y);
        assert_eq!(cod.pred().unwrap(), &ge(Pred::vv(), Pred::var(&y)));
    }

    #[test]
    fn tyvar_instantiation_strengthens() {
        let hd = Ident::new("hd", 3);
        let t = RType::con(
            "IncList",
            vec![RType::refined(BaseType::TyVar("a".into()), Pred::rel(RelOp::Le, Pred::var(&hd), Pred::vv()))],
        );
        let mut m = BTreeMap::new();
        m.insert("a".to_string(), RType::refined(BaseType::Int, ge(Pred::vv(), Pred::Int(0))));
        assert_eq!(t.subst_tyvars(&m).to_string(), "IncList {v:Int | v >= 0 && hd <= v}");
    }

    #[test]
    fn well_formedness() {
        let ctx = SortCtx::default();
        assert!(max_sig().check_wf(&ctx, &BTreeMap::new()).is_ok());
        let bad = RType::refined(BaseType::Int, ge(Pred::vv(), Pred::var(&Ident::new("q", 9))));
        assert!(bad.check_wf(&ctx, &BTreeMap::new()).is_err());
    }
}

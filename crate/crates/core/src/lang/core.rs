//! The desugared core language and the checked declarations of a program.

use std::collections::BTreeMap;
use std::fmt;

use super::ident::Ident;
use super::pred::{FunSort, Pred, SortCtx, Subst};
use super::qualifier::Qualifier;
use super::rtype::RType;
use super::sort::Sort;
use super::span::Span;

pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub id: NodeId,
    pub span: Span,
    pub kind: ExprKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Var(Ident),
    Con(String),
    Int(i64),
    Bool(bool),
    App(Box<Expr>, Box<Expr>),
    Lam(Ident, Box<Expr>),
    Let(Ident, Box<Expr>, Box<Expr>),
    LetRec(Vec<(Ident, Expr)>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    /// Case on a variable. Alternatives are in constructor declaration
    /// order and cover every constructor.
    Case(Ident, Vec<Alt>),
    PatError(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alt {
    pub con: String,
    pub binders: Vec<Ident>,
    pub body: Expr,
    pub span: Span,
}

impl Expr {
    /// Head and arguments of an application spine.
    pub fn spine(&self) -> (&Expr, Vec<&Expr>) {
        let mut args = Vec::new();
        let mut e = self;
        while let ExprKind::App(f, a) = &e.kind {
            args.push(&**a);
            e = f;
        }
        args.reverse();
        (e, args)
    }

    pub fn for_each_child(&self, f: &mut impl FnMut(&Expr)) {
        match &self.kind {
            ExprKind::Var(_) | ExprKind::Con(_) | ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::PatError(_) => {}
            ExprKind::App(a, b) | ExprKind::Let(_, a, b) => {
                f(a);
                f(b);
            }
            ExprKind::Lam(_, b) => f(b),
            ExprKind::LetRec(bs, body) => {
                for (_, e) in bs {
                    f(e);
                }
                f(body);
            }
            ExprKind::If(c, a, b) => {
                f(c);
                f(a);
                f(b);
            }
            ExprKind::Case(_, alts) => {
                for alt in alts {
                    f(&alt.body);
                }
            }
        }
    }

    /// Free variables (local and global) in order of first occurrence.
    pub fn free_vars(&self) -> Vec<Ident> {
        fn go(e: &Expr, bound: &mut Vec<Ident>, out: &mut Vec<Ident>) {
            match &e.kind {
                ExprKind::Var(x) => {
                    if !bound.contains(x) && !out.contains(x) {
                        out.push(x.clone());
                    }
                }
                ExprKind::Lam(x, b) => {
                    bound.push(x.clone());
                    go(b, bound, out);
                    bound.pop();
                }
                ExprKind::Let(x, a, b) => {
                    go(a, bound, out);
                    bound.push(x.clone());
                    go(b, bound, out);
                    bound.pop();
                }
                ExprKind::LetRec(bs, body) => {
                    let n = bound.len();
                    bound.extend(bs.iter().map(|(x, _)| x.clone()));
                    for (_, e) in bs {
                        go(e, bound, out);
                    }
                    go(body, bound, out);
                    bound.truncate(n);
                }
                ExprKind::Case(x, alts) => {
                    if !bound.contains(x) && !out.contains(x) {
                        out.push(x.clone());
                    }
                    for alt in alts {
                        let n = bound.len();
                        bound.extend(alt.binders.iter().cloned());
                        go(&alt.body, bound, out);
                        bound.truncate(n);
                    }
                }
                _ => e.for_each_child(&mut |c| go(c, bound, out)),
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// Number of nodes, used to bound interpreter and test workloads.
    pub fn size(&self) -> usize {
        let mut n = 1;
        self.for_each_child(&mut |c| n += c.size());
        n
    }
}

fn fmt_expr(e: &Expr, f: &mut fmt::Formatter<'_>, indent: usize) -> fmt::Result {
    match &e.kind {
        ExprKind::Var(x) if x.as_str().starts_with(|c: char| !c.is_alphabetic() && c != '_') => write!(f, "({x})"),
        ExprKind::Var(x) => write!(f, "{x}"),
        ExprKind::Con(c) => {
            if c.chars().next().is_some_and(|ch| ch.is_alphabetic() || ch == '[' || ch == '(') {
                write!(f, "{c}")
            } else {
                write!(f, "({c})")
            }
        }
        ExprKind::Int(n) if *n < 0 => write!(f, "({n})"),
        ExprKind::Int(n) => write!(f, "{n}"),
        ExprKind::Bool(b) => write!(f, "{}", if *b { "True" } else { "False" }),
        ExprKind::App(..) => {
            let (h, args) = e.spine();
            write!(f, "(")?;
            fmt_expr(h, f, indent)?;
            for a in args {
                write!(f, " ")?;
                fmt_expr(a, f, indent)?;
            }
            write!(f, ")")
        }
        ExprKind::Lam(x, b) => {
            write!(f, "(\\{x} -> ")?;
            fmt_expr(b, f, indent)?;
            write!(f, ")")
        }
        ExprKind::Let(x, a, b) => {
            write!(f, "let {x} = ")?;
            fmt_expr(a, f, indent + 2)?;
            write!(f, "\n{:indent$}in ", "")?;
            fmt_expr(b, f, indent)
        }
        ExprKind::LetRec(bs, body) => {
            write!(f, "letrec")?;
            for (x, e) in bs {
                write!(f, "\n{:w$}{x} = ", "", w = indent + 2)?;
                fmt_expr(e, f, indent + 4)?;
            }
            write!(f, "\n{:indent$}in ", "")?;
            fmt_expr(body, f, indent)
        }
        ExprKind::If(c, a, b) => {
            write!(f, "if ")?;
            fmt_expr(c, f, indent)?;
            write!(f, "\n{:w$}then ", "", w = indent + 2)?;
            fmt_expr(a, f, indent + 4)?;
            write!(f, "\n{:w$}else ", "", w = indent + 2)?;
            fmt_expr(b, f, indent + 4)
        }
        ExprKind::Case(x, alts) => {
            write!(f, "case {x} of")?;
            for alt in alts {
                write!(f, "\n{:w$}{}", "", alt.con, w = indent + 2)?;
                for b in &alt.binders {
                    write!(f, " {b}")?;
                }
                write!(f, " -> ")?;
                fmt_expr(&alt.body, f, indent + 4)?;
            }
            Ok(())
        }
        ExprKind::PatError(m) => write!(f, "patError {m:?}"),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_expr(self, f, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CtorDecl {
    pub name: String,
    /// Fields in order; a field's type may mention earlier field names.
    pub fields: Vec<(Ident, RType)>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataDecl {
    pub name: String,
    pub params: Vec<String>,
    pub ctors: Vec<CtorDecl>,
    pub span: Span,
}

impl DataDecl {
    pub fn ctor(&self, name: &str) -> Option<&CtorDecl> {
        self.ctors.iter().find(|c| c.name == name)
    }

    /// The unrefined type `D a1 .. an`.
    pub fn self_type(&self) -> RType {
        RType::con(&self.name, self.params.iter().map(|a| RType::tyvar(a)).collect())
    }

    /// The constructor's dependent function type, before measure
    /// strengthening of the result.
    pub fn ctor_type(&self, c: &CtorDecl) -> RType {
        c.fields
            .iter()
            .rev()
            .fold(self.self_type(), |acc, (x, t)| RType::fun(x.clone(), t.clone(), acc))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeAlias {
    pub name: String,
    pub tparams: Vec<String>,
    pub vparams: Vec<Ident>,
    pub body: RType,
    pub span: Span,
}

impl TypeAlias {
    /// Expand an alias use. Type arguments replace type parameters and
    /// value arguments replace value parameters.
    pub fn expand(&self, targs: &[RType], vargs: &[Pred]) -> Result<RType, String> {
        if targs.len() != self.tparams.len() || vargs.len() != self.vparams.len() {
            return Err(format!(
                "type alias `{}` expects {} type and {} value argument(s), got {} and {}",
                self.name,
                self.tparams.len(),
                self.vparams.len(),
                targs.len(),
                vargs.len()
            ));
        }
        let tmap: BTreeMap<String, RType> = self.tparams.iter().cloned().zip(targs.iter().cloned()).collect();
        let vmap: Subst = self.vparams.iter().cloned().zip(vargs.iter().cloned()).collect();
        Ok(self.body.subst_tyvars(&tmap).subst(&vmap))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureEq {
    pub ctor: String,
    pub binders: Vec<Ident>,
    pub body: Pred,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureDecl {
    pub name: String,
    /// Datatype the measure is defined over and its type parameters.
    pub data: String,
    pub params: Vec<String>,
    pub result: Sort,
    /// The declared argument binder (if the signature names one) and the
    /// refinement of the declared result type, over `v` and that binder.
    pub arg: Ident,
    pub result_pred: Pred,
    pub eqs: Vec<MeasureEq>,
    pub span: Span,
}

impl MeasureDecl {
    pub fn symbol(&self) -> Ident {
        Ident::global(&self.name)
    }

    pub fn arg_sort(&self) -> Sort {
        Sort::Data(self.data.clone(), self.params.iter().map(|a| Sort::TyVar(a.clone())).collect())
    }

    /// The fact implied by the result type at an application `m t`.
    pub fn side_condition(&self, t: &Pred) -> Pred {
        if self.result_pred.is_true() {
            return Pred::tt();
        }
        let mut s = Subst::new();
        s.insert(Ident::vv(), Pred::App(self.symbol(), vec![t.clone()]));
        s.insert(self.arg.clone(), t.clone());
        self.result_pred.subst(&s)
    }
}

/// A function whose body lies in the logic and may be used inside
/// refinements. Applications are expanded in place.
#[derive(Debug, Clone, PartialEq)]
pub struct InlineFn {
    pub name: String,
    pub params: Vec<Ident>,
    pub param_sorts: Vec<Sort>,
    pub result: Sort,
    pub body: Pred,
}

impl InlineFn {
    pub fn apply(&self, args: &[Pred]) -> Pred {
        let s: Subst = self.params.iter().cloned().zip(args.iter().cloned()).collect();
        self.body.subst(&s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sig {
    pub name: Ident,
    pub ty: RType,
    /// Type variables under an `Ord` context.
    pub ord: Vec<String>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binding {
    pub name: Ident,
    pub expr: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Warning {
    pub span: Span,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct Program {
    pub datas: Vec<DataDecl>,
    pub aliases: Vec<TypeAlias>,
    pub measures: Vec<MeasureDecl>,
    pub inlines: BTreeMap<String, InlineFn>,
    /// Refinement signatures (annotations), keyed by function name.
    pub sigs: BTreeMap<String, Sig>,
    /// Unrefined type signatures from ordinary code, keyed by name.
    pub shapes: BTreeMap<String, RType>,
    pub binds: Vec<Binding>,
    pub qualifiers: Vec<Qualifier>,
    pub warnings: Vec<Warning>,
    pub next_node: NodeId,
}

impl Program {
    pub fn data(&self, name: &str) -> Option<&DataDecl> {
        self.datas.iter().find(|d| d.name == name)
    }

    pub fn data_of_ctor(&self, ctor: &str) -> Option<(&DataDecl, &CtorDecl)> {
        self.datas.iter().find_map(|d| d.ctor(ctor).map(|c| (d, c)))
    }

    pub fn measure(&self, name: &str) -> Option<&MeasureDecl> {
        self.measures.iter().find(|m| m.name == name)
    }

    pub fn binding(&self, name: &str) -> Option<&Binding> {
        self.binds.iter().find(|b| b.name.as_str() == name)
    }

    /// Sorts of the measure symbols.
    pub fn sort_ctx(&self) -> SortCtx {
        let mut ctx = SortCtx::default();
        for m in &self.measures {
            ctx.funs.insert(m.name.clone(), FunSort { args: vec![m.arg_sort()], result: m.result.clone() });
        }
        ctx
    }
}

//! Constraint generation: refinement templates for unknown types and
//! subtyping obligations split down to base refinements.

use std::collections::BTreeMap;
use std::fmt;

use crate::front::desugar::BUILTINS;
use crate::front::FrontError;
use crate::hm::{Shapes, Ty};
use crate::lang::{
    ArithOp, BaseType, Expr, ExprKind, Ident, KVarApp, KVarId, MeasureDecl, NameSupply, Pred, Program, RType, RelOp,
    Sort, Span,
};
use crate::measure;

#[derive(Debug, Clone, PartialEq)]
pub enum EnvEntry {
    Bind(Ident, RType),
    Guard(Pred),
}

/// Typing environment: bindings interleaved with path guards, in order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Env {
    pub entries: Vec<EnvEntry>,
}

impl Env {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn truncate(&mut self, n: usize) {
        self.entries.truncate(n)
    }

    pub fn bind(&mut self, x: &Ident, t: RType) {
        self.entries.push(EnvEntry::Bind(x.clone(), t))
    }

    pub fn guard(&mut self, p: Pred) {
        if !p.is_true() {
            self.entries.push(EnvEntry::Guard(p))
        }
    }

    pub fn lookup(&self, x: &Ident) -> Option<&RType> {
        self.entries.iter().rev().find_map(|e| match e {
            EnvEntry::Bind(y, t) if y == x => Some(t),
            _ => None,
        })
    }

    /// Base-typed binders with their sorts, in order.
    pub fn scope(&self) -> Vec<(Ident, Sort)> {
        self.entries
            .iter()
            .filter_map(|e| match e {
                EnvEntry::Bind(x, t) => t.sort().map(|s| (x.clone(), s)),
                EnvEntry::Guard(_) => None,
            })
            .collect()
    }
}

impl fmt::Display for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            match e {
                EnvEntry::Bind(x, t) if t.is_base() => write!(f, "{x}:{t}")?,
                EnvEntry::Bind(x, t) => write!(f, "{x}:({t})")?,
                EnvEntry::Guard(p) => write!(f, "{p}")?,
            }
        }
        Ok(())
    }
}

/// A refinement variable with the sort of its value variable and the
/// binders in scope where it was created.
#[derive(Debug, Clone, PartialEq)]
pub struct KVarInfo {
    pub id: KVarId,
    pub sort: Sort,
    pub scope: Vec<(Ident, Sort)>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Subtype,
    /// A pattern-match failure that must be unreachable.
    PatError(String),
}

/// `env |- {v:sort | lhs} <: {v:sort | rhs}`. The right-hand side is a
/// single kvar application or kvar-free.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub id: usize,
    pub env: Env,
    pub sort: Sort,
    pub lhs: Pred,
    pub rhs: Pred,
    pub span: Span,
    pub origin: Origin,
    /// Top-level binding being checked.
    pub owner: String,
    /// A measure whose result fact is not assumed for its own argument.
    pub exclude: Option<(String, Ident)>,
}

impl Constraint {
    pub fn rhs_kvar(&self) -> Option<&KVarApp> {
        match &self.rhs {
            Pred::KVar(k) => Some(k),
            _ => None,
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ⊢ {} |- {} <: {}", self.span, self.env, self.lhs, self.rhs)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ConstraintSet {
    pub kvars: Vec<KVarInfo>,
    pub constraints: Vec<Constraint>,
    /// Type of each top-level binding as seen by its callers.
    pub globals: BTreeMap<String, RType>,
}

impl ConstraintSet {
    pub fn kvar(&self, k: KVarId) -> &KVarInfo {
        &self.kvars[k.0 as usize]
    }

    pub fn dump(&self, path: &str) -> String {
        let mut out = String::new();
        for c in &self.constraints {
            out.push_str(&format!("{path}:{c}\n"));
        }
        out
    }
}

const ORDERED: &[&str] = &["<", "<=", ">", ">="];

fn relop(name: &str) -> Option<RelOp> {
    Some(match name {
        "==" => RelOp::Eq,
        "/=" => RelOp::Ne,
        "<" => RelOp::Lt,
        "<=" => RelOp::Le,
        ">" => RelOp::Gt,
        ">=" => RelOp::Ge,
        _ => return None,
    })
}

fn is_ordered(t: &Ty) -> bool {
    matches!(t, Ty::Rigid(_)) || *t == Ty::int()
}

pub struct Generator<'a> {
    prog: &'a Program,
    shapes: &'a Shapes,
    supply: NameSupply,
    kvars: Vec<KVarInfo>,
    constraints: Vec<Constraint>,
    /// Types seen at call sites.
    use_types: BTreeMap<String, RType>,
    ctor_types: BTreeMap<String, RType>,
    owner: String,
    exclude: Option<(String, Ident)>,
    error: Option<FrontError>,
}

impl<'a> Generator<'a> {
    pub fn new(prog: &'a Program, shapes: &'a Shapes) -> Self {
        let mut ctor_types = BTreeMap::new();
        for d in &prog.datas {
            for c in &d.ctors {
                ctor_types.insert(c.name.clone(), measure::refined_ctor_type(prog, d, c));
            }
        }
        Generator {
            prog,
            shapes,
            supply: NameSupply::starting_at(1 << 20),
            kvars: Vec::new(),
            constraints: Vec::new(),
            use_types: BTreeMap::new(),
            ctor_types,
            owner: String::new(),
            exclude: None,
            error: None,
        }
    }

    fn fail(&mut self, span: Span, msg: impl Into<String>) {
        if self.error.is_none() {
            self.error = Some(FrontError::new(span, msg));
        }
    }

    pub fn fresh_kvar(&mut self, env: &Env, sort: Sort, extra: &[(Ident, Sort)], span: Span) -> Pred {
        let id = KVarId(self.kvars.len() as u32);
        let mut scope = env.scope();
        scope.extend(extra.iter().cloned());
        self.kvars.push(KVarInfo { id, sort, scope, span });
        Pred::kvar(id)
    }

    /// Fresh template of the given shape: a kvar at every base position.
    pub fn template(&mut self, env: &Env, ty: &Ty, span: Span) -> RType {
        self.template_in(env, ty, &mut Vec::new(), span)
    }

    fn template_in(&mut self, env: &Env, ty: &Ty, extra: &mut Vec<(Ident, Sort)>, span: Span) -> RType {
        match ty {
            Ty::Fun(a, b) => {
                let x = self.supply.fresh("x");
                let dom = self.template_in(env, a, extra, span);
                let n = extra.len();
                if let Some(s) = dom.sort() {
                    extra.push((x.clone(), s));
                }
                let cod = self.template_in(env, b, extra, span);
                extra.truncate(n);
                RType::fun(x, dom, cod)
            }
            _ => {
                let base = match ty {
                    Ty::Con(c, args) if args.is_empty() && c == "Int" => BaseType::Int,
                    Ty::Con(c, args) if args.is_empty() && c == "Bool" => BaseType::Bool,
                    Ty::Con(c, args) => {
                        BaseType::TyCon(c.clone(), args.iter().map(|a| self.template_in(env, a, extra, span)).collect())
                    }
                    Ty::Rigid(a) => BaseType::TyVar(a.clone()),
                    Ty::Var(n) => BaseType::TyVar(format!("'t{n}")),
                    Ty::Fun(..) => unreachable!(),
                };
                let k = self.fresh_kvar(env, base.sort(), extra, span);
                RType::Base { base, pred: k }
            }
        }
    }

    /// Trivially refined type of the given shape.
    pub fn plain(&self, ty: &Ty) -> RType {
        match ty {
            Ty::Fun(a, b) => RType::fun(self.supply.fresh("x"), self.plain(a), self.plain(b)),
            Ty::Con(c, args) if args.is_empty() && c == "Int" => RType::int(),
            Ty::Con(c, args) if args.is_empty() && c == "Bool" => RType::bool(),
            Ty::Con(c, args) => RType::con(c, args.iter().map(|a| self.plain(a)).collect()),
            Ty::Rigid(a) => RType::tyvar(a),
            Ty::Var(n) => RType::tyvar(&format!("'t{n}")),
        }
    }

    fn shape(&self, e: &Expr) -> Ty {
        self.shapes.exprs.get(&e.id).cloned().unwrap_or_else(|| Ty::Rigid("?".into()))
    }

    /// Instantiate outer quantifiers with templates of the occurrence's
    /// type arguments.
    fn instantiate(&mut self, t: &RType, node: u32, env: &Env, span: Span) -> RType {
        let (vars, body) = t.split_foralls();
        if vars.is_empty() {
            return t.clone();
        }
        let tys = self.shapes.insts.get(&node).cloned().unwrap_or_default();
        if tys.len() != vars.len() {
            self.fail(span, format!("internal: instantiation arity mismatch for `{t}`"));
            return body.clone();
        }
        let map = vars.iter().cloned().zip(tys.iter().map(|ty| self.template(env, ty, span))).collect();
        body.subst_tyvars(&map)
    }

    fn builtin_type(&mut self, name: &str, node: u32) -> RType {
        let x = self.supply.fresh("x");
        let y = self.supply.fresh("y");
        let (px, py) = (Pred::var(&x), Pred::var(&y));
        let v = Pred::vv;
        let bin = |x: Ident, y: Ident, dom: RType, res: RType| RType::fun(x, dom.clone(), RType::fun(y, dom, res));
        let int_res = |p: Pred| RType::refined(BaseType::Int, Pred::eq(v(), p));
        let bool_res = |p: Pred| RType::refined(BaseType::Bool, Pred::eq(v(), p));
        match name {
            "+" => bin(x, y, RType::int(), int_res(Pred::arith(ArithOp::Add, px, py))),
            "-" => bin(x, y, RType::int(), int_res(Pred::arith(ArithOp::Sub, px, py))),
            "*" => bin(x, y, RType::int(), RType::int()),
            "max" | "min" => {
                let op = if name == "max" { RelOp::Ge } else { RelOp::Le };
                let p = Pred::ite(Pred::rel(op, px.clone(), py.clone()), px, py);
                bin(x, y, RType::int(), int_res(p))
            }
            "&&" => bin(x, y, RType::bool(), bool_res(Pred::and([px, py]))),
            "||" => bin(x, y, RType::bool(), bool_res(Pred::or([px, py]))),
            "not" => RType::fun(x, RType::bool(), bool_res(Pred::not(px))),
            _ => {
                let op = relop(name).expect("builtin");
                let ty = self.shapes.insts.get(&node).and_then(|v| v.first()).cloned().unwrap_or(Ty::int());
                let a = self.plain(&ty);
                let meaningful = match ty {
                    Ty::Fun(..) => false,
                    _ => !ORDERED.contains(&name) || is_ordered(&ty),
                };
                let res = if meaningful { bool_res(Pred::rel(op, px, py)) } else { RType::bool() };
                bin(x, y, a, res)
            }
        }
    }

    fn is_builtin(&self, x: &Ident) -> bool {
        x.is_global() && BUILTINS.contains(&x.as_str()) && self.prog.binding(x.as_str()).is_none()
    }

    /// The expression as a logic term, when it is built from base-typed
    /// variables, literals, builtin operators, measures and inline
    /// functions.
    pub fn lift(&self, env: &Env, e: &Expr) -> Option<Pred> {
        match &e.kind {
            ExprKind::Int(n) => Some(Pred::Int(*n)),
            ExprKind::Bool(b) => Some(Pred::Bool(*b)),
            ExprKind::Var(x) if !x.is_global() => match env.lookup(x) {
                Some(t) if t.is_base() => Some(Pred::var(x)),
                _ => None,
            },
            ExprKind::App(..) => {
                let (head, args) = e.spine();
                let ExprKind::Var(f) = &head.kind else { return None };
                if !f.is_global() {
                    return None;
                }
                let name = f.as_str();
                if self.is_builtin(f) {
                    if name == "not" && args.len() == 1 {
                        return Some(Pred::not(self.lift(env, args[0])?));
                    }
                    if args.len() != 2 {
                        return None;
                    }
                    if ORDERED.contains(&name) && !is_ordered(&self.shape(args[0])) {
                        return None;
                    }
                    if matches!(self.shape(args[0]), Ty::Fun(..)) {
                        return None;
                    }
                    let a = self.lift(env, args[0])?;
                    let b = self.lift(env, args[1])?;
                    return Some(match name {
                        "+" => Pred::arith(ArithOp::Add, a, b),
                        "-" => Pred::arith(ArithOp::Sub, a, b),
                        "*" if matches!(a, Pred::Int(_)) || matches!(b, Pred::Int(_)) => Pred::arith(ArithOp::Mul, a, b),
                        "*" => return None,
                        "max" => Pred::ite(Pred::rel(RelOp::Ge, a.clone(), b.clone()), a, b),
                        "min" => Pred::ite(Pred::rel(RelOp::Le, a.clone(), b.clone()), a, b),
                        "&&" => Pred::and([a, b]),
                        "||" => Pred::or([a, b]),
                        _ => Pred::rel(relop(name)?, a, b),
                    });
                }
                if let Some(m) = self.prog.measure(name) {
                    if args.len() == 1 {
                        return Some(Pred::App(m.symbol(), vec![self.lift(env, args[0])?]));
                    }
                    return None;
                }
                if let Some(inl) = self.prog.inlines.get(name) {
                    if args.len() == inl.params.len() {
                        let ps = args.iter().map(|a| self.lift(env, a)).collect::<Option<Vec<_>>>()?;
                        return Some(inl.apply(&ps));
                    }
                }
                None
            }
            _ => None,
        }
    }

    fn push(&mut self, env: &Env, sort: Sort, lhs: Pred, rhs: Pred, span: Span, origin: Origin) {
        let id = self.constraints.len();
        self.constraints.push(Constraint {
            id,
            env: env.clone(),
            sort,
            lhs,
            rhs,
            span,
            origin,
            owner: self.owner.clone(),
            exclude: self.exclude.clone(),
        });
    }

    /// One constraint per kvar conjunct of `rhs` and one for the rest.
    fn emit(&mut self, env: &Env, sort: Sort, lhs: &Pred, rhs: &Pred, span: Span) {
        let mut concrete = Vec::new();
        for c in rhs.clone().into_conjuncts() {
            if let Pred::KVar(_) = c {
                self.push(env, sort.clone(), lhs.clone(), c, span, Origin::Subtype);
            } else {
                concrete.push(c);
            }
        }
        if !concrete.is_empty() {
            self.push(env, sort, lhs.clone(), Pred::and(concrete), span, Origin::Subtype);
        }
    }

    /// Split `t1 <: t2` into base constraints.
    pub fn subtype(&mut self, env: &mut Env, t1: &RType, t2: &RType, span: Span) {
        match (t1, t2) {
            (RType::Forall { body, .. }, _) => self.subtype(env, body, t2, span),
            (_, RType::Forall { body, .. }) => self.subtype(env, t1, body, span),
            (RType::Base { base: b1, pred: p1 }, RType::Base { base: b2, pred: p2 }) => {
                match (b1, b2) {
                    (BaseType::TyCon(c1, a1), BaseType::TyCon(c2, a2)) if c1 == c2 && a1.len() == a2.len() => {
                        for (x, y) in a1.iter().zip(a2) {
                            self.subtype(env, x, y, span);
                        }
                    }
                    (BaseType::TyCon(..), _) | (_, BaseType::TyCon(..)) => {
                        self.fail(span, format!("internal: shape mismatch `{t1}` <: `{t2}`"));
                        return;
                    }
                    _ => {}
                }
                if p2.is_true() {
                    return;
                }
                self.emit(env, b2.sort(), p1, p2, span);
            }
            (RType::Fun { binder: x1, dom: d1, cod: c1 }, RType::Fun { binder: x2, dom: d2, cod: c2 }) => {
                self.subtype(env, d2, d1, span);
                let mark = env.len();
                env.bind(x2, (**d2).clone());
                let c1 = if x1 == x2 { (**c1).clone() } else { c1.subst1(x1, &Pred::var(x2)) };
                self.subtype(env, &c1, c2, span);
                env.truncate(mark);
            }
            _ => self.fail(span, format!("internal: shape mismatch `{t1}` <: `{t2}`")),
        }
    }

    fn var_type(&mut self, env: &Env, e: &Expr, x: &Ident) -> RType {
        if let Some(t) = env.lookup(x).cloned() {
            let t = self.instantiate(&t, e.id, env, e.span);
            if t.is_base() {
                return t.with_pred(Pred::eq(Pred::vv(), Pred::var(x)));
            }
            return t;
        }
        if x.is_global() {
            if let Some(t) = self.use_types.get(x.as_str()).cloned() {
                return self.instantiate(&t, e.id, env, e.span);
            }
            if BUILTINS.contains(&x.as_str()) {
                return self.builtin_type(x.as_str(), e.id);
            }
        }
        self.fail(e.span, format!("internal: unbound variable `{x}`"));
        self.plain(&self.shape(e))
    }

    /// Synthesize a type, extending `env` with bindings for intermediate
    /// results that the type refers to.
    pub fn synth(&mut self, env: &mut Env, e: &Expr) -> RType {
        if !matches!(e.kind, ExprKind::Var(_)) {
            if let Some(p) = self.lift(env, e) {
                let t = self.plain(&self.shape(e));
                return t.with_pred(Pred::eq(Pred::vv(), p));
            }
        }
        match &e.kind {
            ExprKind::Var(x) => self.var_type(env, e, x),
            ExprKind::Con(c) => match self.ctor_types.get(c).cloned() {
                Some(t) => self.instantiate(&t, e.id, env, e.span),
                None => {
                    self.fail(e.span, format!("internal: unknown constructor `{c}`"));
                    self.plain(&self.shape(e))
                }
            },
            ExprKind::Int(_) | ExprKind::Bool(_) => unreachable!("literals are liftable"),
            ExprKind::App(..) => self.synth_app(env, e),
            ExprKind::PatError(msg) => {
                self.dead(env, e.span, msg);
                let t = self.plain(&self.shape(e));
                t.with_pred(Pred::ff())
            }
            _ => {
                let t = self.template(env, &self.shape(e), e.span);
                self.check(env, e, &t);
                t
            }
        }
    }

    fn synth_app(&mut self, env: &mut Env, e: &Expr) -> RType {
        let (head, args) = e.spine();
        let mut ft = self.synth(env, head);
        for a in args {
            let RType::Fun { binder, dom, cod } = ft else {
                self.fail(e.span, format!("internal: applying non-function `{ft}`"));
                return self.plain(&self.shape(e));
            };
            if !dom.is_base() {
                if matches!(a.kind, ExprKind::Lam(..)) {
                    self.check(env, a, &dom);
                } else {
                    let ta = self.synth(env, a);
                    self.subtype(env, &ta, &dom, e.span);
                }
                ft = *cod;
                continue;
            }
            let ta = self.synth(env, a);
            self.subtype(env, &ta, &dom, e.span);
            if !cod_mentions(&cod, &binder) {
                ft = *cod;
            } else if let Some(p) = self.lift(env, a) {
                ft = cod.subst1(&binder, &p);
            } else {
                let z = self.supply.fresh("z");
                env.bind(&z, ta);
                ft = cod.subst1(&binder, &Pred::var(&z));
            }
        }
        ft
    }

    fn dead(&mut self, env: &Env, span: Span, msg: &str) {
        self.push(env, Sort::Bool, Pred::tt(), Pred::ff(), span, Origin::PatError(msg.to_string()));
    }

    /// The path condition established by a boolean expression.
    fn condition(&mut self, env: &mut Env, c: &Expr) -> Pred {
        if let Some(p) = self.lift(env, c) {
            return p;
        }
        let t = self.synth(env, c);
        let z = self.supply.fresh("cond");
        env.bind(&z, t);
        Pred::var(&z)
    }

    /// Bind case alternative fields and the constructor's measure facts.
    fn unfold(&mut self, env: &mut Env, x: &Ident, con: &str, binders: &[Ident], span: Span) {
        let scrut = env.lookup(x).cloned();
        let found = self.prog.data_of_ctor(con).map(|(d, c)| (d.clone(), c.clone()));
        let Some((d, c)) = found else {
            self.fail(span, format!("internal: unknown constructor `{con}`"));
            return;
        };
        let targs: Vec<RType> = match &scrut {
            Some(RType::Base { base: BaseType::TyCon(name, args), .. }) if *name == d.name => args.clone(),
            _ => {
                // Scrutinee of unknown refinement: fall back to its shape.
                let ty = self.shapes.binders.get(x).cloned();
                match ty {
                    Some(Ty::Con(_, args)) => args.iter().map(|a| self.plain(a)).collect(),
                    _ => d.params.iter().map(|a| RType::tyvar(a)).collect(),
                }
            }
        };
        let tmap: BTreeMap<String, RType> = d.params.iter().cloned().zip(targs).collect();
        let mut s = crate::lang::Subst::new();
        for ((f, ft), b) in c.fields.iter().zip(binders) {
            let t = ft.subst_tyvars(&tmap).subst(&s);
            env.bind(b, t);
            s.insert(f.clone(), Pred::var(b));
        }
        let fact = measure::ctor_refinement(self.prog, &d, &c).subst(&s).subst1(&Ident::vv(), &Pred::var(x));
        env.guard(fact);
    }

    pub fn check(&mut self, env: &mut Env, e: &Expr, t: &RType) {
        if let RType::Forall { body, .. } = t {
            return self.check(env, e, body);
        }
        let mark = env.len();
        match (&e.kind, t) {
            (ExprKind::Lam(x, body), RType::Fun { binder, dom, cod }) => {
                env.bind(x, (**dom).clone());
                let cod = if x == binder { (**cod).clone() } else { cod.subst1(binder, &Pred::var(x)) };
                self.check(env, body, &cod);
            }
            (ExprKind::If(c, a, b), _) => {
                let g = self.condition(env, c);
                let inner = env.len();
                env.guard(g.clone());
                self.check(env, a, t);
                env.truncate(inner);
                env.guard(Pred::not(g));
                self.check(env, b, t);
            }
            (ExprKind::Case(x, alts), _) => {
                for alt in alts {
                    let inner = env.len();
                    self.unfold(env, x, &alt.con, &alt.binders, alt.span);
                    self.check(env, &alt.body, t);
                    env.truncate(inner);
                }
            }
            (ExprKind::Let(x, rhs, body), _) => {
                let tx = self.synth(env, rhs);
                let tx = self.generalize_local(x, tx);
                env.bind(x, tx);
                self.check(env, body, t);
            }
            (ExprKind::LetRec(bs, body), _) => {
                let mut tys = Vec::new();
                for (x, rhs) in bs {
                    let ty = self.shapes.binders.get(x).cloned().unwrap_or_else(|| self.shape(rhs));
                    let tx = self.template(env, &ty, rhs.span);
                    let tx = self.generalize_local(x, tx);
                    tys.push(tx);
                }
                for ((x, _), tx) in bs.iter().zip(&tys) {
                    env.bind(x, tx.clone());
                }
                for ((_, rhs), tx) in bs.iter().zip(&tys) {
                    self.check(env, rhs, tx);
                }
                self.check(env, body, t);
            }
            (ExprKind::PatError(msg), _) => self.dead(env, e.span, msg),
            _ => {
                let s = self.synth(env, e);
                self.subtype(env, &s, t, e.span);
            }
        }
        env.truncate(mark);
    }

    fn generalize_local(&self, x: &Ident, t: RType) -> RType {
        match self.shapes.local_schemes.get(x) {
            Some(s) => s
                .vars
                .iter()
                .rev()
                .fold(t, |body, a| RType::Forall { tyvar: a.clone(), body: Box::new(body) }),
            None => t,
        }
    }
}

fn cod_mentions(t: &RType, x: &Ident) -> bool {
    let mut found = false;
    t.for_each_pred(&mut |p| found |= p.mentions(x) || kvar_mentions(p, x));
    found
}

/// Kvars may be solved with qualifiers over any variable in scope, so a
/// kvar occurrence counts as mentioning every binder.
fn kvar_mentions(p: &Pred, _x: &Ident) -> bool {
    p.has_kvars()
}

/// `m v = m(x)` strengthening of a measure's result type at use sites.
fn strengthen_measure(t: &RType, m: &MeasureDecl) -> RType {
    match t {
        RType::Forall { tyvar, body } => {
            RType::Forall { tyvar: tyvar.clone(), body: Box::new(strengthen_measure(body, m)) }
        }
        RType::Fun { binder, dom, cod } if cod.is_base() => RType::fun(
            binder.clone(),
            (**dom).clone(),
            cod.strengthen(Pred::eq(Pred::vv(), Pred::App(m.symbol(), vec![Pred::var(binder)]))),
        ),
        _ => t.clone(),
    }
}

fn first_param(e: &Expr) -> Option<Ident> {
    match &e.kind {
        ExprKind::Lam(x, _) => Some(x.clone()),
        _ => None,
    }
}

/// Generate constraints for every binding of the program.
pub fn generate(prog: &Program, shapes: &Shapes) -> Result<ConstraintSet, FrontError> {
    let mut g = Generator::new(prog, shapes);
    let empty = Env::default();
    let mut body_types = BTreeMap::new();
    for b in &prog.binds {
        let name = b.name.as_str();
        let scheme = &shapes.globals[name];
        let body = if let Some(sig) = prog.sigs.get(name) {
            sig.ty.clone()
        } else if let Some(inl) = prog.inlines.get(name) {
            let (args, res) = scheme.ty.uncurry();
            let res = g.plain(res).with_pred(Pred::eq(Pred::vv(), inl.body.clone()));
            let t = inl
                .params
                .iter()
                .zip(args)
                .rev()
                .fold(res, |acc, (x, a)| RType::fun(x.clone(), g.plain(a), acc));
            close(t, &scheme.vars)
        } else {
            let t = g.template(&empty, &scheme.ty, b.span);
            close(t, &scheme.vars)
        };
        let use_ty = match prog.measure(name) {
            Some(m) => strengthen_measure(&body, m),
            None => body.clone(),
        };
        g.use_types.insert(name.to_string(), use_ty);
        body_types.insert(name.to_string(), body);
    }
    for b in &prog.binds {
        let name = b.name.as_str();
        g.owner = name.to_string();
        g.exclude = prog.measure(name).and_then(|m| first_param(&b.expr).map(|x| (m.name.clone(), x)));
        let t = body_types[name].clone();
        g.check(&mut Env::default(), &b.expr, &t);
    }
    if let Some(e) = g.error {
        return Err(e);
    }
    Ok(ConstraintSet { kvars: g.kvars, constraints: g.constraints, globals: g.use_types })
}

fn close(t: RType, vars: &[String]) -> RType {
    vars.iter().rev().fold(t, |body, a| RType::Forall { tyvar: a.clone(), body: Box::new(body) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::front::load;
    use crate::hm::infer_program;

    fn gen(src: &str) -> ConstraintSet {
        let p = load("t.lm", src).unwrap();
        let s = infer_program(&p).unwrap();
        generate(&p, &s).unwrap()
    }

    const MAX: &str = "{-@ max :: x:Int -> y:Int -> {v:Int | v >= x && v >= y} @-}\nmax x y = if x >= y then x else y\n";

    #[test]
    fn max_obligations() {
        let cs = gen(MAX);
        let lines: Vec<String> = cs.constraints.iter().map(|c| c.to_string()).collect();
        assert_eq!(
            lines,
            vec![
                "2:26 ⊢ x:Int, y:Int, x >= y |- v = x <: v >= x && v >= y",
                "2:33 ⊢ x:Int, y:Int, not (x >= y) |- v = y <: v >= x && v >= y",
            ]
        );
        assert!(cs.kvars.is_empty());
    }

    #[test]
    fn literal_against_singleton() {
        let cs = gen("{-@ five :: {v:Int | v = 5} @-}\nfive = 5\n");
        assert_eq!(cs.constraints.len(), 1);
        let c = &cs.constraints[0];
        assert!(c.env.is_empty());
        assert_eq!(c.lhs.to_string(), "v = 5");
        assert_eq!(c.rhs.to_string(), "v = 5");
    }

    #[test]
    fn head_dead_branch_env() {
        let src = "{-@ measure notEmpty @-}\nnotEmpty :: [a] -> Bool\nnotEmpty [] = False\nnotEmpty (_:_) = True\n\
                   {-@ head :: {v:[a] | notEmpty v} -> a @-}\nhead (x:_) = x\n";
        let cs = gen(src);
        let dead: Vec<&Constraint> =
            cs.constraints.iter().filter(|c| matches!(c.origin, Origin::PatError(_))).collect();
        assert_eq!(dead.len(), 1);
        let env = dead[0].env.to_string();
        assert!(env.contains("{v:[a] | notEmpty v}"), "{env}");
        assert!(env.ends_with("notEmpty arg = false"), "{env}");
        assert!(dead[0].rhs.is_false());
    }

    #[test]
    fn function_subtyping_splits_contravariantly() {
        let p = load("t.lm", "f = 1\n").unwrap();
        let s = infer_program(&p).unwrap();
        let mut g = Generator::new(&p, &s);
        let x = Ident::new("x", 1);
        let ge = |n| Pred::rel(RelOp::Ge, Pred::vv(), Pred::Int(n));
        let t1 = RType::fun(
            x.clone(),
            RType::refined(BaseType::Int, ge(0)),
            RType::refined(BaseType::Int, Pred::rel(RelOp::Ge, Pred::vv(), Pred::var(&x))),
        );
        let t2 = RType::fun(x.clone(), RType::refined(BaseType::Int, ge(1)), RType::refined(BaseType::Int, ge(0)));
        g.subtype(&mut Env::default(), &t1, &t2, Span::dummy());
        let cs: Vec<String> = g.constraints.iter().map(|c| format!("{} |- {} <: {}", c.env, c.lhs, c.rhs)).collect();
        assert_eq!(cs, vec![" |- v >= 1 <: v >= 0", "x:{v:Int | v >= 1} |- v >= x <: v >= 0"]);
    }

    #[test]
    fn polymorphic_instantiation_gets_kvars() {
        let src = "{-@ data IncList a = Emp | (:<) { hd::a, tl::IncList {v:a | hd <= v}} @-}\n\
                   insert :: a -> IncList a -> IncList a\n\
                   insert y Emp = y :< Emp\n\
                   insert y (x :< xs) | y <= x = y :< x :< xs\n\
                   \x20                 | otherwise = x :< insert y xs\n";
        let cs = gen(src);
        assert!(!cs.kvars.is_empty());
        assert!(cs.kvars.iter().all(|k| matches!(k.sort, Sort::TyVar(_))));
        assert!(cs.constraints.iter().all(|c| c.rhs.kvars().len() <= 1));
    }

    #[test]
    fn unsigned_function_template() {
        let cs = gen("inc x = x + 1\nuse = inc 2\n");
        let t = cs.globals["inc"].to_string();
        assert!(t.starts_with("x:{v:Int | $k0} -> {v:Int | $k1}") || t.contains("$k"), "{t}");
        assert_eq!(cs.kvars[1].scope.len(), 1);
    }
}

//! Hindley-Milner shape inference with let-polymorphism.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::front::FrontError;
use crate::lang::{BaseType, Expr, ExprKind, Ident, NodeId, Program, RType, Span};

/// An unrefined type. `Rigid` is a named type variable that only unifies
/// with itself: a signature variable or a generalized variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ty {
    Var(u32),
    Rigid(String),
    Con(String, Vec<Ty>),
    Fun(Box<Ty>, Box<Ty>),
}

impl Ty {
    pub fn int() -> Ty {
        Ty::Con("Int".into(), vec![])
    }

    pub fn bool() -> Ty {
        Ty::Con("Bool".into(), vec![])
    }

    pub fn fun(a: Ty, b: Ty) -> Ty {
        Ty::Fun(Box::new(a), Box::new(b))
    }

    pub fn funs(args: Vec<Ty>, res: Ty) -> Ty {
        args.into_iter().rev().fold(res, |acc, a| Ty::fun(a, acc))
    }

    /// Erase a refinement type to its shape. Quantifiers are dropped and
    /// their variables become rigid.
    pub fn from_rtype(t: &RType) -> Ty {
        match t {
            RType::Base { base, .. } => match base {
                BaseType::Int => Ty::int(),
                BaseType::Bool => Ty::bool(),
                BaseType::TyVar(a) => Ty::Rigid(a.clone()),
                BaseType::TyCon(c, args) => Ty::Con(c.clone(), args.iter().map(Ty::from_rtype).collect()),
            },
            RType::Fun { dom, cod, .. } => Ty::fun(Ty::from_rtype(dom), Ty::from_rtype(cod)),
            RType::Forall { body, .. } => Ty::from_rtype(body),
        }
    }

    pub fn vars(&self, out: &mut BTreeSet<u32>) {
        match self {
            Ty::Var(n) => {
                out.insert(*n);
            }
            Ty::Rigid(_) => {}
            Ty::Con(_, args) => args.iter().for_each(|a| a.vars(out)),
            Ty::Fun(a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }

    pub fn rigids(&self, out: &mut Vec<String>) {
        match self {
            Ty::Rigid(a) => {
                if !out.contains(a) {
                    out.push(a.clone())
                }
            }
            Ty::Var(_) => {}
            Ty::Con(_, args) => args.iter().for_each(|a| a.rigids(out)),
            Ty::Fun(a, b) => {
                a.rigids(out);
                b.rigids(out);
            }
        }
    }

    pub fn subst_rigid(&self, map: &BTreeMap<String, Ty>) -> Ty {
        match self {
            Ty::Rigid(a) => map.get(a).cloned().unwrap_or_else(|| self.clone()),
            Ty::Var(_) => self.clone(),
            Ty::Con(c, args) => Ty::Con(c.clone(), args.iter().map(|a| a.subst_rigid(map)).collect()),
            Ty::Fun(a, b) => Ty::fun(a.subst_rigid(map), b.subst_rigid(map)),
        }
    }

    /// Split a function type into argument types and result.
    pub fn uncurry(&self) -> (Vec<&Ty>, &Ty) {
        let mut args = Vec::new();
        let mut t = self;
        while let Ty::Fun(a, b) = t {
            args.push(&**a);
            t = b;
        }
        (args, t)
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            Ty::Var(n) => write!(f, "?{n}"),
            Ty::Rigid(a) => write!(f, "{a}"),
            Ty::Con(c, args) if c == crate::lang::LIST && args.len() == 1 => {
                write!(f, "[")?;
                args[0].fmt_prec(f, 0)?;
                write!(f, "]")
            }
            Ty::Con(c, args) if crate::lang::is_tuple_name(c) => {
                write!(f, "(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    a.fmt_prec(f, 0)?;
                }
                write!(f, ")")
            }
            Ty::Con(c, args) if args.is_empty() => write!(f, "{c}"),
            Ty::Con(c, args) => {
                if prec > 1 {
                    write!(f, "(")?;
                }
                write!(f, "{c}")?;
                for a in args {
                    write!(f, " ")?;
                    a.fmt_prec(f, 2)?;
                }
                if prec > 1 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Ty::Fun(a, b) => {
                if prec > 0 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 1)?;
                write!(f, " -> ")?;
                b.fmt_prec(f, 0)?;
                if prec > 0 {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// A type scheme. Quantified variables appear in `ty` as `Rigid`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scheme {
    pub vars: Vec<String>,
    pub ty: Ty,
}

impl Scheme {
    pub fn mono(ty: Ty) -> Scheme {
        Scheme { vars: Vec::new(), ty }
    }

    pub fn from_rtype(t: &RType) -> Scheme {
        let (vars, body) = t.split_foralls();
        let ty = Ty::from_rtype(body);
        let mut vars = vars;
        ty.rigids(&mut vars);
        Scheme { vars, ty }
    }
}

impl fmt::Display for Scheme {
    /// Quantified variables are renamed to `a`, `b`, ... in order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut order = Vec::new();
        self.ty.rigids(&mut order);
        order.retain(|v| self.vars.contains(v));
        let mut used: BTreeSet<String> = BTreeSet::new();
        let mut free = Vec::new();
        self.ty.rigids(&mut free);
        free.retain(|v| !self.vars.contains(v));
        used.extend(free);
        let mut map = BTreeMap::new();
        let mut next = 0u32;
        for v in &order {
            let name = loop {
                let n = next;
                next += 1;
                let s = if n < 26 {
                    ((b'a' + n as u8) as char).to_string()
                } else {
                    format!("t{n}")
                };
                if !used.contains(&s) {
                    break s;
                }
            };
            map.insert(v.clone(), Ty::Rigid(name));
        }
        write!(f, "{}", self.ty.subst_rigid(&map))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnifyError {
    Clash(Ty, Ty),
    Occurs(u32, Ty),
}

impl fmt::Display for UnifyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnifyError::Clash(a, b) => write!(f, "cannot match `{a}` with `{b}`"),
            UnifyError::Occurs(n, t) => write!(f, "occurs check: cannot construct the infinite type ?{n} = {t}"),
        }
    }
}

/// An idempotent substitution of unification variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Subst {
    map: BTreeMap<u32, Ty>,
}

impl Subst {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, n: u32) -> Option<&Ty> {
        self.map.get(&n)
    }

    pub fn domain(&self) -> impl Iterator<Item = u32> + '_ {
        self.map.keys().copied()
    }

    pub fn apply(&self, t: &Ty) -> Ty {
        match t {
            Ty::Var(n) => self.map.get(n).cloned().unwrap_or_else(|| t.clone()),
            Ty::Rigid(_) => t.clone(),
            Ty::Con(c, args) => Ty::Con(c.clone(), args.iter().map(|a| self.apply(a)).collect()),
            Ty::Fun(a, b) => Ty::fun(self.apply(a), self.apply(b)),
        }
    }

    fn bind(&mut self, n: u32, t: Ty) {
        let single = Subst { map: BTreeMap::from([(n, t.clone())]) };
        for v in self.map.values_mut() {
            *v = single.apply(v);
        }
        self.map.insert(n, t);
    }

    /// Extend the substitution to a unifier of `a` and `b`.
    pub fn unify(&mut self, a: &Ty, b: &Ty) -> Result<(), UnifyError> {
        let a = self.apply(a);
        let b = self.apply(b);
        match (&a, &b) {
            (Ty::Var(x), Ty::Var(y)) if x == y => Ok(()),
            (Ty::Var(x), t) | (t, Ty::Var(x)) => {
                let mut fv = BTreeSet::new();
                t.vars(&mut fv);
                if fv.contains(x) {
                    return Err(UnifyError::Occurs(*x, t.clone()));
                }
                self.bind(*x, t.clone());
                Ok(())
            }
            (Ty::Rigid(x), Ty::Rigid(y)) if x == y => Ok(()),
            (Ty::Con(c, xs), Ty::Con(d, ys)) if c == d && xs.len() == ys.len() => {
                for (x, y) in xs.iter().zip(ys) {
                    self.unify(x, y)?;
                }
                Ok(())
            }
            (Ty::Fun(a1, b1), Ty::Fun(a2, b2)) => {
                self.unify(a1, a2)?;
                self.unify(b1, b2)
            }
            _ => Err(UnifyError::Clash(a, b)),
        }
    }
}

/// Most general unifier of two types.
pub fn unify(a: &Ty, b: &Ty) -> Result<Subst, UnifyError> {
    let mut s = Subst::new();
    s.unify(a, b)?;
    Ok(s)
}

/// Result of inference over a whole program. Every type is fully resolved;
/// leftover unification variables are reported as rigid `'tN`.
#[derive(Debug, Clone, Default)]
pub struct Shapes {
    pub exprs: BTreeMap<NodeId, Ty>,
    /// Monotypes of local binders.
    pub binders: BTreeMap<Ident, Ty>,
    /// Schemes of generalized local bindings.
    pub local_schemes: BTreeMap<Ident, Scheme>,
    /// Instantiation of the quantified variables at each occurrence of a
    /// polymorphic variable or constructor, in scheme order.
    pub insts: BTreeMap<NodeId, Vec<Ty>>,
    /// Schemes of top-level bindings, builtins and constructors.
    pub globals: BTreeMap<String, Scheme>,
}

impl Shapes {
    pub fn ty(&self, e: &Expr) -> &Ty {
        &self.exprs[&e.id]
    }

    /// Lines `name :: scheme` for the program's bindings in source order.
    pub fn dump(&self, prog: &Program) -> String {
        let mut out = String::new();
        for b in &prog.binds {
            out.push_str(&format!("{} :: {}\n", b.name, self.globals[b.name.as_str()]));
        }
        out
    }
}

fn rigid_name(n: u32) -> String {
    format!("'t{n}")
}

pub fn builtin_scheme(name: &str) -> Option<Scheme> {
    let a = || Ty::Rigid("a".into());
    let int2 = || Ty::funs(vec![Ty::int(), Ty::int()], Ty::int());
    let s = match name {
        "+" | "-" | "*" | "max" | "min" => Scheme::mono(int2()),
        "==" | "/=" | "<" | "<=" | ">" | ">=" => {
            Scheme { vars: vec!["a".into()], ty: Ty::funs(vec![a(), a()], Ty::bool()) }
        }
        "&&" | "||" => Scheme::mono(Ty::funs(vec![Ty::bool(), Ty::bool()], Ty::bool())),
        "not" => Scheme::mono(Ty::fun(Ty::bool(), Ty::bool())),
        _ => return None,
    };
    Some(s)
}

struct Infer<'a> {
    prog: &'a Program,
    subst: Subst,
    next: u32,
    globals: BTreeMap<String, Scheme>,
    ctors: BTreeMap<String, Scheme>,
    /// Local environment, innermost last.
    env: Vec<(Ident, Scheme)>,
    exprs: BTreeMap<NodeId, Ty>,
    binders: BTreeMap<Ident, Ty>,
    local_schemes: BTreeMap<Ident, Scheme>,
    insts: BTreeMap<NodeId, Vec<Ty>>,
}

fn err<T>(span: Span, msg: impl Into<String>) -> Result<T, FrontError> {
    Err(FrontError::new(span, msg))
}

impl<'a> Infer<'a> {
    fn fresh(&mut self) -> Ty {
        self.next += 1;
        Ty::Var(self.next)
    }

    fn instantiate(&mut self, s: &Scheme) -> (Ty, Vec<Ty>) {
        let args: Vec<Ty> = s.vars.iter().map(|_| self.fresh()).collect();
        let map = s.vars.iter().cloned().zip(args.iter().cloned()).collect();
        (s.ty.subst_rigid(&map), args)
    }

    fn unify_at(&mut self, span: Span, a: &Ty, b: &Ty) -> Result<(), FrontError> {
        self.subst.unify(a, b).map_err(|e| match e {
            UnifyError::Clash(..) => FrontError::new(
                span,
                format!(
                    "type mismatch: expected `{}`, found `{}` ({e})",
                    self.subst.apply(b),
                    self.subst.apply(a)
                ),
            ),
            UnifyError::Occurs(..) => FrontError::new(span, e.to_string()),
        })
    }

    fn env_vars(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        for (_, s) in &self.env {
            self.subst.apply(&s.ty).vars(&mut out);
        }
        out
    }

    fn generalize(&self, t: &Ty) -> Scheme {
        let t = self.subst.apply(t);
        let env = self.env_vars();
        let mut fv = BTreeSet::new();
        t.vars(&mut fv);
        let mut map = BTreeMap::new();
        let mut vars = Vec::new();
        // Order quantified variables by first occurrence for stable output.
        let mut order = Vec::new();
        first_vars(&t, &mut order);
        for n in order {
            if fv.contains(&n) && !env.contains(&n) {
                map.insert(n, Ty::Rigid(rigid_name(n)));
                vars.push(rigid_name(n));
            }
        }
        Scheme { vars, ty: subst_vars(&t, &map) }
    }

    fn lookup(&self, x: &Ident) -> Option<Scheme> {
        if let Some((_, s)) = self.env.iter().rev().find(|(y, _)| y == x) {
            return Some(s.clone());
        }
        if x.is_global() {
            if let Some(s) = self.globals.get(x.as_str()) {
                return Some(s.clone());
            }
            return builtin_scheme(x.as_str());
        }
        None
    }

    fn bind_mono(&mut self, x: &Ident, t: Ty) {
        self.binders.insert(x.clone(), t.clone());
        self.env.push((x.clone(), Scheme::mono(t)));
    }

    fn infer(&mut self, e: &Expr) -> Result<Ty, FrontError> {
        let t = match &e.kind {
            ExprKind::Int(_) => Ty::int(),
            ExprKind::Bool(_) => Ty::bool(),
            ExprKind::Var(x) => {
                let Some(s) = self.lookup(x) else {
                    return err(e.span, format!("unbound variable `{x}`"));
                };
                let (t, args) = self.instantiate(&s);
                if !args.is_empty() {
                    self.insts.insert(e.id, args);
                }
                t
            }
            ExprKind::Con(c) => {
                let Some(s) = self.ctors.get(c).cloned() else {
                    return err(e.span, format!("unknown constructor `{c}`"));
                };
                let (t, args) = self.instantiate(&s);
                self.insts.insert(e.id, args);
                t
            }
            ExprKind::App(f, a) => {
                let tf = self.infer(f)?;
                let ta = self.infer(a)?;
                let r = self.fresh();
                self.unify_at(a.span, &Ty::fun(ta, r.clone()), &tf).map_err(|mut er| {
                    er.span = e.span;
                    er
                })?;
                r
            }
            ExprKind::Lam(x, body) => {
                let a = self.fresh();
                self.bind_mono(x, a.clone());
                let b = self.infer(body);
                self.env.pop();
                Ty::fun(a, b?)
            }
            ExprKind::Let(x, rhs, body) => {
                let t1 = self.infer(rhs)?;
                let s = self.generalize(&t1);
                self.binders.insert(x.clone(), t1);
                if !s.vars.is_empty() {
                    self.local_schemes.insert(x.clone(), s.clone());
                }
                self.env.push((x.clone(), s));
                let t = self.infer(body);
                self.env.pop();
                t?
            }
            ExprKind::LetRec(bs, body) => {
                let n = self.env.len();
                let mut tys = Vec::new();
                for (x, _) in bs {
                    let a = self.fresh();
                    tys.push(a.clone());
                    self.env.push((x.clone(), Scheme::mono(a)));
                }
                for ((_, rhs), a) in bs.iter().zip(&tys) {
                    let t = self.infer(rhs)?;
                    self.unify_at(rhs.span, &t, a)?;
                }
                self.env.truncate(n);
                let schemes: Vec<Scheme> = tys.iter().map(|t| self.generalize(t)).collect();
                for ((x, _), (t, s)) in bs.iter().zip(tys.iter().zip(schemes)) {
                    self.binders.insert(x.clone(), t.clone());
                    if !s.vars.is_empty() {
                        self.local_schemes.insert(x.clone(), s.clone());
                    }
                    self.env.push((x.clone(), s));
                }
                let t = self.infer(body);
                self.env.truncate(n);
                t?
            }
            ExprKind::If(c, a, b) => {
                let tc = self.infer(c)?;
                self.unify_at(c.span, &tc, &Ty::bool())?;
                let ta = self.infer(a)?;
                let tb = self.infer(b)?;
                self.unify_at(b.span, &tb, &ta)?;
                ta
            }
            ExprKind::Case(x, alts) => {
                let Some(s) = self.lookup(x) else {
                    return err(e.span, format!("unbound variable `{x}`"));
                };
                let (tx, _) = self.instantiate(&s);
                let res = self.fresh();
                for alt in alts {
                    let Some(cs) = self.ctors.get(&alt.con).cloned() else {
                        return err(alt.span, format!("unknown constructor `{}`", alt.con));
                    };
                    let (ct, _) = self.instantiate(&cs);
                    let (fields, result) = ct.uncurry();
                    if fields.len() != alt.binders.len() {
                        return err(alt.span, format!("constructor `{}` has {} field(s)", alt.con, fields.len()));
                    }
                    let fields: Vec<Ty> = fields.into_iter().cloned().collect();
                    let result = result.clone();
                    self.unify_at(alt.span, &tx, &result)?;
                    let n = self.env.len();
                    for (b, t) in alt.binders.iter().zip(fields) {
                        self.bind_mono(b, t);
                    }
                    let t = self.infer(&alt.body);
                    self.env.truncate(n);
                    let t = t?;
                    self.unify_at(alt.body.span, &t, &res)?;
                }
                res
            }
            ExprKind::PatError(_) => self.fresh(),
        };
        self.exprs.insert(e.id, t.clone());
        Ok(t)
    }
}

fn first_vars(t: &Ty, out: &mut Vec<u32>) {
    match t {
        Ty::Var(n) => {
            if !out.contains(n) {
                out.push(*n)
            }
        }
        Ty::Rigid(_) => {}
        Ty::Con(_, args) => args.iter().for_each(|a| first_vars(a, out)),
        Ty::Fun(a, b) => {
            first_vars(a, out);
            first_vars(b, out);
        }
    }
}

fn subst_vars(t: &Ty, map: &BTreeMap<u32, Ty>) -> Ty {
    match t {
        Ty::Var(n) => map.get(n).cloned().unwrap_or_else(|| t.clone()),
        Ty::Rigid(_) => t.clone(),
        Ty::Con(c, args) => Ty::Con(c.clone(), args.iter().map(|a| subst_vars(a, map)).collect()),
        Ty::Fun(a, b) => Ty::fun(subst_vars(a, map), subst_vars(b, map)),
    }
}

/// Rename rigid variables so that two schemes can be compared up to the
/// names of their quantified variables.
fn canonical(s: &Scheme) -> Ty {
    let mut order = Vec::new();
    s.ty.rigids(&mut order);
    let map = order
        .iter()
        .enumerate()
        .filter(|(_, v)| s.vars.contains(v))
        .map(|(i, v)| (v.clone(), Ty::Rigid(format!("#{i}"))))
        .collect();
    s.ty.subst_rigid(&map)
}

pub fn same_scheme(a: &Scheme, b: &Scheme) -> bool {
    canonical(a) == canonical(b)
}

/// Infer shapes for every binding of the program and check them against
/// declared signatures.
pub fn infer_program(prog: &Program) -> Result<Shapes, FrontError> {
    let mut ctors = BTreeMap::new();
    for d in &prog.datas {
        for c in &d.ctors {
            let ty = Ty::from_rtype(&d.ctor_type(c));
            ctors.insert(c.name.clone(), Scheme { vars: d.params.clone(), ty });
        }
    }
    let mut st = Infer {
        prog,
        subst: Subst::new(),
        next: 0,
        globals: BTreeMap::new(),
        ctors,
        env: Vec::new(),
        exprs: BTreeMap::new(),
        binders: BTreeMap::new(),
        local_schemes: BTreeMap::new(),
        insts: BTreeMap::new(),
    };

    // Declared signatures agree with plain type signatures.
    for (name, shape) in &prog.shapes {
        if let Some(sig) = prog.sigs.get(name) {
            let a = Scheme::from_rtype(&sig.ty);
            let b = Scheme::from_rtype(shape);
            if !same_scheme(&a, &b) {
                return err(
                    sig.span,
                    format!("refinement signature of `{name}` has shape `{a}` but its type signature is `{b}`"),
                );
            }
        }
    }
    for (name, sig) in &prog.sigs {
        st.globals.insert(name.clone(), Scheme::from_rtype(&sig.ty));
    }

    // Dependency graph over unsigned bindings.
    let mut graph = DiGraph::<usize, ()>::new();
    let nodes: Vec<_> = (0..prog.binds.len()).map(|i| graph.add_node(i)).collect();
    let index: BTreeMap<&str, usize> = prog.binds.iter().enumerate().map(|(i, b)| (b.name.as_str(), i)).collect();
    for (i, b) in prog.binds.iter().enumerate() {
        for x in b.expr.free_vars() {
            if let Some(&j) = index.get(x.as_str()) {
                if x.is_global() && !prog.sigs.contains_key(x.as_str()) {
                    graph.add_edge(nodes[i], nodes[j], ());
                }
            }
        }
    }
    let mut sccs = tarjan_scc(&graph);
    for c in &mut sccs {
        c.sort();
    }
    for scc in sccs {
        let members: Vec<usize> = scc.iter().map(|n| graph[*n]).collect();
        let mut mono = Vec::new();
        for &i in &members {
            let b = &prog.binds[i];
            if !prog.sigs.contains_key(b.name.as_str()) {
                let a = st.fresh();
                st.globals.insert(b.name.as_str().to_string(), Scheme::mono(a.clone()));
                mono.push((i, a));
            }
        }
        for &i in &members {
            let b = &prog.binds[i];
            let t = st.infer(&b.expr)?;
            match prog.sigs.get(b.name.as_str()) {
                Some(sig) => {
                    let want = Ty::from_rtype(&sig.ty);
                    st.subst.unify(&t, &want).map_err(|e| {
                        FrontError::new(
                            b.span,
                            format!(
                                "`{}` does not match its signature `{}`: inferred `{}` ({e})",
                                b.name,
                                Scheme::from_rtype(&sig.ty),
                                st.subst.apply(&t)
                            ),
                        )
                    })?;
                }
                None => {
                    let (_, a) = mono.iter().find(|(j, _)| *j == i).unwrap();
                    let a = a.clone();
                    st.unify_at(b.span, &t, &a)?;
                }
            }
        }
        for (i, a) in mono {
            let s = st.generalize(&a);
            st.globals.insert(prog.binds[i].name.as_str().to_string(), s);
        }
    }

    // Resolve everything; leftover variables become rigid.
    let zonk = |t: &Ty| -> Ty {
        let t = st.subst.apply(t);
        let mut fv = BTreeSet::new();
        t.vars(&mut fv);
        let map = fv.into_iter().map(|n| (n, Ty::Rigid(rigid_name(n)))).collect();
        subst_vars(&t, &map)
    };
    let mut globals: BTreeMap<String, Scheme> = st.globals.clone();
    for (c, s) in &st.ctors {
        globals.insert(c.clone(), s.clone());
    }
    for b in crate::front::desugar::BUILTINS {
        if !globals.contains_key(*b) {
            globals.insert(b.to_string(), builtin_scheme(b).unwrap());
        }
    }
    let _ = st.prog;
    Ok(Shapes {
        exprs: st.exprs.iter().map(|(k, t)| (*k, zonk(t))).collect(),
        binders: st.binders.iter().map(|(k, t)| (k.clone(), zonk(t))).collect(),
        local_schemes: st
            .local_schemes
            .iter()
            .map(|(k, s)| (k.clone(), Scheme { vars: s.vars.clone(), ty: zonk(&s.ty) }))
            .collect(),
        insts: st.insts.iter().map(|(k, ts)| (*k, ts.iter().map(zonk).collect())).collect(),
        globals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::front::load;

    fn shapes(src: &str) -> Result<(Program, Shapes), FrontError> {
        let p = load("t.lm", src)?;
        let s = infer_program(&p)?;
        Ok((p, s))
    }

    fn scheme_of(src: &str, f: &str) -> String {
        let (_, s) = shapes(src).unwrap();
        s.globals[f].to_string()
    }

    #[test]
    fn max_matches_its_signature() {
        let src = "{-@ max :: x:Int -> y:Int -> {v:Int | v >= x && v >= y} @-}\nmax x y = if x >= y then x else y\n";
        assert_eq!(scheme_of(src, "max"), "Int -> Int -> Int");
    }

    #[test]
    fn self_application_fails_occurs_check() {
        let e = shapes("f x = x x\n").unwrap_err();
        assert!(e.message.contains("occurs check"), "{}", e.message);
    }

    #[test]
    fn insert_shape_erases_refinements() {
        let src = "{-@ data IncList a = Emp | (:<) { hd::a, tl::IncList {v:a | hd <= v}} @-}\n\
                   insert y Emp = y :< Emp\n\
                   insert y (x :< xs) | y <= x = y :< x :< xs\n\
                   \x20                 | otherwise = x :< insert y xs\n";
        assert_eq!(scheme_of(src, "insert"), "a -> IncList a -> IncList a");
    }

    #[test]
    fn let_polymorphism() {
        let src = "f z = let i = \\x -> x in if i True then i z else z\n";
        assert_eq!(scheme_of(src, "f"), "a -> a");
    }

    #[test]
    fn lambda_bound_variables_are_monomorphic() {
        let src = "f i = if i True then i 1 else 0\n";
        assert!(shapes(src).is_err());
    }

    #[test]
    fn signature_too_general_is_rejected() {
        let src = "g :: a -> a\ng x = x + 1\n";
        let e = shapes(src).unwrap_err();
        assert!(e.message.contains("does not match its signature"), "{}", e.message);
    }

    #[test]
    fn mutual_recursion_is_generalized_after() {
        let src = "ev n = if n == 0 then True else od (n - 1)\nod n = if n == 0 then False else ev (n - 1)\n";
        assert_eq!(scheme_of(src, "ev"), "Int -> Bool");
        assert_eq!(scheme_of(src, "od"), "Int -> Bool");
    }

    #[test]
    fn unify_list_of_var_with_list_of_int() {
        let l = |t| Ty::Con("IncList".into(), vec![t]);
        let s = unify(&l(Ty::Var(1)), &l(Ty::int())).unwrap();
        assert_eq!(s.get(1), Some(&Ty::int()));
        assert!(unify(&Ty::int(), &Ty::bool()).is_err());
    }

    #[test]
    fn every_node_gets_a_type() {
        let (p, s) = shapes("len [] = 0\nlen (_:xs) = 1 + len xs\n").unwrap();
        let mut ids = Vec::new();
        fn walk(e: &Expr, ids: &mut Vec<NodeId>) {
            ids.push(e.id);
            e.for_each_child(&mut |c| walk(c, ids));
        }
        walk(&p.binds[0].expr, &mut ids);
        assert!(ids.iter().all(|i| s.exprs.contains_key(i)));
        assert_eq!(s.globals["len"].to_string(), "[a] -> Int");
    }
}

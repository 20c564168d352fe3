//! Surface code to core expressions: renaming, pattern-match compilation,
//! guards, where/let bindings and list comprehensions.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::ast::*;
use super::FrontError;
use crate::lang::{tuple_name, Alt, Expr, ExprKind, Ident, NameSupply, NodeId, Span, Warning, CONS, NIL};

type DResult<T> = Result<T, FrontError>;

/// Names of the code-level primitives.
pub const BUILTINS: &[&str] = &["+", "-", "*", "==", "/=", "<", "<=", ">", ">=", "&&", "||", "not", "max", "min"];

#[derive(Debug, Clone)]
pub struct CtorInfo {
    pub data: String,
    pub arity: usize,
    /// All constructors of the datatype, in declaration order.
    pub siblings: Vec<String>,
}

pub struct Desugarer<'a> {
    ctors: &'a BTreeMap<String, CtorInfo>,
    globals: &'a BTreeSet<String>,
    supply: &'a NameSupply,
    next: NodeId,
    scope: Vec<(String, Ident)>,
    /// Name of the function being desugared, used in pattern-failure
    /// messages.
    fun: String,
    pub warnings: Vec<Warning>,
}

/// A constructor-or-literal view of a pattern after stripping variables.
enum Head {
    Any,
    Con(String, Vec<SPat>),
    Int(i64),
    Bool(bool),
}

#[derive(Clone)]
struct Row<'s> {
    pats: Vec<SPat>,
    binds: Vec<(String, Ident)>,
    rhs: &'s Rhs,
    /// Index of the equation or alternative, for redundancy warnings.
    index: usize,
}

type Known = BTreeMap<Ident, (String, Vec<Ident>)>;

impl<'a> Desugarer<'a> {
    pub fn new(
        ctors: &'a BTreeMap<String, CtorInfo>,
        globals: &'a BTreeSet<String>,
        supply: &'a NameSupply,
        first_node: NodeId,
    ) -> Self {
        Desugarer { ctors, globals, supply, next: first_node, scope: Vec::new(), fun: String::new(), warnings: Vec::new() }
    }

    pub fn next_node(&self) -> NodeId {
        self.next
    }

    fn mk(&mut self, span: Span, kind: ExprKind) -> Expr {
        let id = self.next;
        self.next += 1;
        Expr { id, span, kind }
    }

    fn app(&mut self, span: Span, f: Expr, args: Vec<Expr>) -> Expr {
        args.into_iter().fold(f, |acc, a| self.mk(span, ExprKind::App(Box::new(acc), Box::new(a))))
    }

    fn var(&mut self, span: Span, x: &Ident) -> Expr {
        self.mk(span, ExprKind::Var(x.clone()))
    }

    fn global(&mut self, span: Span, name: &str) -> Expr {
        self.mk(span, ExprKind::Var(Ident::global(name)))
    }

    fn lookup(&self, x: &str) -> Option<Ident> {
        self.scope.iter().rev().find(|(n, _)| n == x).map(|(_, id)| id.clone())
    }

    fn with_binds<T>(&mut self, binds: &[(String, Ident)], f: impl FnOnce(&mut Self) -> T) -> T {
        let n = self.scope.len();
        self.scope.extend(binds.iter().cloned());
        let r = f(self);
        self.scope.truncate(n);
        r
    }

    fn ctor(&self, name: &str, span: Span) -> DResult<&'a CtorInfo> {
        self.ctors.get(name).ok_or_else(|| FrontError::new(span, format!("unknown constructor `{name}`")))
    }

    /// Desugar a top-level function given its equations.
    pub fn binding(&mut self, name: &str, eqs: &[&SDecl]) -> DResult<Expr> {
        self.fun = name.to_string();
        self.function(eqs)
    }

    fn function(&mut self, eqs: &[&SDecl]) -> DResult<Expr> {
        let mut clauses = Vec::new();
        for d in eqs {
            if let SDecl::Fun { args, rhs, span, .. } = d {
                clauses.push((args.as_slice(), rhs, *span));
            }
        }
        let (args0, _, span0) = clauses[0];
        let arity = args0.len();
        let span = clauses.iter().fold(span0, |s, c| s.to(c.2));
        for (args, _, sp) in &clauses {
            if args.len() != arity {
                return Err(FrontError::new(*sp, format!("equations for `{}` have different numbers of arguments", self.fun)));
            }
            check_linear(args)?;
        }
        if arity == 0 {
            if clauses.len() > 1 {
                return Err(FrontError::new(clauses[1].2, format!("multiple definitions of `{}`", self.fun)));
            }
            return self.rhs(clauses[0].1, &mut |d| Ok(d.pat_error(span)));
        }
        let params: Vec<Ident> = (0..arity)
            .map(|i| {
                let name = clauses.iter().find_map(|(args, _, _)| pat_name(&args[i])).unwrap_or("arg");
                self.supply.fresh(name)
            })
            .collect();
        let rows: Vec<Row> = clauses
            .iter()
            .enumerate()
            .map(|(i, (args, rhs, _))| Row { pats: args.to_vec(), binds: Vec::new(), rhs, index: i })
            .collect();
        let mut used = vec![false; rows.len()];
        let body = self.compile(&params, rows, &Known::new(), span, &mut used)?;
        self.warn_unused(&used, &clauses.iter().map(|c| c.2).collect::<Vec<_>>());
        Ok(params.iter().rev().fold(body, |b, p| self.mk(span, ExprKind::Lam(p.clone(), Box::new(b)))))
    }

    fn warn_unused(&mut self, used: &[bool], spans: &[Span]) {
        for (u, sp) in used.iter().zip(spans) {
            if !u {
                self.warnings.push(Warning { span: *sp, message: format!("redundant equation in `{}`", self.fun) });
            }
        }
    }

    fn pat_error(&mut self, span: Span) -> Expr {
        let msg = self.fun.clone();
        self.mk(span, ExprKind::PatError(msg))
    }

    // ------------------------------------------------------------ matching

    fn head(&self, p: &SPat, binds: &mut Vec<(String, Ident)>, occ: &Ident) -> DResult<Head> {
        match &p.kind {
            SPatKind::Var(x) => {
                binds.push((x.clone(), occ.clone()));
                Ok(Head::Any)
            }
            SPatKind::Wild => Ok(Head::Any),
            SPatKind::As(x, q) => {
                binds.push((x.clone(), occ.clone()));
                self.head(q, binds, occ)
            }
            SPatKind::Int(n) => Ok(Head::Int(*n)),
            SPatKind::Con(c, ps) if c == "True" || c == "False" => {
                if !ps.is_empty() {
                    return Err(FrontError::new(p.span, format!("`{c}` takes no arguments")));
                }
                Ok(Head::Bool(c == "True"))
            }
            SPatKind::Con(c, ps) => {
                let info = self.ctor(c, p.span)?;
                if info.arity != ps.len() {
                    return Err(FrontError::new(
                        p.span,
                        format!("constructor `{c}` expects {} argument(s), got {}", info.arity, ps.len()),
                    ));
                }
                Ok(Head::Con(c.clone(), ps.clone()))
            }
            SPatKind::Tuple(ps) => Ok(Head::Con(tuple_name(ps.len()), ps.clone())),
            SPatKind::List(ps) => match ps.split_first() {
                None => Ok(Head::Con(NIL.to_string(), Vec::new())),
                Some((h, t)) => {
                    let tail = SPat { span: p.span, kind: SPatKind::List(t.to_vec()) };
                    Ok(Head::Con(CONS.to_string(), vec![h.clone(), tail]))
                }
            },
        }
    }

    fn is_refutable(p: &SPat) -> bool {
        match &p.kind {
            SPatKind::Var(_) | SPatKind::Wild => false,
            SPatKind::As(_, q) => Self::is_refutable(q),
            _ => true,
        }
    }

    fn wild(span: Span) -> SPat {
        SPat { span, kind: SPatKind::Wild }
    }

    fn compile(&mut self, occs: &[Ident], rows: Vec<Row>, known: &Known, span: Span, used: &mut [bool]) -> DResult<Expr> {
        let Some(first) = rows.first() else {
            return Ok(self.pat_error(span));
        };
        let Some(col) = first.pats.iter().position(Self::is_refutable) else {
            let mut row = rows[0].clone();
            for (p, occ) in row.pats.iter().zip(occs) {
                self.head(p, &mut row.binds, occ)?;
            }
            used[row.index] = true;
            let rest: Vec<Row> = rows[1..].to_vec();
            let rhs = row.rhs;
            let outer = self.scope.len();
            return self.with_binds(&row.binds, |d| {
                d.rhs(rhs, &mut |d| {
                    // The fallthrough sees only the scope outside this row.
                    let saved = d.scope.split_off(outer);
                    let r = d.compile(occs, rest.clone(), known, span, used);
                    d.scope.extend(saved);
                    r
                })
            });
        };
        let occ = occs[col].clone();
        let mut probe = Vec::new();
        match self.head(&first.pats[col], &mut probe, &occ)? {
            Head::Any => unreachable!(),
            Head::Int(n) => {
                let (yes, no) = self.split_literal(rows, col, &occ, |h| matches!(h, Head::Int(m) if *m == n))?;
                let t = self.compile(occs, yes, known, span, used)?;
                let e = self.compile(occs, no, known, span, used)?;
                let x = self.var(span, &occ);
                let lit = self.mk(span, ExprKind::Int(n));
                let eq = self.global(span, "==");
                let c = self.app(span, eq, vec![x, lit]);
                Ok(self.mk(span, ExprKind::If(Box::new(c), Box::new(t), Box::new(e))))
            }
            Head::Bool(b) => {
                let (yes, no) = self.split_literal(rows, col, &occ, |h| matches!(h, Head::Bool(c) if *c == b))?;
                let t = self.compile(occs, yes, known, span, used)?;
                let e = self.compile(occs, no, known, span, used)?;
                let c = self.var(span, &occ);
                let (t, e) = if b { (t, e) } else { (e, t) };
                Ok(self.mk(span, ExprKind::If(Box::new(c), Box::new(t), Box::new(e))))
            }
            Head::Con(k, _) => {
                if let Some((kk, binders)) = known.get(&occ) {
                    let rows = self.specialize(rows, col, &occ, kk, binders)?;
                    let mut occs2 = occs.to_vec();
                    occs2.splice(col..=col, binders.iter().cloned());
                    return self.compile(&occs2, rows, known, span, used);
                }
                let info = self.ctor(&k, first.pats[col].span)?;
                let mut alts = Vec::new();
                for sib in &info.siblings {
                    let arity = self.ctors[sib].arity;
                    let binders: Vec<Ident> = (0..arity)
                        .map(|i| {
                            let name = rows
                                .iter()
                                .find_map(|r| sub_name(&r.pats[col], sib, i))
                                .unwrap_or_else(|| "ds".to_string());
                            self.supply.fresh(&name)
                        })
                        .collect();
                    let rows2 = self.specialize(rows.clone(), col, &occ, sib, &binders)?;
                    let mut occs2 = occs.to_vec();
                    occs2.splice(col..=col, binders.iter().cloned());
                    let mut known2 = known.clone();
                    known2.insert(occ.clone(), (sib.clone(), binders.clone()));
                    let body = self.compile(&occs2, rows2, &known2, span, used)?;
                    alts.push(Alt { con: sib.clone(), binders, body, span });
                }
                Ok(self.mk(span, ExprKind::Case(occ, alts)))
            }
        }
    }

    /// Rows that survive when `occ` is known to be built by `k`, with the
    /// column replaced by the constructor's sub-patterns.
    fn specialize<'s>(&self, rows: Vec<Row<'s>>, col: usize, occ: &Ident, k: &str, binders: &[Ident]) -> DResult<Vec<Row<'s>>> {
        let mut out = Vec::new();
        for mut row in rows {
            let p = row.pats[col].clone();
            let subs = match self.head(&p, &mut row.binds, occ)? {
                Head::Any => vec![Self::wild(p.span); binders.len()],
                Head::Con(c, subs) if c == k => subs,
                Head::Con(..) => continue,
                _ => return Err(FrontError::new(p.span, "pattern does not match the type of its scrutinee")),
            };
            row.pats.splice(col..=col, subs);
            out.push(row);
        }
        Ok(out)
    }

    fn split_literal<'s>(
        &self,
        rows: Vec<Row<'s>>,
        col: usize,
        occ: &Ident,
        is: impl Fn(&Head) -> bool,
    ) -> DResult<(Vec<Row<'s>>, Vec<Row<'s>>)> {
        let mut yes = Vec::new();
        let mut no = Vec::new();
        for row in rows {
            let mut binds = row.binds.clone();
            let h = self.head(&row.pats[col], &mut binds, occ)?;
            match h {
                Head::Any => {
                    yes.push(row.clone());
                    no.push(row);
                }
                Head::Con(..) => return Err(FrontError::new(row.pats[col].span, "pattern does not match the type of its scrutinee")),
                h if is(&h) => {
                    let mut r = row;
                    r.binds = binds;
                    r.pats[col] = Self::wild(r.pats[col].span);
                    yes.push(r);
                }
                _ => no.push(row),
            }
        }
        Ok((yes, no))
    }

    // ------------------------------------------------------------ right-hand sides

    /// Desugar a right-hand side. `fallthrough` produces the code for when
    /// every guard fails.
    fn rhs(&mut self, rhs: &Rhs, fallthrough: &mut dyn FnMut(&mut Self) -> DResult<Expr>) -> DResult<Expr> {
        let wheres = WhereInfo::new(&rhs.wheres)?;
        match &rhs.body {
            RhsBody::Plain(e) => {
                let need = wheres.closure(&free_names(e));
                self.wrap_decls(&rhs.wheres, &wheres, &need, &mut |d| d.expr(e))
            }
            RhsBody::Guarded(gs) => self.guards(gs, 0, &rhs.wheres, &wheres, &BTreeSet::new(), fallthrough),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn guards(
        &mut self,
        gs: &[(SExpr, SExpr)],
        i: usize,
        decls: &[SDecl],
        info: &WhereInfo,
        bound: &BTreeSet<usize>,
        fallthrough: &mut dyn FnMut(&mut Self) -> DResult<Expr>,
    ) -> DResult<Expr> {
        if i == gs.len() {
            return fallthrough(self);
        }
        let (g, e) = &gs[i];
        let need_g: BTreeSet<usize> = info.closure(&free_names(g)).difference(bound).copied().collect();
        let mut bound_g = bound.clone();
        bound_g.extend(need_g.iter().copied());
        self.wrap_decls(decls, info, &need_g, &mut |d| {
            let need_e: BTreeSet<usize> = info.closure(&free_names(e)).difference(&bound_g).copied().collect();
            let then = d.wrap_decls(decls, info, &need_e, &mut |d| d.expr(e))?;
            if is_true_lit(g) {
                if i + 1 < gs.len() {
                    d.warnings.push(Warning { span: gs[i + 1].0.span, message: "unreachable guard".into() });
                }
                return Ok(then);
            }
            let c = d.expr(g)?;
            let els = d.guards(gs, i + 1, decls, info, &bound_g, fallthrough)?;
            Ok(d.mk(g.span.to(e.span), ExprKind::If(Box::new(c), Box::new(then), Box::new(els))))
        })
    }

    /// Wrap `body` in the local declarations selected by `need`, in
    /// dependency order.
    fn wrap_decls(
        &mut self,
        decls: &[SDecl],
        info: &WhereInfo,
        need: &BTreeSet<usize>,
        body: &mut dyn FnMut(&mut Self) -> DResult<Expr>,
    ) -> DResult<Expr> {
        let groups: Vec<Vec<usize>> = info.order.iter().filter(|g| g.iter().any(|i| need.contains(i))).cloned().collect();
        self.wrap_groups(decls, info, &groups, body)
    }

    fn wrap_groups(
        &mut self,
        decls: &[SDecl],
        info: &WhereInfo,
        groups: &[Vec<usize>],
        body: &mut dyn FnMut(&mut Self) -> DResult<Expr>,
    ) -> DResult<Expr> {
        let Some((group, rest)) = groups.split_first() else {
            return body(self);
        };
        let i = group[0];
        let span = decls[i].span();
        if let SDecl::Pat { pat, rhs, span } = &decls[i] {
            let rhs_e = self.rhs(rhs, &mut |d| Ok(d.pat_error(*span)))?;
            let tmp = self.supply.fresh("p");
            let mut binds = Vec::new();
            let pre = pat_vars(pat).into_iter().map(|x| (x.clone(), self.supply.fresh(&x))).collect::<Vec<_>>();
            binds.extend(pre.iter().cloned());
            let k = self.with_binds(&binds, |d| d.wrap_groups(decls, info, rest, body))?;
            let inner = self.bind_pat(pat, &tmp, &pre, k)?;
            return Ok(self.mk(*span, ExprKind::Let(tmp, Box::new(rhs_e), Box::new(inner))));
        }
        let names: Vec<(String, Ident)> = group
            .iter()
            .map(|&j| {
                let n = decl_name(&decls[j]).to_string();
                let id = self.supply.fresh(&n);
                (n, id)
            })
            .collect();
        let recursive = group.len() > 1 || info.deps[i].contains(&i);
        let saved = std::mem::take(&mut self.fun);
        let mut rhss = Vec::new();
        let rec_binds: &[(String, Ident)] = if recursive { &names } else { &[] };
        let res = self.with_binds(rec_binds, |d| -> DResult<()> {
            for &j in group {
                d.fun = decl_name(&decls[j]).to_string();
                let eqs: Vec<&SDecl> = info.eqs[&j].iter().map(|&k| &decls[k]).collect();
                rhss.push(d.function(&eqs)?);
            }
            Ok(())
        });
        self.fun = saved;
        res?;
        let k = self.with_binds(&names, |d| d.wrap_groups(decls, info, rest, body))?;
        if recursive {
            let bs = names.into_iter().map(|(_, id)| id).zip(rhss).collect();
            Ok(self.mk(span, ExprKind::LetRec(bs, Box::new(k))))
        } else {
            let (_, id) = names.into_iter().next().unwrap();
            let e = rhss.pop().unwrap();
            Ok(self.mk(span, ExprKind::Let(id, Box::new(e), Box::new(k))))
        }
    }

    /// Match `occ` against an irrefutable-by-intent pattern, binding its
    /// variables to the pre-allocated identifiers.
    fn bind_pat(&mut self, pat: &SPat, occ: &Ident, pre: &[(String, Ident)], k: Expr) -> DResult<Expr> {
        let span = pat.span;
        let lookup = |x: &str| pre.iter().find(|(n, _)| n == x).map(|(_, id)| id.clone()).unwrap();
        let mut binds = Vec::new();
        match self.head(pat, &mut binds, occ)? {
            Head::Any => {
                let mut e = k;
                for (x, _) in binds.into_iter().rev() {
                    let v = self.var(span, occ);
                    e = self.mk(span, ExprKind::Let(lookup(&x), Box::new(v), Box::new(e)));
                }
                Ok(e)
            }
            h => {
                let mut e = match h {
                    Head::Con(c, subs) => {
                        let info = self.ctor(&c, span)?;
                        let mut binders = Vec::new();
                        let mut nested = Vec::new();
                        for s in &subs {
                            match &s.kind {
                                SPatKind::Var(x) => binders.push(lookup(x)),
                                _ => {
                                    let b = self.supply.fresh("ds");
                                    binders.push(b.clone());
                                    nested.push((s, b));
                                }
                            }
                        }
                        let mut body = k;
                        for (s, b) in nested.into_iter().rev() {
                            body = self.bind_pat(s, &b, pre, body)?;
                        }
                        let mut alts = Vec::new();
                        for sib in &info.siblings {
                            if *sib == c {
                                alts.push(Alt { con: sib.clone(), binders: binders.clone(), body: body.clone(), span });
                            } else {
                                let n = self.ctors[sib].arity;
                                let bs = (0..n).map(|_| self.supply.fresh("ds")).collect();
                                let err = self.pat_error(span);
                                alts.push(Alt { con: sib.clone(), binders: bs, body: err, span });
                            }
                        }
                        self.mk(span, ExprKind::Case(occ.clone(), alts))
                    }
                    Head::Int(n) => {
                        let x = self.var(span, occ);
                        let lit = self.mk(span, ExprKind::Int(n));
                        let eq = self.global(span, "==");
                        let c = self.app(span, eq, vec![x, lit]);
                        let err = self.pat_error(span);
                        self.mk(span, ExprKind::If(Box::new(c), Box::new(k), Box::new(err)))
                    }
                    Head::Bool(b) => {
                        let c = self.var(span, occ);
                        let err = self.pat_error(span);
                        let (t, e) = if b { (k, err) } else { (err, k) };
                        self.mk(span, ExprKind::If(Box::new(c), Box::new(t), Box::new(e)))
                    }
                    Head::Any => unreachable!(),
                };
                for (x, _) in binds.into_iter().rev() {
                    let v = self.var(span, occ);
                    e = self.mk(span, ExprKind::Let(lookup(&x), Box::new(v), Box::new(e)));
                }
                Ok(e)
            }
        }
    }

    // ------------------------------------------------------------ expressions

    pub fn expr(&mut self, e: &SExpr) -> DResult<Expr> {
        let span = e.span;
        match &e.kind {
            SExprKind::Var(x) => {
                if let Some(id) = self.lookup(x) {
                    return Ok(self.var(span, &id));
                }
                if self.globals.contains(x) || BUILTINS.contains(&x.as_str()) {
                    return Ok(self.global(span, x));
                }
                if x == "error" || x == "patError" {
                    return Err(FrontError::new(span, format!("`{x}` must be applied to a message")));
                }
                Err(FrontError::new(span, format!("unbound variable `{x}`")))
            }
            SExprKind::Con(c) => match c.as_str() {
                "True" => Ok(self.mk(span, ExprKind::Bool(true))),
                "False" => Ok(self.mk(span, ExprKind::Bool(false))),
                _ => {
                    self.ctor(c, span)?;
                    Ok(self.mk(span, ExprKind::Con(c.clone())))
                }
            },
            SExprKind::Int(n) => Ok(self.mk(span, ExprKind::Int(*n))),
            SExprKind::Str(_) => Err(FrontError::new(span, "string literals are only allowed as arguments of `error`")),
            SExprKind::Wild(_) => Err(FrontError::new(span, "wildcard outside a qualifier")),
            SExprKind::App(f, a) => {
                if let (SExprKind::Var(h), SExprKind::Str(msg)) = (&f.kind, &a.kind) {
                    if (h == "error" || h == "patError") && self.lookup(h).is_none() {
                        return Ok(self.mk(span, ExprKind::PatError(msg.clone())));
                    }
                }
                let f = self.expr(f)?;
                let a = self.expr(a)?;
                Ok(self.mk(span, ExprKind::App(Box::new(f), Box::new(a))))
            }
            SExprKind::BinOp(op, a, b) => {
                let f = if op.starts_with(':') {
                    let c = SExpr { span, kind: SExprKind::Con(op.clone()) };
                    self.expr(&c)?
                } else {
                    let v = SExpr { span, kind: SExprKind::Var(op.clone()) };
                    self.expr(&v)?
                };
                let a = self.expr(a)?;
                let b = self.expr(b)?;
                Ok(self.app(span, f, vec![a, b]))
            }
            SExprKind::Neg(a) => {
                let zero = self.mk(span, ExprKind::Int(0));
                let a = self.expr(a)?;
                let minus = self.global(span, "-");
                Ok(self.app(span, minus, vec![zero, a]))
            }
            SExprKind::Lam(ps, body) => {
                check_linear(ps)?;
                let params: Vec<Ident> = ps.iter().map(|p| self.supply.fresh(pat_name(p).unwrap_or("arg"))).collect();
                let rhs = Rhs { body: RhsBody::Plain((**body).clone()), wheres: Vec::new() };
                let row = Row { pats: ps.clone(), binds: Vec::new(), rhs: &rhs, index: 0 };
                let mut used = [false];
                let b = self.compile(&params, vec![row], &Known::new(), span, &mut used)?;
                Ok(params.iter().rev().fold(b, |b, p| self.mk(span, ExprKind::Lam(p.clone(), Box::new(b)))))
            }
            SExprKind::If(c, a, b) => {
                let c = self.expr(c)?;
                let a = self.expr(a)?;
                let b = self.expr(b)?;
                Ok(self.mk(span, ExprKind::If(Box::new(c), Box::new(a), Box::new(b))))
            }
            SExprKind::Case(scrut, alts) => {
                let (occ, bind) = match &scrut.kind {
                    SExprKind::Var(x) if self.lookup(x).is_some() => (self.lookup(x).unwrap(), None),
                    _ => {
                        let tmp = self.supply.fresh("scrut");
                        (tmp.clone(), Some((tmp, self.expr(scrut)?)))
                    }
                };
                for a in alts {
                    check_linear(std::slice::from_ref(&a.pat))?;
                }
                let rows: Vec<Row> = alts
                    .iter()
                    .enumerate()
                    .map(|(i, a)| Row { pats: vec![a.pat.clone()], binds: Vec::new(), rhs: &a.rhs, index: i })
                    .collect();
                let mut used = vec![false; rows.len()];
                let body = self.compile(std::slice::from_ref(&occ), rows, &Known::new(), span, &mut used)?;
                self.warn_unused(&used, &alts.iter().map(|a| a.span).collect::<Vec<_>>());
                Ok(match bind {
                    Some((tmp, e)) => self.mk(span, ExprKind::Let(tmp, Box::new(e), Box::new(body))),
                    None => body,
                })
            }
            SExprKind::Let(decls, body) => {
                let decls: Vec<SDecl> = decls.iter().filter(|d| !matches!(d, SDecl::Sig { .. })).cloned().collect();
                let info = WhereInfo::new(&decls)?;
                let all: BTreeSet<usize> = (0..decls.len()).collect();
                self.wrap_decls(&decls, &info, &all, &mut |d| d.expr(body))
            }
            SExprKind::Tuple(es) => {
                let c = self.mk(span, ExprKind::Con(tuple_name(es.len())));
                let args = es.iter().map(|a| self.expr(a)).collect::<DResult<Vec<_>>>()?;
                Ok(self.app(span, c, args))
            }
            SExprKind::List(es) => {
                let mut acc = self.mk(span, ExprKind::Con(NIL.to_string()));
                for a in es.iter().rev() {
                    let h = self.expr(a)?;
                    let cons = self.mk(span, ExprKind::Con(CONS.to_string()));
                    acc = self.app(span, cons, vec![h, acc]);
                }
                Ok(acc)
            }
            SExprKind::Comp(head, quals) => self.comprehension(span, head, quals),
        }
    }

    /// `[e | x <- l, g1, .., gn]` becomes a local recursive filter-map.
    fn comprehension(&mut self, span: Span, head: &SExpr, quals: &[SQual]) -> DResult<Expr> {
        let (pat, src, guards) = match quals.split_first() {
            Some((SQual::Gen(p, l), rest)) if rest.iter().all(|q| matches!(q, SQual::Guard(_))) => {
                let gs: Vec<&SExpr> = rest
                    .iter()
                    .map(|q| match q {
                        SQual::Guard(g) => g,
                        SQual::Gen(..) => unreachable!(),
                    })
                    .collect();
                (p, l, gs)
            }
            _ => return Err(FrontError::new(span, "comprehensions must have one generator followed by guards")),
        };
        let SPatKind::Var(x) = &pat.kind else {
            return Err(FrontError::new(pat.span, "comprehension generators must bind a variable"));
        };
        let src = self.expr(src)?;
        let go = self.supply.fresh("go");
        let xs = self.supply.fresh("xs");
        let h = self.supply.fresh(x);
        let t = self.supply.fresh("t");
        let cons_body = self.with_binds(&[(x.clone(), h.clone())], |d| -> DResult<Expr> {
            let gov = d.var(span, &go);
            let tv = d.var(span, &t);
            let rec_call = d.app(span, gov, vec![tv]);
            let e = d.expr(head)?;
            let cons = d.mk(span, ExprKind::Con(CONS.to_string()));
            let mut keep = d.app(span, cons, vec![e, rec_call.clone()]);
            for g in guards.iter().rev() {
                let c = d.expr(g)?;
                let skip = d.renumber(&rec_call);
                keep = d.mk(span, ExprKind::If(Box::new(c), Box::new(keep), Box::new(skip)));
            }
            Ok(keep)
        })?;
        let nil = self.mk(span, ExprKind::Con(NIL.to_string()));
        let alts = vec![
            Alt { con: NIL.to_string(), binders: Vec::new(), body: nil, span },
            Alt { con: CONS.to_string(), binders: vec![h, t], body: cons_body, span },
        ];
        let case = self.mk(span, ExprKind::Case(xs.clone(), alts));
        let lam = self.mk(span, ExprKind::Lam(xs, Box::new(case)));
        let gov = self.var(span, &go);
        let call = self.app(span, gov, vec![src]);
        Ok(self.mk(span, ExprKind::LetRec(vec![(go, lam)], Box::new(call))))
    }

    /// Copy of an expression with fresh node ids.
    fn renumber(&mut self, e: &Expr) -> Expr {
        let kind = match &e.kind {
            ExprKind::App(f, a) => ExprKind::App(Box::new(self.renumber(f)), Box::new(self.renumber(a))),
            k => k.clone(),
        };
        self.mk(e.span, kind)
    }
}

/// Dependency information for a group of local declarations.
struct WhereInfo {
    /// Declaration indices grouped into recursive components, in
    /// dependency order. Equations of one function form one entry.
    order: Vec<Vec<usize>>,
    /// For each head declaration: the equation indices belonging to it.
    eqs: BTreeMap<usize, Vec<usize>>,
    /// Names defined by each declaration.
    defs: Vec<Vec<String>>,
    /// Declarations each declaration refers to.
    deps: Vec<BTreeSet<usize>>,
}

impl WhereInfo {
    fn new(decls: &[SDecl]) -> DResult<Self> {
        let mut heads: Vec<usize> = Vec::new();
        let mut eqs: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut defs = vec![Vec::new(); decls.len()];
        let mut owner: BTreeMap<String, usize> = BTreeMap::new();
        for (i, d) in decls.iter().enumerate() {
            match d {
                SDecl::Fun { name, .. } => {
                    if let Some(&h) = owner.get(name) {
                        let last = *heads.last().unwrap();
                        if last != h || !matches!(decls[i - 1], SDecl::Fun { name: ref n, .. } if n == name) {
                            return Err(FrontError::new(d.span(), format!("conflicting definitions of `{name}`")));
                        }
                        eqs.get_mut(&h).unwrap().push(i);
                    } else {
                        owner.insert(name.clone(), i);
                        heads.push(i);
                        eqs.insert(i, vec![i]);
                        defs[i].push(name.clone());
                    }
                }
                SDecl::Pat { pat, .. } => {
                    for x in pat_vars(pat) {
                        if owner.insert(x.clone(), i).is_some() {
                            return Err(FrontError::new(d.span(), format!("conflicting definitions of `{x}`")));
                        }
                        defs[i].push(x);
                    }
                    heads.push(i);
                    eqs.insert(i, vec![i]);
                }
                SDecl::Sig { .. } => {}
            }
        }
        let mut deps = vec![BTreeSet::new(); decls.len()];
        for &h in &heads {
            for &k in &eqs[&h] {
                let mut names = BTreeSet::new();
                decl_free_names(&decls[k], &mut names);
                for n in names {
                    if let Some(&o) = owner.get(&n) {
                        deps[h].insert(o);
                    }
                }
            }
        }
        let mut g = DiGraph::<usize, ()>::new();
        let nodes: BTreeMap<usize, _> = heads.iter().map(|&h| (h, g.add_node(h))).collect();
        for &h in &heads {
            for d in &deps[h] {
                g.add_edge(nodes[&h], nodes[d], ());
            }
        }
        // tarjan_scc yields components in reverse topological order, so
        // dependencies come first.
        let mut order: Vec<Vec<usize>> = tarjan_scc(&g)
            .into_iter()
            .map(|c| {
                let mut v: Vec<usize> = c.into_iter().map(|n| g[n]).collect();
                v.sort();
                v
            })
            .collect();
        for c in &order {
            if c.len() > 1 && c.iter().any(|&i| matches!(decls[i], SDecl::Pat { .. })) {
                return Err(FrontError::new(decls[c[0]].span(), "recursive pattern bindings are not supported"));
            }
            if c.len() == 1 && matches!(decls[c[0]], SDecl::Pat { .. }) && deps[c[0]].contains(&c[0]) {
                return Err(FrontError::new(decls[c[0]].span(), "recursive pattern bindings are not supported"));
            }
        }
        order.retain(|c| !c.is_empty());
        Ok(WhereInfo { order, eqs, defs, deps })
    }

    /// Declarations needed, transitively, by the given free names.
    fn closure(&self, names: &BTreeSet<String>) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut work: Vec<usize> = (0..self.defs.len()).filter(|&i| self.defs[i].iter().any(|d| names.contains(d))).collect();
        while let Some(i) = work.pop() {
            if out.insert(i) {
                work.extend(self.deps[i].iter().copied());
            }
        }
        out
    }
}

fn decl_name(d: &SDecl) -> &str {
    match d {
        SDecl::Fun { name, .. } => name,
        _ => "_",
    }
}

fn is_true_lit(e: &SExpr) -> bool {
    matches!(&e.kind, SExprKind::Con(c) if c == "True")
}

fn pat_name(p: &SPat) -> Option<&str> {
    match &p.kind {
        SPatKind::Var(x) | SPatKind::As(x, _) => Some(x),
        _ => None,
    }
}

/// Name for the `i`-th field binder of constructor `k`, taken from a row
/// pattern when it names that field.
fn sub_name(p: &SPat, k: &str, i: usize) -> Option<String> {
    match &p.kind {
        SPatKind::As(_, q) => sub_name(q, k, i),
        SPatKind::Con(c, ps) if c == k => ps.get(i).and_then(pat_name).map(str::to_string),
        SPatKind::Tuple(ps) if tuple_name(ps.len()) == k => ps.get(i).and_then(pat_name).map(str::to_string),
        SPatKind::List(ps) if k == CONS && !ps.is_empty() => match i {
            0 => pat_name(&ps[0]).map(str::to_string),
            _ => None,
        },
        _ => None,
    }
}

pub fn pat_vars(p: &SPat) -> Vec<String> {
    fn go(p: &SPat, out: &mut Vec<String>) {
        match &p.kind {
            SPatKind::Var(x) => out.push(x.clone()),
            SPatKind::As(x, q) => {
                out.push(x.clone());
                go(q, out);
            }
            SPatKind::Con(_, ps) | SPatKind::Tuple(ps) | SPatKind::List(ps) => ps.iter().for_each(|q| go(q, out)),
            SPatKind::Wild | SPatKind::Int(_) => {}
        }
    }
    let mut out = Vec::new();
    go(p, &mut out);
    out
}

fn check_linear(ps: &[SPat]) -> DResult<()> {
    let mut seen = BTreeSet::new();
    for p in ps {
        for x in pat_vars(p) {
            if !seen.insert(x.clone()) {
                return Err(FrontError::new(p.span, format!("variable `{x}` bound twice in the same pattern")));
            }
        }
    }
    Ok(())
}

/// Names referenced by an expression (an over-approximation of its free
/// variables, sufficient for dependency analysis).
pub fn free_names(e: &SExpr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    expr_names(e, &mut out);
    out
}

fn expr_names(e: &SExpr, out: &mut BTreeSet<String>) {
    match &e.kind {
        SExprKind::Var(x) => {
            out.insert(x.clone());
        }
        SExprKind::BinOp(op, a, b) => {
            out.insert(op.clone());
            expr_names(a, out);
            expr_names(b, out);
        }
        SExprKind::Con(_) | SExprKind::Int(_) | SExprKind::Str(_) | SExprKind::Wild(_) => {}
        SExprKind::App(a, b) => {
            expr_names(a, out);
            expr_names(b, out);
        }
        SExprKind::Neg(a) | SExprKind::Lam(_, a) => expr_names(a, out),
        SExprKind::If(a, b, c) => {
            expr_names(a, out);
            expr_names(b, out);
            expr_names(c, out);
        }
        SExprKind::Case(s, alts) => {
            expr_names(s, out);
            for a in alts {
                rhs_names(&a.rhs, out);
            }
        }
        SExprKind::Let(ds, b) => {
            for d in ds {
                decl_free_names(d, out);
            }
            expr_names(b, out);
        }
        SExprKind::Tuple(es) | SExprKind::List(es) => es.iter().for_each(|a| expr_names(a, out)),
        SExprKind::Comp(h, qs) => {
            expr_names(h, out);
            for q in qs {
                match q {
                    SQual::Gen(_, e) | SQual::Guard(e) => expr_names(e, out),
                }
            }
        }
    }
}

fn rhs_names(r: &Rhs, out: &mut BTreeSet<String>) {
    match &r.body {
        RhsBody::Plain(e) => expr_names(e, out),
        RhsBody::Guarded(gs) => {
            for (g, e) in gs {
                expr_names(g, out);
                expr_names(e, out);
            }
        }
    }
    for d in &r.wheres {
        decl_free_names(d, out);
    }
}

fn decl_free_names(d: &SDecl, out: &mut BTreeSet<String>) {
    match d {
        SDecl::Fun { rhs, .. } | SDecl::Pat { rhs, .. } => rhs_names(rhs, out),
        SDecl::Sig { .. } => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::front::load;
    use crate::lang::Program;

    fn prog(src: &str) -> Program {
        match load("t.lm", src) {
            Ok(p) => p,
            Err(e) => panic!("{e}"),
        }
    }

    fn count(e: &Expr, f: &dyn Fn(&ExprKind) -> bool) -> usize {
        let mut n = usize::from(f(&e.kind));
        e.for_each_child(&mut |c| n += count(c, f));
        n
    }

    #[test]
    fn head_gets_error_branch() {
        let p = prog("head (x:_) = x\n");
        let e = &p.binding("head").unwrap().expr;
        assert_eq!(count(e, &|k| matches!(k, ExprKind::Case(..))), 1);
        assert_eq!(count(e, &|k| matches!(k, ExprKind::PatError(m) if m == "head")), 1);
    }

    #[test]
    fn guards_become_ifs() {
        let p = prog(
            "data IncList a = Emp | (:<) a (IncList a)\n\
             insert y Emp = y :< Emp\n\
             insert y (x :< xs) | y <= x = y :< x :< xs\n\
             \x20                  | otherwise = x :< insert y xs\n",
        );
        let e = &p.binding("insert").unwrap().expr;
        assert_eq!(count(e, &|k| matches!(k, ExprKind::If(..))), 1);
        assert_eq!(count(e, &|k| matches!(k, ExprKind::PatError(_))), 0);
    }

    #[test]
    fn known_constructor_avoids_second_case() {
        let p = prog(
            "data IncList a = Emp | (:<) a (IncList a)\n\
             merge xs Emp = xs\n\
             merge Emp ys = ys\n\
             merge (x :< xs) (y :< ys) = x :< merge xs (y :< ys)\n",
        );
        let e = &p.binding("merge").unwrap().expr;
        assert_eq!(count(e, &|k| matches!(k, ExprKind::Case(..))), 2);
        assert_eq!(count(e, &|k| matches!(k, ExprKind::PatError(_))), 0);
    }

    #[test]
    fn where_bindings_placed_per_branch() {
        let p = prog(
            "data T = L | N Int T\n\
             f t | a > 0 = a\n\
             \x20   | otherwise = b\n\
             \x20 where a = 1\n\
             \x20       N b _ = t\n",
        );
        let e = &p.binding("f").unwrap().expr;
        let ExprKind::Lam(_, body) = &e.kind else { panic!() };
        // `a` wraps the conditional; the pattern binding only the else branch.
        let ExprKind::Let(a, _, inner) = &body.kind else { panic!("{body}") };
        assert_eq!(a.as_str(), "a");
        let ExprKind::If(_, _, els) = &inner.kind else { panic!() };
        assert!(matches!(els.kind, ExprKind::Let(..)));
    }

    #[test]
    fn non_linear_pattern_rejected() {
        let e = load("t.lm", "f x x = x\n").unwrap_err();
        assert!(e.message.contains("bound twice"));
    }

    #[test]
    fn redundant_equation_warned() {
        let p = prog("f x = 1\nf 0 = 2\n");
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn comprehension_is_local_recursion() {
        let p = prog("g x xs = [y | y <- xs, y < x]\n");
        let e = &p.binding("g").unwrap().expr;
        assert_eq!(count(e, &|k| matches!(k, ExprKind::LetRec(..))), 1);
    }

    #[test]
    fn single_clause_unchanged_modulo_renaming() {
        let p = prog("max x y = if x >= y then x else y\n");
        let e = &p.binding("max").unwrap().expr;
        assert_eq!(e.to_string(), "(\\x -> (\\y -> if ((>=) x y)\n  then x\n  else y))");
    }
}

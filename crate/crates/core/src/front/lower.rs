//! Elaboration of a parsed file: annotations become refinement types,
//! measures and qualifiers; code is handed to the desugarer.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::desugar::{self, CtorInfo, Desugarer};
use super::parser::parse_pred;
use super::FrontError;
use crate::lang::*;

type LResult<T> = Result<T, FrontError>;

fn err<T>(span: Span, msg: impl Into<String>) -> LResult<T> {
    Err(FrontError::new(span, msg))
}

/// Names bound in a refinement, innermost last. The value variable is
/// bound under its surface name.
type Scope = Vec<(String, Ident)>;

fn lookup(sc: &Scope, x: &str) -> Option<Ident> {
    sc.iter().rev().find(|(n, _)| n == x).map(|(_, id)| id.clone())
}

/// Wildcards collected while lowering a qualifier body.
#[derive(Default)]
struct Wilds {
    allowed: bool,
    found: Vec<(Ident, Option<Sort>)>,
}

/// Translation of surface expressions into the refinement logic.
pub struct Logic<'a> {
    pub measures: &'a BTreeSet<String>,
    pub inlines: &'a BTreeMap<String, InlineFn>,
}

impl Logic<'_> {
    fn pred(&self, e: &SExpr, sc: &Scope, w: &mut Wilds) -> LResult<Pred> {
        let span = e.span;
        match &e.kind {
            SExprKind::Int(n) => Ok(Pred::Int(*n)),
            SExprKind::Var(x) | SExprKind::Con(x) => {
                if let Some(id) = lookup(sc, x) {
                    return Ok(Pred::Var(id));
                }
                match x.as_str() {
                    "true" | "True" => return Ok(Pred::tt()),
                    "false" | "False" => return Ok(Pred::ff()),
                    _ => {}
                }
                if let Some(f) = self.inlines.get(x) {
                    if f.params.is_empty() {
                        return Ok(f.body.clone());
                    }
                }
                err(span, format!("unbound variable `{x}` in refinement"))
            }
            SExprKind::Wild(sort) => {
                if !w.allowed {
                    return err(span, "wildcard `⋆` outside a qualifier");
                }
                let s = match sort {
                    Some(t) => Some(stype_sort(t)?),
                    None => None,
                };
                let id = Qualifier::wildcard(w.found.len() as u32);
                w.found.push((id.clone(), s));
                Ok(Pred::Var(id))
            }
            SExprKind::Neg(a) => Ok(Pred::arith(ArithOp::Sub, Pred::Int(0), self.pred(a, sc, w)?)),
            SExprKind::If(c, a, b) => Ok(Pred::ite(self.pred(c, sc, w)?, self.pred(a, sc, w)?, self.pred(b, sc, w)?)),
            SExprKind::BinOp(op, a, b) => {
                let pa = self.pred(a, sc, w)?;
                let pb = self.pred(b, sc, w)?;
                Ok(match op.as_str() {
                    "+" => Pred::arith(ArithOp::Add, pa, pb),
                    "-" => Pred::arith(ArithOp::Sub, pa, pb),
                    "*" => {
                        if !matches!(pa, Pred::Int(_)) && !matches!(pb, Pred::Int(_)) {
                            return err(span, "multiplication needs a literal operand");
                        }
                        Pred::arith(ArithOp::Mul, pa, pb)
                    }
                    "=" | "==" => Pred::eq(pa, pb),
                    "/=" | "!=" => Pred::rel(RelOp::Ne, pa, pb),
                    "<" => Pred::rel(RelOp::Lt, pa, pb),
                    "<=" => Pred::rel(RelOp::Le, pa, pb),
                    ">" => Pred::rel(RelOp::Gt, pa, pb),
                    ">=" => Pred::rel(RelOp::Ge, pa, pb),
                    "&&" => Pred::and([pa, pb]),
                    "||" => Pred::or([pa, pb]),
                    "=>" | "==>" => Pred::imp(pa, pb),
                    "<=>" => Pred::and([Pred::imp(pa.clone(), pb.clone()), Pred::imp(pb, pa)]),
                    _ => return err(span, format!("operator `{op}` is not in the refinement logic")),
                })
            }
            SExprKind::App(..) => {
                let (head, args) = spine(e);
                let SExprKind::Var(f) = &head.kind else {
                    return err(span, "only measures and logic functions can be applied in refinements");
                };
                if lookup(sc, f).is_some() {
                    return err(span, format!("`{f}` is a variable, not a function"));
                }
                let args = args.iter().map(|a| self.pred(a, sc, w)).collect::<LResult<Vec<_>>>()?;
                match (f.as_str(), args.len()) {
                    ("not", 1) => return Ok(Pred::not(args[0].clone())),
                    ("max", 2) | ("min", 2) => {
                        let op = if f == "max" { RelOp::Ge } else { RelOp::Le };
                        let c = Pred::rel(op, args[0].clone(), args[1].clone());
                        return Ok(Pred::ite(c, args[0].clone(), args[1].clone()));
                    }
                    _ => {}
                }
                if self.measures.contains(f) {
                    if args.len() != 1 {
                        return err(span, format!("measure `{f}` takes one argument"));
                    }
                    return Ok(Pred::App(Ident::global(f), args));
                }
                if let Some(fd) = self.inlines.get(f) {
                    if fd.params.len() != args.len() {
                        return err(
                            span,
                            format!("`{f}` expects {} argument(s), got {}", fd.params.len(), args.len()),
                        );
                    }
                    return Ok(fd.apply(&args));
                }
                err(span, format!("`{f}` is not a measure or logic function"))
            }
            _ => err(span, "expression is not in the refinement logic"),
        }
    }
}

fn spine(e: &SExpr) -> (&SExpr, Vec<&SExpr>) {
    let mut args = Vec::new();
    let mut h = e;
    while let SExprKind::App(f, a) = &h.kind {
        args.push(&**a);
        h = f;
    }
    args.reverse();
    (h, args)
}

/// Sort written in a qualifier parameter or wildcard annotation.
fn stype_sort(t: &SType) -> LResult<Sort> {
    match &t.kind {
        STypeKind::Var(a) => Ok(Sort::TyVar(a.clone())),
        STypeKind::Con(c, args) if args.is_empty() && c == "Int" => Ok(Sort::Int),
        STypeKind::Con(c, args) if args.is_empty() && c == "Bool" => Ok(Sort::Bool),
        STypeKind::Con(c, args) => Ok(Sort::Data(c.clone(), args.iter().map(stype_sort).collect::<LResult<_>>()?)),
        STypeKind::Refine(_, b, _) => stype_sort(b),
        _ => err(t.span, "expected a sort"),
    }
}

/// Turn an alias value argument written in type syntax back into an
/// expression.
fn stype_expr(t: &SType) -> Option<SExpr> {
    let kind = match &t.kind {
        STypeKind::Var(x) => SExprKind::Var(x.clone()),
        STypeKind::Con(c, args) if args.is_empty() => SExprKind::Con(c.clone()),
        STypeKind::PredArg(e) => return Some((**e).clone()),
        STypeKind::VarApp(f, args) => {
            let mut e = SExpr { span: t.span, kind: SExprKind::Var(f.clone()) };
            for a in args {
                e = SExpr { span: t.span, kind: SExprKind::App(Box::new(e), Box::new(stype_expr(a)?)) };
            }
            return Some(e);
        }
        _ => return None,
    };
    Some(SExpr { span: t.span, kind })
}

struct DataSrc<'a> {
    decl: &'a SData,
    refined: bool,
}

struct Elab<'a> {
    supply: NameSupply,
    /// Type constructor arities, builtins included.
    arity: BTreeMap<String, usize>,
    datas: Vec<DataSrc<'a>>,
    salias: BTreeMap<String, &'a SAlias>,
    aliases: BTreeMap<String, TypeAlias>,
    expanding: Vec<String>,
    measures: BTreeSet<String>,
    inlines: BTreeMap<String, InlineFn>,
    funs: BTreeMap<String, Vec<&'a SDecl>>,
    fun_order: Vec<String>,
    ann_sigs: BTreeMap<String, (&'a SSig, Span)>,
    plain_sigs: BTreeMap<String, (&'a SSig, Span)>,
}

/// Elaborate a parsed file into a core program.
pub fn elaborate(file: &SourceFile) -> LResult<Program> {
    let mut el = Elab {
        supply: NameSupply::new(),
        arity: BTreeMap::new(),
        datas: Vec::new(),
        salias: BTreeMap::new(),
        aliases: BTreeMap::new(),
        expanding: Vec::new(),
        measures: BTreeSet::new(),
        inlines: BTreeMap::new(),
        funs: BTreeMap::new(),
        fun_order: Vec::new(),
        ann_sigs: BTreeMap::new(),
        plain_sigs: BTreeMap::new(),
    };
    let mut measure_spans = BTreeMap::new();
    let mut qualifs = Vec::new();
    let mut alias_order = Vec::new();
    for item in &file.items {
        match item {
            Item::Ann(Annotation::Alias(a)) => {
                if el.salias.insert(a.name.clone(), a).is_some() {
                    return err(a.span, format!("duplicate type alias `{}`", a.name));
                }
                alias_order.push(a.name.clone());
            }
            Item::Ann(Annotation::Data(d)) => el.datas.push(DataSrc { decl: d, refined: true }),
            Item::Data(d) => el.datas.push(DataSrc { decl: d, refined: false }),
            Item::Ann(Annotation::Measure { name, span }) => {
                if measure_spans.insert(name.clone(), *span).is_some() {
                    return err(*span, format!("duplicate measure `{name}`"));
                }
                el.measures.insert(name.clone());
            }
            Item::Ann(Annotation::Sig { name, sig, span }) => {
                if el.ann_sigs.insert(name.clone(), (sig, *span)).is_some() {
                    return err(*span, format!("duplicate refinement signature for `{name}`"));
                }
            }
            Item::Ann(Annotation::Qualif(q)) => qualifs.push(q),
            Item::Decl(SDecl::Sig { names, sig, span }) => {
                for n in names {
                    if el.plain_sigs.insert(n.clone(), (sig, *span)).is_some() {
                        return err(*span, format!("duplicate type signature for `{n}`"));
                    }
                }
            }
            Item::Decl(d @ SDecl::Fun { name, span, .. }) => {
                if let Some(eqs) = el.funs.get_mut(name) {
                    if el.fun_order.last() != Some(name) {
                        return err(*span, format!("equations for `{name}` are not contiguous"));
                    }
                    eqs.push(d);
                } else {
                    el.funs.insert(name.clone(), vec![d]);
                    el.fun_order.push(name.clone());
                }
            }
            Item::Decl(SDecl::Pat { span, .. }) => return err(*span, "top-level pattern bindings are not supported"),
        }
    }
    for (m, span) in &measure_spans {
        if !el.funs.contains_key(m) {
            return err(*span, format!("measure `{m}` has no defining equations"));
        }
    }

    // Datatypes: builtins first, then user declarations. A refined
    // declaration replaces a plain one of the same name.
    let mut ctors: BTreeMap<String, CtorInfo> = BTreeMap::new();
    let builtin = |name: &str, cs: &[(&str, usize)], ctors: &mut BTreeMap<String, CtorInfo>| {
        for (c, n) in cs {
            ctors.insert(
                c.to_string(),
                CtorInfo { data: name.to_string(), arity: *n, siblings: cs.iter().map(|(c, _)| c.to_string()).collect() },
            );
        }
    };
    el.arity.insert(LIST.into(), 1);
    builtin(LIST, &[(NIL, 0), (CONS, 2)], &mut ctors);
    el.arity.insert(UNIT.into(), 0);
    builtin(UNIT, &[(UNIT, 0)], &mut ctors);
    for n in 2..=4 {
        let t = tuple_name(n);
        el.arity.insert(t.clone(), n);
        builtin(&t, &[(&t, n)], &mut ctors);
    }
    let mut chosen: Vec<usize> = Vec::new();
    for (i, ds) in el.datas.iter().enumerate() {
        let d = ds.decl;
        if matches!(d.name.as_str(), "Int" | "Bool") || el.arity.contains_key(&d.name) && !chosen.iter().any(|&j| el.datas[j].decl.name == d.name) {
            return err(d.span, format!("datatype `{}` is already defined", d.name));
        }
        if let Some(pos) = chosen.iter().position(|&j| el.datas[j].decl.name == d.name) {
            let other = &el.datas[chosen[pos]];
            if other.refined == ds.refined {
                return err(d.span, format!("datatype `{}` is already defined", d.name));
            }
            let names = |x: &SData| x.ctors.iter().map(|c| (c.name.clone(), c.fields.len())).collect::<Vec<_>>();
            if names(d) != names(other.decl) || d.params != other.decl.params {
                return err(d.span, format!("refined declaration of `{}` does not match its plain declaration", d.name));
            }
            if ds.refined {
                chosen[pos] = i;
            }
            continue;
        }
        el.arity.insert(d.name.clone(), d.params.len());
        chosen.push(i);
    }
    for &i in &chosen {
        let d = el.datas[i].decl;
        for c in &d.ctors {
            let info = CtorInfo {
                data: d.name.clone(),
                arity: c.fields.len(),
                siblings: d.ctors.iter().map(|c| c.name.clone()).collect(),
            };
            if ctors.insert(c.name.clone(), info).is_some() || c.name == "True" || c.name == "False" {
                return err(c.span, format!("constructor `{}` is already defined", c.name));
            }
        }
    }

    // Measure symbols and their signatures.
    let mut msigs = BTreeMap::new();
    let mut sort_ctx = SortCtx::default();
    for m in measure_spans.keys() {
        let sig = el.measure_sig(m, &ctors)?;
        sort_ctx.funs.insert(m.clone(), FunSort { args: vec![sig.arg_sort.clone()], result: sig.result.clone() });
        msigs.insert(m.clone(), sig);
    }

    // Logic functions: top-level functions used inside refinements.
    el.lower_inlines(file, &sort_ctx, &qualifs)?;

    // Datatype declarations.
    let mut datas = vec![
        DataDecl {
            name: LIST.into(),
            params: vec!["a".into()],
            ctors: vec![
                CtorDecl { name: NIL.into(), fields: Vec::new(), span: Span::dummy() },
                CtorDecl {
                    name: CONS.into(),
                    fields: vec![
                        (el.supply.fresh("hd"), RType::tyvar("a")),
                        (el.supply.fresh("tl"), RType::list(RType::tyvar("a"))),
                    ],
                    span: Span::dummy(),
                },
            ],
            span: Span::dummy(),
        },
        DataDecl {
            name: UNIT.into(),
            params: Vec::new(),
            ctors: vec![CtorDecl { name: UNIT.into(), fields: Vec::new(), span: Span::dummy() }],
            span: Span::dummy(),
        },
    ];
    for n in 2..=4 {
        let params: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
        let fields = params.iter().enumerate().map(|(i, a)| (el.supply.fresh(&format!("f{i}")), RType::tyvar(a))).collect();
        datas.push(DataDecl {
            name: tuple_name(n),
            params,
            ctors: vec![CtorDecl { name: tuple_name(n), fields, span: Span::dummy() }],
            span: Span::dummy(),
        });
    }
    for &i in &chosen {
        let d = el.datas[i].decl;
        let mut cs = Vec::new();
        for c in &d.ctors {
            let mut sc: Scope = Vec::new();
            let mut fields = Vec::new();
            for (k, (fname, fty)) in c.fields.iter().enumerate() {
                let t = el.ty(fty, &mut sc)?;
                check_tyvars(&t, &d.params, fty.span)?;
                let name = fname.clone().unwrap_or_else(|| format!("field{k}"));
                let id = el.supply.fresh(&name);
                if let Some(n) = fname {
                    sc.push((n.clone(), id.clone()));
                }
                fields.push((id, t));
            }
            cs.push(CtorDecl { name: c.name.clone(), fields, span: c.span });
        }
        datas.push(DataDecl { name: d.name.clone(), params: d.params.clone(), ctors: cs, span: d.span });
    }

    // Measure equations.
    let mut measures = Vec::new();
    for (m, sig) in msigs {
        measures.push(el.measure_decl(&m, sig, &datas, measure_spans[&m])?);
    }

    // Aliases, including unused ones (they seed qualifiers).
    for a in &alias_order {
        el.alias(a)?;
    }

    // Signatures.
    let mut sigs = BTreeMap::new();
    for (name, (sig, span)) in el.ann_sigs.clone() {
        if !el.funs.contains_key(&name) {
            return err(span, format!("signature for `{name}` has no binding"));
        }
        let ty = el.sig(sig)?;
        sigs.insert(name.clone(), Sig { name: Ident::global(&name), ty, ord: sig.ord.clone(), span });
    }
    let mut shapes = BTreeMap::new();
    for (name, (sig, span)) in el.plain_sigs.clone() {
        if !el.funs.contains_key(&name) {
            return err(span, format!("type signature for `{name}` has no binding"));
        }
        let ty = el.sig(sig)?.shape();
        shapes.insert(name.clone(), ty.clone());
        sigs.entry(name.clone())
            .or_insert_with(|| Sig { name: Ident::global(&name), ty, ord: sig.ord.clone(), span });
    }

    // Qualifiers.
    let mut mctx = SortCtx::default();
    for m in &measures {
        mctx.funs.insert(m.name.clone(), FunSort { args: vec![m.arg_sort()], result: m.result.clone() });
    }
    let mut qualifiers = Vec::new();
    for q in qualifs {
        qualifiers.push(el.qualifier(q, &mctx)?);
    }

    let mut prog = Program {
        datas,
        aliases: el.aliases.values().cloned().collect(),
        measures,
        inlines: el.inlines.clone(),
        sigs,
        shapes,
        binds: Vec::new(),
        qualifiers,
        warnings: Vec::new(),
        next_node: 0,
    };
    wf_check(&prog)?;

    // Code.
    let globals: BTreeSet<String> = el.funs.keys().cloned().collect();
    let mut ds = Desugarer::new(&ctors, &globals, &el.supply, 0);
    for name in &el.fun_order {
        let eqs = &el.funs[name];
        let expr = ds.binding(name, eqs)?;
        let span = eqs.iter().fold(eqs[0].span(), |s, d| s.to(d.span()));
        prog.binds.push(Binding { name: Ident::global(name), expr, span });
    }
    prog.next_node = ds.next_node();
    prog.warnings = std::mem::take(&mut ds.warnings);
    prog.warnings.sort();
    Ok(prog)
}

fn check_tyvars(t: &RType, params: &[String], span: Span) -> LResult<()> {
    for a in t.free_tyvars() {
        if !params.contains(&a) {
            return err(span, format!("type variable `{a}` is not a parameter of the datatype"));
        }
    }
    Ok(())
}

fn wf_check(prog: &Program) -> LResult<()> {
    let ctx = prog.sort_ctx();
    let none = BTreeMap::new();
    for s in prog.sigs.values() {
        s.ty.check_wf(&ctx, &none).map_err(|e| FrontError::new(s.span, format!("ill-formed signature for `{}`: {e}", s.name)))?;
    }
    for d in &prog.datas {
        for c in &d.ctors {
            d.ctor_type(c)
                .check_wf(&ctx, &none)
                .map_err(|e| FrontError::new(c.span, format!("ill-formed constructor `{}`: {e}", c.name)))?;
        }
    }
    for a in &prog.aliases {
        // Value parameters are sorted by use; give them unknown sorts.
        let vars: BTreeMap<Ident, Sort> =
            a.vparams.iter().enumerate().map(|(i, x)| (x.clone(), Sort::Meta(i as u32))).collect();
        alias_wf(&a.body, &ctx, &vars).map_err(|e| FrontError::new(a.span, format!("ill-formed type alias `{}`: {e}", a.name)))?;
    }
    Ok(())
}

/// Well-formedness of an alias body, sharing one sort substitution for the
/// value parameters across all refinements.
fn alias_wf(t: &RType, ctx: &SortCtx, vars: &BTreeMap<Ident, Sort>) -> Result<(), SortError> {
    let mut preds = Vec::new();
    collect_base_preds(t, &mut preds);
    let mut subst = SortSubst::new();
    for (s, p) in preds {
        let mut scope = vars.clone();
        scope.insert(Ident::vv(), s);
        for v in scope.values_mut() {
            *v = subst.apply(v);
        }
        let mut chk = SortChecker::new(ctx, &scope);
        let got = chk.sort_of(&p)?;
        if !chk.subst.unify(&got, &Sort::Bool) {
            return Err(SortError::Mismatch { term: p.to_string(), expected: Sort::Bool, found: got });
        }
        for (x, s) in vars {
            let solved = chk.subst.apply(&subst.apply(s));
            if !subst.unify(s, &solved) {
                return Err(SortError::Mismatch { term: x.to_string(), expected: subst.apply(s), found: solved });
            }
        }
    }
    Ok(())
}

fn collect_base_preds(t: &RType, out: &mut Vec<(Sort, Pred)>) {
    match t {
        RType::Base { base, pred } => {
            out.push((base.sort(), pred.clone()));
            if let BaseType::TyCon(_, args) = base {
                for a in args {
                    collect_base_preds(a, out);
                }
            }
        }
        RType::Fun { dom, cod, .. } => {
            collect_base_preds(dom, out);
            collect_base_preds(cod, out);
        }
        RType::Forall { body, .. } => collect_base_preds(body, out),
    }
}

struct MeasureSig {
    data: String,
    params: Vec<String>,
    arg_sort: Sort,
    result: Sort,
    arg: Ident,
    result_pred: Pred,
}

impl<'a> Elab<'a> {
    fn logic(&self) -> Logic<'_> {
        Logic { measures: &self.measures, inlines: &self.inlines }
    }

    fn pred(&self, e: &SExpr, sc: &Scope) -> LResult<Pred> {
        self.logic().pred(e, sc, &mut Wilds::default())
    }

    fn sig(&mut self, sig: &SSig) -> LResult<RType> {
        let t = self.ty(&sig.ty, &mut Vec::new())?;
        let fv = t.free_tyvars();
        for a in &sig.ord {
            if !fv.contains(a) {
                return err(sig.ty.span, format!("constrained type variable `{a}` does not occur in the type"));
            }
        }
        Ok(t.generalize())
    }

    /// Lower a surface type. `sc` holds the binders in scope.
    fn ty(&mut self, t: &SType, sc: &mut Scope) -> LResult<RType> {
        match &t.kind {
            STypeKind::Var(a) => Ok(RType::tyvar(a)),
            STypeKind::Con(c, args) => self.tycon(t.span, c, args, sc),
            STypeKind::Fun(binder, dom, cod) => {
                let name = binder.clone().unwrap_or_else(|| "arg".to_string());
                let id = self.supply.fresh(&name);
                let n = sc.len();
                if let Some(b) = binder {
                    // A binder mentioned in its own domain denotes the value.
                    sc.push((b.clone(), Ident::vv()));
                }
                let d = self.ty(dom, sc);
                sc.truncate(n);
                let d = d?;
                if binder.is_some() {
                    sc.push((name, id.clone()));
                }
                let c = self.ty(cod, sc);
                sc.truncate(n);
                Ok(RType::fun(id, d, c?))
            }
            STypeKind::Refine(v, base, p) => {
                let b = self.ty(base, sc)?;
                if !b.is_base() {
                    return err(t.span, "refinements apply to base types only");
                }
                sc.push((v.clone(), Ident::vv()));
                let pr = self.pred(p, sc);
                sc.pop();
                Ok(b.strengthen(pr?))
            }
            STypeKind::VarApp(f, _) => err(t.span, format!("`{f}` is not a type")),
            STypeKind::PredArg(_) => err(t.span, "expected a type, found a value argument"),
        }
    }

    fn tycon(&mut self, span: Span, c: &str, args: &[SType], sc: &mut Scope) -> LResult<RType> {
        match c {
            "Int" | "Bool" if !args.is_empty() => return err(span, format!("`{c}` takes no arguments")),
            "Int" => return Ok(RType::int()),
            "Bool" => return Ok(RType::bool()),
            _ => {}
        }
        if self.salias.contains_key(c) {
            let alias = self.alias(c)?;
            let params = &self.salias[c].params;
            if params.len() != args.len() {
                return err(span, format!("type alias `{c}` expects {} argument(s), got {}", params.len(), args.len()));
            }
            let mut targs = Vec::new();
            let mut vargs = Vec::new();
            for (p, a) in params.clone().iter().zip(args) {
                if p.starts_with(|ch: char| ch.is_uppercase()) {
                    let Some(e) = stype_expr(a) else {
                        return err(a.span, format!("expected a value argument for `{p}`"));
                    };
                    vargs.push(self.pred(&e, sc)?);
                } else {
                    targs.push(self.ty(a, sc)?);
                }
            }
            return alias.expand(&targs, &vargs).map_err(|m| FrontError::new(span, m));
        }
        let Some(&n) = self.arity.get(c) else {
            return err(span, format!("unknown type `{c}`"));
        };
        if n != args.len() {
            return err(span, format!("type `{c}` expects {n} argument(s), got {}", args.len()));
        }
        let mut targs = Vec::new();
        for a in args {
            let t = self.ty(a, sc)?;
            if !t.is_base() {
                return err(a.span, "function types cannot be type arguments");
            }
            targs.push(t);
        }
        Ok(RType::con(c, targs))
    }

    fn alias(&mut self, name: &str) -> LResult<TypeAlias> {
        if let Some(a) = self.aliases.get(name) {
            return Ok(a.clone());
        }
        let sa = self.salias[name];
        if self.expanding.iter().any(|n| n == name) {
            return err(sa.span, format!("type alias `{name}` is recursive"));
        }
        self.expanding.push(name.to_string());
        let mut sc: Scope = Vec::new();
        let mut tparams = Vec::new();
        let mut vparams = Vec::new();
        for p in &sa.params {
            if p.starts_with(|ch: char| ch.is_uppercase()) {
                let id = self.supply.fresh(p);
                sc.push((p.clone(), id.clone()));
                vparams.push(id);
            } else {
                tparams.push(p.clone());
            }
        }
        let body = self.ty(&sa.body, &mut sc);
        self.expanding.pop();
        let body = body?;
        for a in body.free_tyvars() {
            if !tparams.contains(&a) {
                return err(sa.span, format!("type variable `{a}` is not a parameter of alias `{name}`"));
            }
        }
        let a = TypeAlias { name: name.to_string(), tparams, vparams, body, span: sa.span };
        self.aliases.insert(name.to_string(), a.clone());
        Ok(a)
    }

    fn measure_sig(&mut self, m: &str, ctors: &BTreeMap<String, CtorInfo>) -> LResult<MeasureSig> {
        let eqs = self.funs[m].clone();
        let span = eqs[0].span();
        let sig = self.ann_sigs.get(m).or_else(|| self.plain_sigs.get(m)).map(|(s, _)| *s);
        if let Some(sig) = sig {
            let t = self.ty(&sig.ty, &mut Vec::new())?;
            let RType::Fun { binder, dom, cod } = &t else {
                return err(sig.ty.span, format!("measure `{m}` must take one argument"));
            };
            let RType::Base { base: BaseType::TyCon(d, args), .. } = &**dom else {
                return err(sig.ty.span, format!("measure `{m}` must take a datatype argument"));
            };
            let mut params = Vec::new();
            for a in args {
                match a {
                    RType::Base { base: BaseType::TyVar(x), .. } if !params.contains(x) => params.push(x.clone()),
                    _ => return err(sig.ty.span, format!("measure `{m}` must be polymorphic in the datatype's parameters")),
                }
            }
            let RType::Base { base, pred } = &**cod else {
                return err(sig.ty.span, format!("measure `{m}` must take exactly one argument"));
            };
            let result = match base {
                BaseType::Int => Sort::Int,
                BaseType::Bool => Sort::Bool,
                _ => return err(sig.ty.span, format!("measure `{m}` must return Int or Bool")),
            };
            let arg_sort = Sort::Data(d.clone(), params.iter().map(|a| Sort::TyVar(a.clone())).collect());
            return Ok(MeasureSig { data: d.clone(), params, arg_sort, result, arg: binder.clone(), result_pred: pred.clone() });
        }
        // No signature: the datatype comes from the constructor patterns and
        // the result sort from the shape of the right-hand sides.
        let mut data = None;
        let mut result = None;
        for d in &eqs {
            if let SDecl::Fun { args, rhs, .. } = d {
                if let Some(SPat { kind: SPatKind::Con(c, _), .. }) = args.first() {
                    data = ctors.get(c).map(|i| i.data.clone());
                }
                if let (None, RhsBody::Plain(e)) = (&result, &rhs.body) {
                    result = guess_sort(e);
                }
            }
        }
        let Some(data) = data else {
            return err(span, format!("cannot determine the datatype of measure `{m}`; add a signature"));
        };
        let params: Vec<String> = match self.datas.iter().find(|d| d.decl.name == data) {
            Some(d) => d.decl.params.clone(),
            None if data == LIST => vec!["a".into()],
            None => (0..self.arity[&data]).map(|i| format!("t{i}")).collect(),
        };
        let arg_sort = Sort::Data(data.clone(), params.iter().map(|a| Sort::TyVar(a.clone())).collect());
        Ok(MeasureSig {
            data,
            params,
            arg_sort,
            result: result.unwrap_or(Sort::Int),
            arg: self.supply.fresh("x"),
            result_pred: Pred::tt(),
        })
    }

    fn measure_decl(&mut self, m: &str, sig: MeasureSig, datas: &[DataDecl], mspan: Span) -> LResult<MeasureDecl> {
        let data = datas.iter().find(|d| d.name == sig.data).expect("measure datatype");
        let mut eqs: Vec<Option<MeasureEq>> = vec![None; data.ctors.len()];
        for d in &self.funs[m] {
            let SDecl::Fun { args, rhs, span, .. } = d else { continue };
            let [pat] = args.as_slice() else {
                return err(*span, format!("measure `{m}` must have exactly one argument"));
            };
            let (ctor, subs) = match &pat.kind {
                SPatKind::Con(c, ps) => (c.clone(), ps.clone()),
                SPatKind::List(ps) if ps.is_empty() => (NIL.to_string(), Vec::new()),
                SPatKind::Tuple(ps) => (tuple_name(ps.len()), ps.clone()),
                _ => return err(pat.span, format!("equations of measure `{m}` must match a constructor")),
            };
            let Some(k) = data.ctors.iter().position(|c| c.name == ctor) else {
                return err(pat.span, format!("`{ctor}` is not a constructor of `{}`", data.name));
            };
            if subs.len() != data.ctors[k].fields.len() {
                return err(pat.span, format!("constructor `{ctor}` expects {} argument(s)", data.ctors[k].fields.len()));
            }
            if eqs[k].is_some() {
                return err(*span, format!("duplicate equation for constructor `{ctor}` in measure `{m}`"));
            }
            let mut sc: Scope = Vec::new();
            let mut binders = Vec::new();
            for s in &subs {
                match &s.kind {
                    SPatKind::Var(x) => {
                        let id = self.supply.fresh(x);
                        sc.push((x.clone(), id.clone()));
                        binders.push(id);
                    }
                    SPatKind::Wild => binders.push(self.supply.fresh("_")),
                    _ => return err(s.span, "measure patterns may only bind variables"),
                }
            }
            if !rhs.wheres.is_empty() {
                return err(*span, "measure equations cannot have where-bindings");
            }
            let RhsBody::Plain(e) = &rhs.body else {
                return err(*span, "measure equations cannot have guards");
            };
            let body = self.pred(e, &sc)?;
            let mut bad = None;
            check_recursion(&body, m, &binders, &mut bad);
            if let Some(t) = bad {
                return err(e.span, format!("measure `{m}` may only be applied to pattern variables, found `{t}`"));
            }
            eqs[k] = Some(MeasureEq { ctor, binders, body, span: *span });
        }
        let mut out = Vec::new();
        for (c, e) in data.ctors.iter().zip(eqs) {
            match e {
                Some(e) => out.push(e),
                None => return err(mspan, format!("missing equation for constructor `{}` in measure `{m}`", c.name)),
            }
        }
        Ok(MeasureDecl {
            name: m.to_string(),
            data: sig.data,
            params: sig.params,
            result: sig.result,
            arg: sig.arg,
            result_pred: sig.result_pred,
            eqs: out,
            span: mspan,
        })
    }

    /// Find the top-level functions used inside refinements and lower their
    /// bodies to the logic, in dependency order.
    fn lower_inlines(&mut self, file: &SourceFile, ctx: &SortCtx, qualifs: &[&SQualif]) -> LResult<()> {
        let mut used = BTreeSet::new();
        for item in &file.items {
            match item {
                Item::Ann(Annotation::Alias(a)) => stype_names(&a.body, &mut used),
                Item::Ann(Annotation::Data(d)) => {
                    for c in &d.ctors {
                        for (_, t) in &c.fields {
                            stype_names(t, &mut used);
                        }
                    }
                }
                Item::Ann(Annotation::Sig { sig, .. }) => stype_names(&sig.ty, &mut used),
                _ => {}
            }
        }
        for q in qualifs {
            used.extend(desugar::free_names(&q.body));
        }
        let mut state: BTreeMap<String, bool> = BTreeMap::new();
        for n in used {
            self.inline(&n, ctx, &mut state)?;
        }
        Ok(())
    }

    fn inline(&mut self, name: &str, ctx: &SortCtx, state: &mut BTreeMap<String, bool>) -> LResult<()> {
        if self.measures.contains(name) || !self.funs.contains_key(name) {
            return Ok(());
        }
        match state.get(name) {
            Some(true) => return Ok(()),
            Some(false) => {
                return err(self.funs[name][0].span(), format!("recursive function `{name}` cannot be used in a refinement"));
            }
            None => {}
        }
        state.insert(name.to_string(), false);
        let eqs = self.funs[name].clone();
        let SDecl::Fun { args, rhs, span, .. } = eqs[0] else { unreachable!() };
        let mut deps = BTreeSet::new();
        rhs_free(rhs, &mut deps);
        for d in deps {
            self.inline(&d, ctx, state)?;
        }
        if eqs.len() > 1 {
            return err(*span, format!("`{name}` is used in a refinement and must be defined by a single equation"));
        }
        let mut sc: Scope = Vec::new();
        let mut params = Vec::new();
        for a in args {
            let SPatKind::Var(x) = &a.kind else {
                return err(a.span, format!("`{name}` is used in a refinement; its arguments must be variables"));
            };
            let id = self.supply.fresh(x);
            sc.push((x.clone(), id.clone()));
            params.push(id);
        }
        let RhsBody::Plain(body_e) = &rhs.body else {
            return err(*span, format!("`{name}` is used in a refinement and cannot have guards"));
        };
        // Where-bindings are substituted into the body.
        let mut locals: Vec<(Ident, Pred)> = Vec::new();
        let mut lsc = sc.clone();
        let mut placeholders = Vec::new();
        for w in &rhs.wheres {
            match w {
                SDecl::Fun { name: n, args, .. } if args.is_empty() => {
                    let id = self.supply.fresh(n);
                    lsc.push((n.clone(), id.clone()));
                    placeholders.push((w, id));
                }
                SDecl::Sig { .. } => {}
                _ => return err(w.span(), format!("`{name}` is used in a refinement; its where-bindings must be simple")),
            }
        }
        for (w, id) in &placeholders {
            let SDecl::Fun { rhs: wr, .. } = w else { unreachable!() };
            let RhsBody::Plain(we) = &wr.body else {
                return err(w.span(), "guarded where-binding in a logic function");
            };
            locals.push((id.clone(), self.pred(we, &lsc)?));
        }
        let mut body = self.pred(body_e, &lsc)?;
        for _ in 0..=locals.len() {
            let map: Subst = locals.iter().cloned().collect();
            body = body.subst(&map);
        }
        if locals.iter().any(|(id, _)| body.mentions(id)) {
            return err(*span, format!("where-bindings of `{name}` are cyclic"));
        }
        let mut vars = BTreeMap::new();
        for (i, p) in params.iter().enumerate() {
            vars.insert(p.clone(), Sort::Meta(i as u32));
        }
        let mut chk = SortChecker::new(ctx, &vars);
        let result = chk
            .sort_of(&body)
            .map_err(|e| FrontError::new(*span, format!("`{name}` cannot be used in a refinement: {e}")))?;
        let result = chk.subst.apply(&result);
        let param_sorts = (0..params.len()).map(|i| chk.subst.apply(&Sort::Meta(i as u32))).collect();
        self.inlines.insert(name.to_string(), InlineFn { name: name.to_string(), params, param_sorts, result, body });
        state.insert(name.to_string(), true);
        Ok(())
    }

    fn qualifier(&mut self, q: &SQualif, ctx: &SortCtx) -> LResult<Qualifier> {
        let mut sc: Scope = Vec::new();
        let mut vv_sort = None;
        let mut params = Vec::new();
        let mut gen = BTreeMap::new();
        for (x, t) in &q.params {
            let s = stype_sort(t)?.generalize(&mut gen);
            if x == "v" && vv_sort.is_none() {
                vv_sort = Some(s);
                sc.push((x.clone(), Ident::vv()));
            } else {
                let id = Qualifier::wildcard(params.len() as u32);
                sc.push((x.clone(), id.clone()));
                params.push((id, s));
            }
        }
        let body = self.pred(&q.body, &sc)?;
        let vv_sort = vv_sort.unwrap_or(Sort::Meta(gen.len() as u32 + 100));
        let qual = Qualifier { vv_sort, params, body };
        let qual = check_qualifier(&qual, ctx)
            .map_err(|e| FrontError::new(q.span, format!("ill-sorted qualifier `{}`: {e}", q.name)))?;
        Ok(qual.normalize())
    }
}

/// Check a qualifier's body for well-sortedness, refining meta sorts.
pub fn check_qualifier(q: &Qualifier, ctx: &SortCtx) -> Result<Qualifier, SortError> {
    let mut vars = BTreeMap::new();
    vars.insert(Ident::vv(), q.vv_sort.clone());
    for (x, s) in &q.params {
        vars.insert(x.clone(), s.clone());
    }
    let mut chk = SortChecker::new(ctx, &vars);
    let s = chk.sort_of(&q.body)?;
    if !chk.subst.unify(&s, &Sort::Bool) {
        return Err(SortError::Mismatch { term: q.body.to_string(), expected: Sort::Bool, found: s });
    }
    Ok(Qualifier {
        vv_sort: chk.subst.apply(&q.vv_sort),
        params: q.params.iter().map(|(x, s)| (x.clone(), chk.subst.apply(s))).collect(),
        body: q.body.clone(),
    })
}

/// Parse a qualifier written as a predicate over `v` and wildcards `⋆`
/// (optionally sorted, `⋆:Int`).
pub fn parse_qualifier(text: &str, prog: &Program) -> LResult<Qualifier> {
    let e = parse_pred(text)?;
    let measures: BTreeSet<String> = prog.measures.iter().map(|m| m.name.clone()).collect();
    let logic = Logic { measures: &measures, inlines: &prog.inlines };
    let sc: Scope = vec![("v".to_string(), Ident::vv())];
    let mut w = Wilds { allowed: true, found: Vec::new() };
    let body = logic.pred(&e, &sc, &mut w)?;
    let mut gen = BTreeMap::new();
    let mut next = 0u32;
    let mut params = Vec::new();
    for (id, s) in w.found {
        let s = match s {
            Some(s) => s.generalize(&mut gen),
            None => {
                next += 1;
                Sort::Meta(500 + next)
            }
        };
        params.push((id, s));
    }
    let q = Qualifier { vv_sort: Sort::Meta(400), params, body };
    let q = check_qualifier(&q, &prog.sort_ctx()).map_err(|err| FrontError::new(e.span, format!("ill-sorted qualifier: {err}")))?;
    Ok(q.normalize())
}

fn check_recursion(p: &Pred, m: &str, binders: &[Ident], bad: &mut Option<Pred>) {
    if let Pred::App(f, args) = p {
        if f.as_str() == m && !matches!(&args[..], [Pred::Var(x)] if binders.contains(x)) {
            bad.get_or_insert_with(|| p.clone());
        }
    }
    for c in p.children() {
        check_recursion(c, m, binders, bad);
    }
}

/// Result sort suggested by the syntax of a measure body.
fn guess_sort(e: &SExpr) -> Option<Sort> {
    match &e.kind {
        SExprKind::Int(_) | SExprKind::Neg(_) => Some(Sort::Int),
        SExprKind::Con(c) if c == "True" || c == "False" => Some(Sort::Bool),
        SExprKind::BinOp(op, ..) => match op.as_str() {
            "+" | "-" | "*" => Some(Sort::Int),
            _ => Some(Sort::Bool),
        },
        SExprKind::If(_, a, b) => guess_sort(a).or_else(|| guess_sort(b)),
        SExprKind::App(..) => match &spine(e).0.kind {
            SExprKind::Var(f) if f == "max" || f == "min" => Some(Sort::Int),
            SExprKind::Var(f) if f == "not" => Some(Sort::Bool),
            _ => None,
        },
        _ => None,
    }
}

fn stype_names(t: &SType, out: &mut BTreeSet<String>) {
    match &t.kind {
        STypeKind::Var(_) => {}
        STypeKind::Con(_, args) => args.iter().for_each(|a| stype_names(a, out)),
        STypeKind::VarApp(f, args) => {
            out.insert(f.clone());
            args.iter().for_each(|a| stype_names(a, out));
        }
        STypeKind::Fun(_, a, b) => {
            stype_names(a, out);
            stype_names(b, out);
        }
        STypeKind::Refine(_, b, p) => {
            stype_names(b, out);
            out.extend(desugar::free_names(p));
        }
        STypeKind::PredArg(p) => out.extend(desugar::free_names(p)),
    }
}

fn rhs_free(r: &Rhs, out: &mut BTreeSet<String>) {
    match &r.body {
        RhsBody::Plain(e) => out.extend(desugar::free_names(e)),
        RhsBody::Guarded(gs) => {
            for (g, e) in gs {
                out.extend(desugar::free_names(g));
                out.extend(desugar::free_names(e));
            }
        }
    }
    for w in &r.wheres {
        if let SDecl::Fun { rhs, .. } | SDecl::Pat { rhs, .. } = w {
            rhs_free(rhs, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::front::load;

    fn prog(src: &str) -> Program {
        match load("t.lm", src) {
            Ok(p) => p,
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn nat_alias_expands() {
        let p = prog("{-@ type Nat = {v:Int | 0 <= v} @-}\n{-@ f :: Nat -> Nat @-}\nf x = x\n");
        assert_eq!(p.aliases[0].body.to_string(), "{v:Int | 0 <= v}");
        assert_eq!(p.sigs["f"].ty.to_string(), "arg:{v:Int | 0 <= v} -> {v:Int | 0 <= v}");
    }

    #[test]
    fn value_parameter_alias() {
        let p = prog(
            "{-@ data T a = L | N { key :: a, lft :: T a } @-}\n\
             {-@ type TL a X = T {v:a | v < X} @-}\n\
             {-@ f :: x:a -> TL a x -> Int @-}\n\
             f x t = 0\n",
        );
        let s = p.sigs["f"].ty.to_string();
        assert!(s.contains("T {v:a | v < x}"), "{s}");
    }

    #[test]
    fn inclist_field_mentions_head() {
        let p = prog("{-@ data IncList a = Emp | (:<) { hd::a, tl::IncList {v:a | hd <= v}} @-}\n");
        let d = p.data("IncList").unwrap();
        let c = d.ctor(":<").unwrap();
        assert_eq!(c.fields[1].1.to_string(), "IncList {v:a | hd <= v}");
    }

    #[test]
    fn measures_and_inline_functions() {
        let p = prog(
            "{-@ measure notEmpty @-}\n\
             notEmpty :: [a] -> Bool\n\
             notEmpty [] = False\n\
             notEmpty (_:_) = True\n\
             {-@ type NEList a = {v:[a] | notEmpty v} @-}\n",
        );
        let m = p.measure("notEmpty").unwrap();
        assert_eq!(m.result, Sort::Bool);
        assert_eq!(m.eqs.len(), 2);
        assert_eq!(m.eqs[1].body, Pred::tt());
    }

    #[test]
    fn missing_measure_equation() {
        let e = load("t.lm", "{-@ measure m @-}\nm :: [a] -> Int\nm [] = 0\n").unwrap_err();
        assert!(e.message.contains("missing equation for constructor `:`"), "{e}");
    }

    #[test]
    fn measure_recursion_on_pattern_variables_only() {
        let src = "data T = L | N T T\n{-@ measure h @-}\nh L = 0\nh (N a b) = h a + 1\n";
        assert!(load("t.lm", src).is_ok());
        let bad = "data T = L | N T T\n{-@ measure h @-}\nh L = 0\nh (N a b) = h (N a b)\n";
        assert!(load("t.lm", bad).is_err());
    }

    #[test]
    fn logic_function_with_where() {
        let p = prog(
            "data T = L | N Int T T\n\
             {-@ measure h @-}\n\
             h L = 0\n\
             h (N _ a b) = 1 + max (h a) (h b)\n\
             isBal l r n = 0 - n <= d && d <= n\n\
             \x20 where d = h l - h r\n\
             {-@ f :: l:T -> {r:T | isBal l r 1} -> Int @-}\n\
             f l r = 0\n",
        );
        let f = &p.inlines["isBal"];
        assert_eq!(f.param_sorts[0], Sort::Data("T".into(), vec![]));
        assert_eq!(f.result, Sort::Bool);
        assert!(!f.body.to_string().contains('d'));
    }

    #[test]
    fn qualifier_file_line() {
        let p = prog("{-@ measure len @-}\nlen :: [a] -> Int\nlen [] = 0\nlen (x:xs) = 1 + len xs\n");
        let q = parse_qualifier("v < len ⋆", &p).unwrap();
        assert_eq!(q.params.len(), 1);
        assert_eq!(q.vv_sort, Sort::Int);
        assert!(matches!(q.params[0].1, Sort::Data(..)));
    }

    #[test]
    fn undefined_signature_rejected() {
        let e = load("t.lm", "{-@ g :: Int -> Int @-}\n").unwrap_err();
        assert!(e.message.contains("no binding"));
    }
}

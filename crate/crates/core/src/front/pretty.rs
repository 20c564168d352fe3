//! Pretty-printer for surface syntax. Output uses explicit braces and one
//! line per item, so it re-parses without relying on layout.

use std::fmt::Write;

use super::ast::*;
use crate::lang::{is_tuple_name, LIST};

pub fn pretty_file(f: &SourceFile) -> String {
    let mut out = String::new();
    for item in &f.items {
        match item {
            Item::Ann(a) => {
                out.push_str("{-@ ");
                out.push_str(&pretty_annotation(a));
                out.push_str(" @-}\n");
            }
            Item::Data(d) => {
                out.push_str(&pretty_data(d));
                out.push('\n');
            }
            Item::Decl(d) => {
                out.push_str(&pretty_decl(d));
                out.push('\n');
            }
        }
    }
    out
}

pub fn pretty_annotation(a: &Annotation) -> String {
    match a {
        Annotation::Alias(al) => {
            let mut s = format!("type {}", al.name);
            for p in &al.params {
                s.push(' ');
                s.push_str(p);
            }
            let _ = write!(s, " = {}", pretty_type(&al.body));
            s
        }
        Annotation::Data(d) => pretty_data(d),
        Annotation::Measure { name, .. } => format!("measure {name}"),
        Annotation::Sig { name, sig, .. } => format!("{name} :: {}", pretty_sig(sig)),
        Annotation::Qualif(q) => {
            let ps: Vec<String> = q.params.iter().map(|(x, t)| format!("{x}:{}", pretty_type(t))).collect();
            format!("qualif {}({}) : {}", q.name, ps.join(", "), pretty_expr(&q.body))
        }
    }
}

fn ctor_name(c: &str) -> String {
    if c.starts_with(|ch: char| ch.is_alphabetic()) {
        c.to_string()
    } else {
        format!("({c})")
    }
}

pub fn pretty_data(d: &SData) -> String {
    let mut s = format!("data {}", d.name);
    for p in &d.params {
        s.push(' ');
        s.push_str(p);
    }
    for (i, c) in d.ctors.iter().enumerate() {
        s.push_str(if i == 0 { " = " } else { " | " });
        s.push_str(&ctor_name(&c.name));
        if c.fields.iter().any(|(n, _)| n.is_some()) {
            let fs: Vec<String> = c
                .fields
                .iter()
                .map(|(n, t)| format!("{} :: {}", n.as_deref().unwrap_or("_"), pretty_type(t)))
                .collect();
            let _ = write!(s, " {{ {} }}", fs.join(", "));
        } else {
            for (_, t) in &c.fields {
                s.push(' ');
                s.push_str(&pretty_atype(t));
            }
        }
    }
    s
}

pub fn pretty_sig(sig: &SSig) -> String {
    let mut s = String::new();
    if !sig.ord.is_empty() {
        let cs: Vec<String> = sig.ord.iter().map(|a| format!("Ord {a}")).collect();
        let _ = write!(s, "({}) => ", cs.join(", "));
    }
    s.push_str(&pretty_type(&sig.ty));
    s
}

pub fn pretty_type(t: &SType) -> String {
    match &t.kind {
        STypeKind::Fun(b, d, c) => {
            let dom = match &d.kind {
                STypeKind::Fun(..) => format!("({})", pretty_type(d)),
                _ => pretty_btype(d),
            };
            match b {
                Some(x) => format!("{x}:{dom} -> {}", pretty_type(c)),
                None => format!("{dom} -> {}", pretty_type(c)),
            }
        }
        _ => pretty_btype(t),
    }
}

fn pretty_btype(t: &SType) -> String {
    match &t.kind {
        STypeKind::Con(c, args) if !args.is_empty() && c != LIST && !is_tuple_name(c) => {
            let mut s = c.clone();
            for a in args {
                s.push(' ');
                s.push_str(&pretty_atype(a));
            }
            s
        }
        STypeKind::VarApp(x, args) => {
            let mut s = x.clone();
            for a in args {
                s.push(' ');
                s.push_str(&pretty_atype(a));
            }
            s
        }
        STypeKind::Fun(..) => format!("({})", pretty_type(t)),
        _ => pretty_atype(t),
    }
}

fn pretty_atype(t: &SType) -> String {
    match &t.kind {
        STypeKind::Var(x) => x.clone(),
        STypeKind::Con(c, args) if c == LIST && args.len() == 1 => format!("[{}]", pretty_type(&args[0])),
        STypeKind::Con(c, args) if is_tuple_name(c) => {
            let ts: Vec<String> = args.iter().map(pretty_type).collect();
            format!("({})", ts.join(", "))
        }
        STypeKind::Con(c, args) if args.is_empty() => c.clone(),
        STypeKind::Refine(v, b, p) => format!("{{{v}:{} | {}}}", pretty_type(b), pretty_expr(p)),
        STypeKind::PredArg(p) => match p.kind {
            SExprKind::Int(n) if n >= 0 => n.to_string(),
            _ => format!("{{ {} }}", pretty_expr(p)),
        },
        _ => format!("({})", pretty_type(t)),
    }
}

pub fn pretty_decl(d: &SDecl) -> String {
    match d {
        SDecl::Sig { names, sig, .. } => format!("{} :: {}", names.join(", "), pretty_sig(sig)),
        SDecl::Fun { name, args, rhs, .. } => {
            let mut s = name.clone();
            for a in args {
                s.push(' ');
                s.push_str(&pretty_apat(a));
            }
            s.push_str(&pretty_rhs(rhs, "="));
            s
        }
        SDecl::Pat { pat, rhs, .. } => format!("{}{}", pretty_pat(pat), pretty_rhs(rhs, "=")),
    }
}

fn pretty_rhs(rhs: &Rhs, sep: &str) -> String {
    let mut s = String::new();
    match &rhs.body {
        RhsBody::Plain(e) => {
            let _ = write!(s, " {sep} {}", pretty_expr(e));
        }
        RhsBody::Guarded(gs) => {
            for (g, e) in gs {
                let _ = write!(s, " | {} {sep} {}", pretty_expr(g), pretty_expr(e));
            }
        }
    }
    if !rhs.wheres.is_empty() {
        let ds: Vec<String> = rhs.wheres.iter().map(pretty_decl).collect();
        let _ = write!(s, " where {{ {} }}", ds.join("; "));
    }
    s
}

pub fn pretty_pat(p: &SPat) -> String {
    match &p.kind {
        SPatKind::Con(c, args) if args.len() == 2 && c.starts_with(':') => {
            format!("{} {c} {}", pretty_lpat(&args[0]), pretty_pat(&args[1]))
        }
        _ => pretty_lpat(p),
    }
}

fn pretty_lpat(p: &SPat) -> String {
    match &p.kind {
        SPatKind::Con(c, args) if !args.is_empty() && !c.starts_with(':') => {
            let mut s = c.clone();
            for a in args {
                s.push(' ');
                s.push_str(&pretty_apat(a));
            }
            s
        }
        SPatKind::Int(n) if *n < 0 => format!("-{}", -n),
        _ => pretty_apat(p),
    }
}

fn pretty_apat(p: &SPat) -> String {
    match &p.kind {
        SPatKind::Var(x) => x.clone(),
        SPatKind::Wild => "_".into(),
        SPatKind::Con(c, args) if args.is_empty() => c.clone(),
        SPatKind::Int(n) if *n >= 0 => n.to_string(),
        SPatKind::Tuple(ps) => format!("({})", ps.iter().map(pretty_pat).collect::<Vec<_>>().join(", ")),
        SPatKind::List(ps) => format!("[{}]", ps.iter().map(pretty_pat).collect::<Vec<_>>().join(", ")),
        SPatKind::As(x, q) => format!("{x}@{}", pretty_apat(q)),
        _ => format!("({})", pretty_pat(p)),
    }
}

fn is_atomic(e: &SExpr) -> bool {
    matches!(
        e.kind,
        SExprKind::Var(_)
            | SExprKind::Con(_)
            | SExprKind::Str(_)
            | SExprKind::Wild(_)
            | SExprKind::Tuple(_)
            | SExprKind::List(_)
            | SExprKind::Comp(..)
    ) || matches!(e.kind, SExprKind::Int(n) if n >= 0)
}

fn atom(e: &SExpr) -> String {
    if is_atomic(e) {
        pretty_expr(e)
    } else {
        format!("({})", pretty_expr(e))
    }
}

fn name_atom(x: &str) -> String {
    if x.starts_with(|c: char| c.is_alphabetic() || c == '_' || c == '[' || c == '(') {
        x.to_string()
    } else {
        format!("({x})")
    }
}

pub fn pretty_expr(e: &SExpr) -> String {
    match &e.kind {
        SExprKind::Var(x) | SExprKind::Con(x) => name_atom(x),
        SExprKind::Int(n) => n.to_string(),
        SExprKind::Str(s) => format!("{s:?}"),
        SExprKind::Wild(None) => "⋆".into(),
        SExprKind::Wild(Some(t)) => format!("⋆:{}", pretty_atype(t)),
        SExprKind::App(f, a) => {
            let head = match f.kind {
                SExprKind::App(..) => pretty_expr(f),
                _ => atom(f),
            };
            format!("{head} {}", atom(a))
        }
        SExprKind::BinOp(op, a, b) => {
            let op = if op.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '\'') {
                format!("`{op}`")
            } else {
                op.clone()
            };
            format!("{} {op} {}", atom(a), atom(b))
        }
        SExprKind::Neg(a) => format!("-{}", atom(a)),
        SExprKind::Lam(ps, b) => {
            let ps: Vec<String> = ps.iter().map(pretty_apat).collect();
            format!("\\{} -> {}", ps.join(" "), pretty_expr(b))
        }
        SExprKind::If(c, a, b) => format!("if {} then {} else {}", pretty_expr(c), pretty_expr(a), pretty_expr(b)),
        SExprKind::Case(s, alts) => {
            let alts: Vec<String> =
                alts.iter().map(|a| format!("{}{}", pretty_pat(&a.pat), pretty_rhs(&a.rhs, "->"))).collect();
            format!("case {} of {{ {} }}", pretty_expr(s), alts.join("; "))
        }
        SExprKind::Let(ds, b) => {
            let ds: Vec<String> = ds.iter().map(pretty_decl).collect();
            format!("let {{ {} }} in {}", ds.join("; "), pretty_expr(b))
        }
        SExprKind::Tuple(es) => format!("({})", es.iter().map(pretty_expr).collect::<Vec<_>>().join(", ")),
        SExprKind::List(es) => format!("[{}]", es.iter().map(pretty_expr).collect::<Vec<_>>().join(", ")),
        SExprKind::Comp(e, qs) => {
            let qs: Vec<String> = qs
                .iter()
                .map(|q| match q {
                    SQual::Gen(p, e) => format!("{} <- {}", pretty_pat(p), pretty_expr(e)),
                    SQual::Guard(g) => pretty_expr(g),
                })
                .collect();
            format!("[{} | {}]", pretty_expr(e), qs.join(", "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::front::parser::parse_program;

    fn round_trip(src: &str) {
        let once = pretty_file(&parse_program("a.lm", src).unwrap());
        let twice = pretty_file(&parse_program("b.lm", &once).unwrap_or_else(|e| panic!("{once}\n{}: {}", e.span, e.message)));
        assert_eq!(once, twice);
    }

    #[test]
    fn round_trip_small_programs() {
        round_trip("{-@ max :: x:Int -> y:Int -> {v:Int | v >= x && v >= y} @-}\nmax x y = if x >= y then x else y\n");
        round_trip("{-@ data IncList a = Emp | (:<) { hd::a, tl::IncList {v:a | hd <= v}} @-}\n");
        round_trip("f (x:xs) | x < 0 = -x\n         | otherwise = g [y | y <- xs, y > x]\n  where g = h\n");
        round_trip("{-@ type AVLE a H1 H2 = {v:AVL a | (H1 = H2 + 2 => height v <= H1 + 1)} @-}\n");
        round_trip("g t@(Node x _ _ _) = case t of\n  Leaf -> (1, [])\n  Node _ l r h -> let z = 2 in (z, [l, r])\n");
    }

    #[test]
    fn operators_parenthesized() {
        let f = parse_program("a.lm", "f x = x :< (g x + 1)\n").unwrap();
        assert_eq!(pretty_file(&f), "f x = x :< ((g x) + 1)\n");
    }
}

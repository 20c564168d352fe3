//! Measures: validation, uninterpreted symbol declarations and the
//! constructor refinements that carry their defining equations.

use std::collections::BTreeMap;

use crate::lang::{CtorDecl, DataDecl, Ident, MeasureDecl, Pred, Program, RType, Sort, Subst};

/// Check the syntactic restrictions on a measure over `d`: one equation
/// per constructor with the right number of binders, and recursive calls
/// only on pattern variables. Equations are returned in constructor order.
pub fn check_measure(m: &MeasureDecl, d: &DataDecl) -> Result<MeasureDecl, String> {
    if m.data != d.name {
        return Err(format!("measure `{}` is over `{}`, not `{}`", m.name, m.data, d.name));
    }
    if !matches!(m.result, Sort::Int | Sort::Bool) {
        return Err(format!("measure `{}` must return Int or Bool", m.name));
    }
    let mut eqs = Vec::new();
    for c in &d.ctors {
        let mut found = m.eqs.iter().filter(|e| e.ctor == c.name);
        let Some(eq) = found.next() else {
            return Err(format!("missing equation for constructor `{}` in measure `{}`", c.name, m.name));
        };
        if found.next().is_some() {
            return Err(format!("duplicate equation for constructor `{}` in measure `{}`", c.name, m.name));
        }
        if eq.binders.len() != c.fields.len() {
            return Err(format!(
                "constructor `{}` has {} field(s) but the equation binds {}",
                c.name,
                c.fields.len(),
                eq.binders.len()
            ));
        }
        if let Some(bad) = bad_recursion(&eq.body, &m.name, &eq.binders) {
            return Err(format!("measure `{}` is applied to `{bad}`, which is not a pattern variable", m.name));
        }
        eqs.push(eq.clone());
    }
    if let Some(e) = m.eqs.iter().find(|e| d.ctor(&e.ctor).is_none()) {
        return Err(format!("`{}` is not a constructor of `{}`", e.ctor, d.name));
    }
    Ok(MeasureDecl { eqs, ..m.clone() })
}

fn bad_recursion(p: &Pred, m: &str, binders: &[Ident]) -> Option<Pred> {
    if let Pred::App(f, args) = p {
        if f.as_str() == m && !matches!(&args[..], [Pred::Var(x)] if binders.contains(x)) {
            return Some(args.first().cloned().unwrap_or(Pred::tt()));
        }
    }
    p.children().into_iter().find_map(|c| bad_recursion(c, m, binders))
}

/// The fact `m v = rhs` for constructor `c`, with equation binders renamed
/// to the constructor's field names.
pub fn equation_fact(m: &MeasureDecl, c: &CtorDecl) -> Option<Pred> {
    let eq = m.eqs.iter().find(|e| e.ctor == c.name)?;
    let s: Subst = eq.binders.iter().cloned().zip(c.fields.iter().map(|(f, _)| Pred::var(f))).collect();
    Some(Pred::eq(Pred::App(m.symbol(), vec![Pred::vv()]), eq.body.subst(&s)))
}

/// Conjunction of every measure's equation for constructor `c`.
pub fn ctor_refinement(prog: &Program, d: &DataDecl, c: &CtorDecl) -> Pred {
    Pred::and(prog.measures.iter().filter(|m| m.data == d.name).filter_map(|m| equation_fact(m, c)))
}

/// The constructor's type with its result refined by all measures.
pub fn refined_ctor_type(prog: &Program, d: &DataDecl, c: &CtorDecl) -> RType {
    let fact = ctor_refinement(prog, d, c);
    let t = c.fields.iter().rev().fold(d.self_type().strengthen(fact), |acc, (x, t)| {
        RType::fun(x.clone(), t.clone(), acc)
    });
    d.params.iter().rev().fold(t, |body, a| RType::Forall { tyvar: a.clone(), body: Box::new(body) })
}

/// Constructor types refined by a single measure.
pub fn constructor_axioms(m: &MeasureDecl, d: &DataDecl) -> Vec<(String, RType)> {
    d.ctors
        .iter()
        .map(|c| {
            let fact = equation_fact(m, c).unwrap_or_else(Pred::tt);
            let t = c
                .fields
                .iter()
                .rev()
                .fold(d.self_type().strengthen(fact), |acc, (x, t)| RType::fun(x.clone(), t.clone(), acc));
            (c.name.clone(), t)
        })
        .collect()
}

/// SMT-LIB2 declaration of the measure's symbol.
pub fn declare_uninterpreted(m: &MeasureDecl) -> String {
    format!("(declare-fun {} ({}) {})", m.symbol().smt_name(), m.arg_sort().smt(), m.result.smt())
}

/// Declarations of every measure followed by its constructor axioms,
/// each axiom as a commented refined constructor type.
pub fn dump(prog: &Program) -> String {
    let mut sorts = BTreeMap::new();
    for m in &prog.measures {
        sorts.insert(m.arg_sort().smt(), ());
    }
    let mut out = String::new();
    for s in sorts.keys() {
        out.push_str(&format!("(declare-sort {s} 0)\n"));
    }
    for m in &prog.measures {
        out.push_str(&declare_uninterpreted(m));
        out.push('\n');
        if !m.result_pred.is_true() {
            let t = Pred::var(&m.arg);
            out.push_str(&format!("; use-site fact: {}\n", m.side_condition(&t)));
        }
        if let Some(d) = prog.data(&m.data) {
            for (c, t) in constructor_axioms(m, d) {
                out.push_str(&format!("; {c} :: {t}\n"));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::front::load;

    const HEAD: &str = "{-@ measure notEmpty @-}\nnotEmpty :: [a] -> Bool\nnotEmpty [] = False\nnotEmpty (_:_) = True\n";

    #[test]
    fn not_empty_axioms() {
        let p = load("t.lm", HEAD).unwrap();
        let m = p.measure("notEmpty").unwrap();
        let d = p.data("List").unwrap();
        let m = check_measure(m, d).unwrap();
        let ax = constructor_axioms(&m, d);
        assert_eq!(ax[0].1.to_string(), "{v:[a] | notEmpty v = false}");
        assert_eq!(ax[1].1.to_string(), "hd:a -> tl:[a] -> {v:[a] | notEmpty v = true}");
        assert_eq!(declare_uninterpreted(&m), "(declare-fun notEmpty!0 (List) Bool)");
    }

    #[test]
    fn height_axioms_expand_max() {
        let src = "{-@ type Nat = {v:Int | 0 <= v} @-}\n\
                   data T a = Leaf | Node a (T a) (T a)\n\
                   {-@ measure height @-}\n{-@ height :: T a -> Nat @-}\n\
                   height Leaf = 0\nheight (Node _ l r) = 1 + max (height l) (height r)\n";
        let p = load("t.lm", src).unwrap();
        let m = p.measure("height").unwrap();
        let d = p.data("T").unwrap();
        let ax = constructor_axioms(m, d);
        assert_eq!(ax[0].1.to_string(), "{v:T a | height v = 0}");
        let node = ax[1].1.to_string();
        assert!(
            node.ends_with("{v:T a | height v = 1 + (if height field1 >= height field2 then height field1 else height field2)}"),
            "{node}"
        );
        assert_eq!(m.side_condition(&Pred::var(&Ident::new("t", 9))).to_string(), "0 <= height t");
    }

    #[test]
    fn constant_measure() {
        let src = "data T = A | B Int\n{-@ measure zero @-}\nzero :: T -> Int\nzero A = 0\nzero (B _) = 0\n";
        let p = load("t.lm", src).unwrap();
        let ax = constructor_axioms(p.measure("zero").unwrap(), p.data("T").unwrap());
        assert!(ax.iter().all(|(_, t)| t.to_string().ends_with("zero v = 0}")));
    }

    #[test]
    fn missing_equation_detected_on_core() {
        let p = load("t.lm", HEAD).unwrap();
        let mut m = p.measure("notEmpty").unwrap().clone();
        m.eqs.remove(0);
        let e = check_measure(&m, p.data("List").unwrap()).unwrap_err();
        assert!(e.contains("missing equation for constructor `[]`"), "{e}");
    }

    #[test]
    fn two_measures_conjoin() {
        let src = format!("{HEAD}{{-@ measure len @-}}\nlen :: [a] -> Int\nlen [] = 0\nlen (_:xs) = 1 + len xs\n");
        let p = load("t.lm", &src).unwrap();
        let d = p.data("List").unwrap();
        let t = refined_ctor_type(&p, d, &d.ctors[1]).to_string();
        assert!(t.ends_with("{v:[a] | len v = 1 + len tl && notEmpty v = true}"), "{t}");
        let dump = dump(&p);
        assert!(dump.contains("(declare-fun len!0 (List) Int)"));
        assert!(dump.contains("(declare-fun notEmpty!0 (List) Bool)"));
    }
}

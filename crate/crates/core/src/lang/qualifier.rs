use std::collections::BTreeMap;
use std::fmt;

use super::ident::Ident;
use super::pred::Pred;
use super::sort::Sort;

pub const WILDCARD: &str = "⋆";

/// A qualifier template: a predicate over `v` and wildcard slots, each
/// with a sort. Sorts may contain metas, which makes the template
/// polymorphic.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Qualifier {
    pub vv_sort: Sort,
    pub params: Vec<(Ident, Sort)>,
    pub body: Pred,
}

impl Qualifier {
    pub fn wildcard(i: u32) -> Ident {
        Ident::new(WILDCARD, i + 1)
    }

    /// Canonical form: wildcards numbered by first occurrence and metas
    /// renumbered from zero, so structurally equal templates compare equal.
    pub fn normalize(&self) -> Qualifier {
        let mut order: Vec<Ident> = Vec::new();
        collect_in_order(&self.body, &mut order);
        let mut subst = BTreeMap::new();
        let mut params = Vec::new();
        let mut metas = BTreeMap::new();
        let vv_sort = renumber(&self.vv_sort, &mut metas);
        for (i, w) in order.iter().enumerate() {
            if let Some((_, s)) = self.params.iter().find(|(p, _)| p == w) {
                let nw = Qualifier::wildcard(i as u32);
                subst.insert(w.clone(), Pred::var(&nw));
                params.push((nw, renumber(s, &mut metas)));
            }
        }
        Qualifier { vv_sort, params, body: self.body.subst(&subst) }
    }

    pub fn mentions_vv(&self) -> bool {
        self.body.mentions(&Ident::vv())
    }
}

fn collect_in_order(p: &Pred, out: &mut Vec<Ident>) {
    if let Pred::Var(x) = p {
        if x.as_str() == WILDCARD && !out.contains(x) {
            out.push(x.clone());
        }
    }
    for c in p.children() {
        collect_in_order(c, out);
    }
}

fn renumber(s: &Sort, metas: &mut BTreeMap<u32, u32>) -> Sort {
    match s {
        Sort::Meta(n) => {
            let k = metas.len() as u32;
            Sort::Meta(*metas.entry(*n).or_insert(k))
        }
        Sort::Data(d, args) => Sort::Data(d.clone(), args.iter().map(|a| renumber(a, metas)).collect()),
        s => s.clone(),
    }
}

impl fmt::Display for Qualifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}  [v:{}", self.body, self.vv_sort)?;
        for (w, s) in &self.params {
            write!(f, ", {w}:{s}")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::pred::RelOp;

    #[test]
    fn normalization_identifies_alpha_variants() {
        let a = Qualifier {
            vv_sort: Sort::Meta(7),
            params: vec![(Qualifier::wildcard(5), Sort::Meta(7))],
            body: Pred::rel(RelOp::Le, Pred::var(&Qualifier::wildcard(5)), Pred::vv()),
        };
        let b = Qualifier {
            vv_sort: Sort::Meta(2),
            params: vec![(Qualifier::wildcard(9), Sort::Meta(2))],
            body: Pred::rel(RelOp::Le, Pred::var(&Qualifier::wildcard(9)), Pred::vv()),
        };
        assert_eq!(a.normalize(), b.normalize());
        assert_eq!(a.normalize().to_string(), "⋆ <= v  [v:'s0, ⋆:'s0]");
    }
}

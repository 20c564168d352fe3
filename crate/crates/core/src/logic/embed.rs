//! Environments and constraints as validity queries.

use std::collections::{BTreeMap, BTreeSet};

use super::{OracleError, Query};
use crate::cgen::{Constraint, Env, EnvEntry};
use crate::lang::{Ident, MeasureDecl, Pred, Sort, SortCtx};

/// The hypotheses contributed by an environment, in binding order. Each
/// base binding `x:{v:t | e}` gives `e[x/v]`; guards are kept verbatim;
/// function bindings contribute nothing. `apply` replaces kvars.
pub fn embed_env(env: &Env, apply: &mut impl FnMut(&Pred) -> Pred) -> Vec<Pred> {
    let mut out = Vec::new();
    for e in &env.entries {
        let p = match e {
            EnvEntry::Bind(x, t) => match t.pred() {
                Some(p) if t.is_base() => apply(&p.subst1(&Ident::vv(), &Pred::var(x))),
                _ => continue,
            },
            EnvEntry::Guard(p) => apply(p),
        };
        out.extend(p.into_conjuncts().into_iter().filter(|c| !c.is_true()));
    }
    out
}

/// Sorts of the variables a constraint may mention.
pub fn env_sorts(env: &Env, vv: &Sort) -> BTreeMap<Ident, Sort> {
    let mut m: BTreeMap<Ident, Sort> = env.scope().into_iter().collect();
    m.insert(Ident::vv(), vv.clone());
    m
}

/// Result-type facts for every measure application in `preds`, closed
/// under the applications the facts themselves introduce. `exclude` names
/// a measure whose fact is withheld for one argument.
pub fn side_conditions(preds: &[Pred], measures: &[MeasureDecl], exclude: Option<&(String, Ident)>) -> Vec<Pred> {
    let mut seen = BTreeSet::new();
    let mut todo = BTreeSet::new();
    for p in preds {
        p.measure_apps(&mut todo);
    }
    let mut out = Vec::new();
    for _ in 0..4 {
        let mut next = BTreeSet::new();
        for app in std::mem::take(&mut todo) {
            if !seen.insert(app.clone()) {
                continue;
            }
            let Pred::App(f, args) = &app else { continue };
            let Some(m) = measures.iter().find(|m| m.name == f.as_str()) else { continue };
            if let (Some((name, x)), [Pred::Var(y)]) = (exclude, &args[..]) {
                if *name == m.name && x == y {
                    continue;
                }
            }
            let fact = m.side_condition(&args[0]);
            if fact.is_true() {
                continue;
            }
            fact.measure_apps(&mut next);
            out.push(fact);
        }
        if next.is_empty() {
            break;
        }
        todo = next;
    }
    out
}

/// Global facts needed to build queries.
#[derive(Debug, Clone, Default)]
pub struct LogicCtx {
    pub sorts: SortCtx,
    pub measures: Vec<MeasureDecl>,
}

fn in_scope(p: &Pred, vars: &BTreeMap<Ident, Sort>) -> bool {
    p.free_vars().iter().all(|x| vars.contains_key(x)) && p.is_linear() && !p.has_kvars()
}

/// The query `[[env]] /\ lhs => goal` for a constraint. Hypotheses outside
/// the fragment are dropped, which only weakens them. `None` when the goal
/// itself lies outside.
pub fn constraint_query(
    ctx: &LogicCtx,
    c: &Constraint,
    apply: &mut impl FnMut(&Pred) -> Pred,
    goal: Pred,
) -> Result<Option<Query>, OracleError> {
    let vars = env_sorts(&c.env, &c.sort);
    if !in_scope(&goal, &vars) {
        return Ok(None);
    }
    let mut hyps = embed_env(&c.env, apply);
    hyps.extend(apply(&c.lhs).into_conjuncts().into_iter().filter(|p| !p.is_true()));
    hyps.retain(|p| in_scope(p, &vars));
    let mut all = hyps.clone();
    all.push(goal.clone());
    let side = side_conditions(&all, &ctx.measures, c.exclude.as_ref());
    hyps.extend(side.into_iter().filter(|p| in_scope(p, &vars)));
    Query::new(hyps, goal, &vars, &ctx.sorts).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{BaseType, RType, RelOp};

    #[test]
    fn max_environment() {
        let x = Ident::new("x", 1);
        let y = Ident::new("y", 2);
        let mut env = Env::default();
        env.bind(&x, RType::int());
        env.bind(&y, RType::int());
        let g = Pred::rel(RelOp::Ge, Pred::var(&x), Pred::var(&y));
        env.guard(g.clone());
        assert_eq!(embed_env(&env, &mut |p| p.clone()), vec![g]);
    }

    #[test]
    fn binding_refinement_is_instantiated() {
        let x = Ident::new("x", 1);
        let mut env = Env::default();
        env.bind(&x, RType::refined(BaseType::Int, Pred::rel(RelOp::Gt, Pred::vv(), Pred::Int(0))));
        let f = Ident::new("f", 2);
        env.bind(&f, RType::fun(Ident::new("a", 3), RType::int(), RType::int()));
        let h = embed_env(&env, &mut |p| p.clone());
        assert_eq!(h.len(), 1);
        assert_eq!(h[0].to_string(), "x > 0");
        assert!(embed_env(&Env::default(), &mut |p| p.clone()).is_empty());
    }
}

//! Liquid inference proper: qualifier harvesting and instantiation, and
//! the strongest solution by iterative weakening.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::cgen::{Constraint, ConstraintSet, KVarInfo};
use crate::front::lower::check_qualifier;
use crate::lang::{Ident, KVarApp, KVarId, Pred, Program, Qualifier, RType, Sort, SortChecker, SortCtx, Span, Subst};
use crate::logic::embed::{constraint_query, LogicCtx};
use crate::logic::{Oracle, OracleError, Query, Validity};

type Atom = (Pred, Sort, Vec<(Ident, Sort)>);

/// Atomic conjuncts of a refinement type, each with the sort of `v` and
/// the sorts of the binders in scope.
fn atoms(t: &RType, vars: &mut Vec<(Ident, Sort)>, out: &mut Vec<Atom>) {
    match t {
        RType::Forall { body, .. } => atoms(body, vars, out),
        RType::Base { base, pred } => {
            if let crate::lang::BaseType::TyCon(_, args) = base {
                for a in args {
                    atoms(a, vars, out);
                }
            }
            for c in pred.conjuncts() {
                out.push((c.clone(), base.sort(), vars.clone()));
            }
        }
        RType::Fun { binder, dom, cod } => {
            atoms(dom, vars, out);
            let n = vars.len();
            if let Some(s) = dom.sort() {
                vars.push((binder.clone(), s));
            }
            atoms(cod, vars, out);
            vars.truncate(n);
        }
    }
}

/// Abstract an atomic predicate into a qualifier: every free variable
/// other than `v` becomes a wildcard and type variables become metas.
fn abstract_atom(p: &Pred, vv: &Sort, vars: &[(Ident, Sort)], ctx: &SortCtx) -> Option<Qualifier> {
    if matches!(p, Pred::Bool(_)) || p.has_kvars() {
        return None;
    }
    let mut gen = BTreeMap::new();
    let vv_sort = vv.generalize(&mut gen);
    let mut params = Vec::new();
    let mut s = Subst::new();
    let mut next_meta = 200;
    for x in p.free_vars() {
        if x.is_vv() {
            continue;
        }
        let sort = match vars.iter().rev().find(|(y, _)| *y == x) {
            Some((_, s)) => s.generalize(&mut gen),
            None => {
                next_meta += 1;
                Sort::Meta(next_meta)
            }
        };
        let w = Qualifier::wildcard(params.len() as u32 + 100);
        s.insert(x, Pred::var(&w));
        params.push((w, sort));
    }
    let q = Qualifier { vv_sort, params, body: p.subst(&s) };
    check_qualifier(&q, ctx).ok().map(|q| q.normalize())
}

/// Default qualifiers: the atoms of every signature, alias, constructor
/// field and measure result type, plus explicitly declared qualifiers.
pub fn harvest_default_qualifiers(prog: &Program) -> Vec<Qualifier> {
    let ctx = prog.sort_ctx();
    let mut found = Vec::new();
    for sig in prog.sigs.values() {
        atoms(&sig.ty, &mut Vec::new(), &mut found);
    }
    for a in &prog.aliases {
        atoms(&a.body, &mut Vec::new(), &mut found);
    }
    for d in &prog.datas {
        for c in &d.ctors {
            let mut vars = Vec::new();
            for (f, t) in &c.fields {
                atoms(t, &mut vars, &mut found);
                if let Some(s) = t.sort() {
                    vars.push((f.clone(), s));
                }
            }
        }
    }
    for m in &prog.measures {
        for c in m.result_pred.conjuncts() {
            found.push((c.clone(), m.result.clone(), vec![(m.arg.clone(), m.arg_sort())]));
        }
    }
    let mut pool = Vec::new();
    let mut seen = BTreeSet::new();
    let explicit = prog.qualifiers.iter().cloned();
    let harvested = found.iter().filter_map(|(p, vv, vars)| abstract_atom(p, vv, vars, &ctx));
    for q in explicit.chain(harvested) {
        if seen.insert(q.clone()) {
            pool.push(q);
        }
    }
    pool
}

/// Closed instances of the pool for a kvar: wildcards replaced by scope
/// variables in every sort-compatible way, then ill-sorted instances
/// removed.
pub fn instantiate(pool: &[Qualifier], sort: &Sort, scope: &[(Ident, Sort)], ctx: &SortCtx) -> Vec<Pred> {
    let mut vars: BTreeMap<Ident, Sort> = scope.iter().cloned().collect();
    vars.insert(Ident::vv(), sort.clone());
    let mut scope_vars: Vec<(Ident, Sort)> = Vec::new();
    for (x, s) in scope {
        if !scope_vars.iter().any(|(y, _)| y == x) {
            scope_vars.push((x.clone(), s.clone()));
        }
    }
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for q in pool {
        let mut su = crate::lang::SortSubst::new();
        if !su.unify(&q.vv_sort, sort) {
            continue;
        }
        let mut choice = Vec::new();
        choose(q, 0, &su, &scope_vars, &mut choice, &mut |assign| {
            let s: Subst = q.params.iter().map(|(w, _)| w.clone()).zip(assign.iter().map(Pred::var)).collect();
            let p = q.body.subst(&s);
            let mut chk = SortChecker::new(ctx, &vars);
            let ok = chk.sort_of(&p).map(|s| chk.subst.unify(&s, &Sort::Bool)).unwrap_or(false);
            if ok && seen.insert(p.clone()) {
                out.push(p);
            }
        });
    }
    out
}

fn choose(
    q: &Qualifier,
    i: usize,
    su: &crate::lang::SortSubst,
    scope: &[(Ident, Sort)],
    choice: &mut Vec<Ident>,
    emit: &mut impl FnMut(&[Ident]),
) {
    if i == q.params.len() {
        emit(choice);
        return;
    }
    for (x, s) in scope {
        let mut su2 = su.clone();
        if su2.unify(&q.params[i].1, s) {
            choice.push(x.clone());
            choose(q, i + 1, &su2, scope, choice, emit);
            choice.pop();
        }
    }
}

/// Kvar assignment: each kvar stands for the conjunction of its
/// qualifiers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Solution {
    pub map: BTreeMap<KVarId, Vec<Pred>>,
}

impl Solution {
    pub fn get(&self, k: KVarId) -> &[Pred] {
        self.map.get(&k).map(|v| &v[..]).unwrap_or(&[])
    }

    fn pending(k: &KVarApp) -> Subst {
        k.subst.iter().cloned().collect()
    }

    /// One qualifier of a kvar under the occurrence's pending substitution.
    pub fn instance(q: &Pred, k: &KVarApp) -> Pred {
        q.subst(&Self::pending(k))
    }

    /// Replace every kvar by its conjunction, pending substitutions applied.
    pub fn apply(&self, p: &Pred) -> Pred {
        p.map_kvars(&mut |k| {
            let s = Self::pending(k);
            Pred::and(self.get(k.id).iter().map(|q| q.subst(&s)).collect::<Vec<_>>())
        })
    }

    pub fn apply_type(&self, t: &RType) -> RType {
        t.map_preds(&mut |p| self.apply(p))
    }

    pub fn dump(&self, kvars: &[KVarInfo]) -> String {
        let mut out = String::new();
        for k in kvars {
            let p = Pred::and(self.get(k.id).to_vec());
            let _ = writeln!(out, "{} {}: {{v:{} | {}}}", KVarId(k.id.0), k.span, k.sort, p);
        }
        out
    }
}

/// A constraint that does not hold under the final solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub constraint: usize,
    /// The implication checked, `None` when the goal left the fragment.
    pub query: Option<Query>,
    pub validity: Validity,
}

#[derive(Debug, Clone, Default)]
pub struct Stats {
    pub queries: usize,
    pub fast: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub solution: Solution,
    pub failures: Vec<Failure>,
    pub stats: Stats,
}

impl Outcome {
    pub fn is_safe(&self) -> bool {
        self.failures.is_empty()
    }
}

pub struct Solver<'a, O: ?Sized> {
    pub ctx: &'a LogicCtx,
    pub oracle: &'a mut O,
    pub stats: Stats,
}

impl<'a, O: Oracle + ?Sized> Solver<'a, O> {
    pub fn new(ctx: &'a LogicCtx, oracle: &'a mut O) -> Self {
        Solver { ctx, oracle, stats: Stats::default() }
    }

    /// Validity of `goal` under the constraint's hypotheses.
    pub fn check(&mut self, c: &Constraint, sol: &Solution, goal: Pred) -> Result<(Option<Query>, Validity), OracleError> {
        let q = constraint_query(self.ctx, c, &mut |p| sol.apply(p), goal)?;
        let Some(q) = q else {
            return Ok((None, Validity::Unknown("goal outside the logic fragment".into())));
        };
        self.stats.queries += 1;
        if let Some(v) = q.fast_path() {
            self.stats.fast += 1;
            return Ok((Some(q), v));
        }
        let v = self.oracle.check(&q)?;
        Ok((Some(q), v))
    }

    fn valid(&mut self, c: &Constraint, sol: &Solution, goal: Pred) -> Result<bool, OracleError> {
        Ok(self.check(c, sol, goal)?.1.is_valid())
    }

    /// Weaken from the full instantiation to the strongest solution, then
    /// check the concrete constraints and re-verify everything.
    pub fn solve(&mut self, cs: &[Constraint], init: Solution) -> Result<Outcome, OracleError> {
        let mut sol = init;
        let mut deps: BTreeMap<KVarId, Vec<usize>> = BTreeMap::new();
        let key = |c: &Constraint| -> (Span, KVarId, usize) { (c.span, c.rhs_kvar().map_or(KVarId(u32::MAX), |k| k.id), c.id) };
        let mut work = BTreeSet::new();
        for (i, c) in cs.iter().enumerate() {
            if c.rhs_kvar().is_none() {
                continue;
            }
            let mut ks = c.lhs.kvars();
            for e in &c.env.entries {
                match e {
                    crate::cgen::EnvEntry::Bind(_, t) if t.is_base() => ks.extend(t.kvars()),
                    crate::cgen::EnvEntry::Guard(p) => ks.extend(p.kvars()),
                    _ => {}
                }
            }
            for k in ks {
                deps.entry(k).or_default().push(i);
            }
            work.insert((key(c), i));
        }
        while let Some((_, i)) = work.pop_first() {
            let c = &cs[i];
            let k = c.rhs_kvar().expect("kvar rhs").clone();
            let quals = sol.get(k.id).to_vec();
            if quals.is_empty() {
                continue;
            }
            let whole = Pred::and(quals.iter().map(|q| Solution::instance(q, &k)).collect::<Vec<_>>());
            if self.valid(c, &sol, whole)? {
                continue;
            }
            self.stats.iterations += 1;
            let mut keep = Vec::new();
            for q in &quals {
                if self.valid(c, &sol, Solution::instance(q, &k))? {
                    keep.push(q.clone());
                }
            }
            if keep.len() != quals.len() {
                sol.map.insert(k.id, keep);
                for &d in deps.get(&k.id).into_iter().flatten() {
                    work.insert((key(&cs[d]), d));
                }
                // The constraint itself must be rechecked only if its own
                // hypotheses mention the kvar, which `deps` covers.
            }
        }
        let mut order: Vec<&Constraint> = cs.iter().collect();
        order.sort_by_key(|c| key(c));
        let mut failures = Vec::new();
        for c in order.iter().filter(|c| c.rhs_kvar().is_none()) {
            let (query, v) = self.check(c, &sol, c.rhs.clone())?;
            if !v.is_valid() {
                failures.push(Failure { constraint: c.id, query, validity: v });
            }
        }
        for c in order.iter().filter(|c| c.rhs_kvar().is_some()) {
            let goal = sol.apply(&c.rhs);
            let (query, v) = self.check(c, &sol, goal)?;
            if !v.is_valid() {
                failures.push(Failure { constraint: c.id, query, validity: v });
            }
        }
        Ok(Outcome { solution: sol, failures, stats: std::mem::take(&mut self.stats) })
    }
}

/// Instantiate the pool for every kvar.
pub fn initial_solution(pool: &[Qualifier], cs: &ConstraintSet, ctx: &SortCtx) -> Solution {
    let mut map = BTreeMap::new();
    for k in &cs.kvars {
        map.insert(k.id, instantiate(pool, &k.sort, &k.scope, ctx));
    }
    Solution { map }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgen::{Env, Origin};
    use crate::lang::{FunSort, RelOp};
    use crate::logic::eval::BoundedOracle;

    fn q(body: Pred, vv: Sort, params: Vec<Sort>) -> Qualifier {
        let params = params.into_iter().enumerate().map(|(i, s)| (Qualifier::wildcard(i as u32), s)).collect();
        Qualifier { vv_sort: vv, params, body }
    }

    #[test]
    fn instantiation_worked_example() {
        let len = Ident::global("len");
        let mut ctx = SortCtx::default();
        ctx.funs.insert("len".into(), FunSort { args: vec![Sort::list(Sort::Meta(0))], result: Sort::Int });
        let w = Pred::var(&Qualifier::wildcard(0));
        let pool = vec![
            q(Pred::rel(RelOp::Ge, Pred::vv(), Pred::Int(0)), Sort::Int, vec![]),
            q(Pred::rel(RelOp::Le, w.clone(), Pred::vv()), Sort::Meta(0), vec![Sort::Meta(0)]),
            q(Pred::rel(RelOp::Lt, Pred::vv(), Pred::App(len, vec![w])), Sort::Int, vec![Sort::Meta(1)]),
        ];
        let x = Ident::new("x", 1);
        let y = Ident::new("y", 2);
        let a = Ident::new("a", 3);
        let scope = vec![(x, Sort::Int), (y, Sort::Int), (a, Sort::list(Sort::Int))];
        let got: Vec<String> = instantiate(&pool, &Sort::Int, &scope, &ctx).iter().map(|p| p.to_string()).collect();
        assert_eq!(got, vec!["v >= 0", "x <= v", "y <= v", "v < len a"]);
    }

    #[test]
    fn harvest_from_max_and_inclist() {
        let src = "{-@ max :: x:Int -> y:Int -> {v:Int | v >= x && v >= y} @-}\nmax x y = if x >= y then x else y\n\
                   {-@ data IncList a = Emp | (:<) { hd::a, tl::IncList {v:a | hd <= v}} @-}\n";
        let p = crate::front::load("t.lm", src).unwrap();
        let pool: Vec<String> = harvest_default_qualifiers(&p).iter().map(|q| q.to_string()).collect();
        assert_eq!(pool, vec!["v >= ⋆  [v:Int, ⋆:Int]", "⋆ <= v  [v:'s0, ⋆:'s0]"]);
        let empty = crate::front::load("t.lm", "").unwrap();
        assert!(harvest_default_qualifiers(&empty).is_empty());
    }

    fn kv_constraint(id: usize, lhs: Pred, rhs: Pred) -> Constraint {
        Constraint {
            id,
            env: Env::default(),
            sort: Sort::Int,
            lhs,
            rhs,
            span: Span::dummy(),
            origin: Origin::Subtype,
            owner: String::new(),
            exclude: None,
        }
    }

    fn ctx() -> LogicCtx {
        LogicCtx::default()
    }

    #[test]
    fn weakening_keeps_implied_qualifier() {
        let k = KVarId(0);
        let cs = vec![kv_constraint(0, Pred::eq(Pred::vv(), Pred::Int(5)), Pred::kvar(k))];
        let ge = Pred::rel(RelOp::Ge, Pred::vv(), Pred::Int(0));
        let lt = Pred::rel(RelOp::Lt, Pred::vv(), Pred::Int(0));
        let init = Solution { map: BTreeMap::from([(k, vec![ge.clone(), lt])]) };
        let lc = ctx();
        let mut o = BoundedOracle { bound: 8 };
        let out = Solver::new(&lc, &mut o).solve(&cs, init).unwrap();
        assert!(out.is_safe());
        assert_eq!(out.solution.get(k), &[ge]);
    }

    #[test]
    fn failure_after_weakening() {
        let k = KVarId(0);
        let cs = vec![
            kv_constraint(0, Pred::tt(), Pred::kvar(k)),
            kv_constraint(1, Pred::kvar(k), Pred::rel(RelOp::Gt, Pred::vv(), Pred::Int(0))),
        ];
        let init = Solution { map: BTreeMap::from([(k, vec![Pred::rel(RelOp::Ge, Pred::vv(), Pred::Int(0))])]) };
        let lc = ctx();
        let mut o = BoundedOracle { bound: 8 };
        let out = Solver::new(&lc, &mut o).solve(&cs, init).unwrap();
        assert!(out.solution.get(k).is_empty());
        assert_eq!(out.failures.len(), 1);
        assert_eq!(out.failures[0].constraint, 1);
    }

    #[test]
    fn apply_solution_forms() {
        let z = Ident::new("z", 4);
        let x = Ident::new("x", 5);
        let k = KVarId(0);
        let ge = Pred::rel(RelOp::Ge, Pred::vv(), Pred::Int(0));
        let sol = Solution { map: BTreeMap::from([(k, vec![ge.clone()])]) };
        let occ = Pred::kvar(k).subst1(&Ident::vv(), &Pred::var(&z));
        assert_eq!(sol.apply(&occ).to_string(), "z >= 0");
        assert!(Solution::default().apply(&Pred::kvar(k)).is_true());
        let both = Solution {
            map: BTreeMap::from([(k, vec![ge, Pred::rel(RelOp::Le, Pred::var(&x), Pred::vv())])]),
        };
        assert_eq!(both.apply(&Pred::kvar(k)).to_string(), "v >= 0 && x <= v");
    }
}

//! Random constraint systems and bounded integer queries.

use std::collections::BTreeMap;

use liquid_mini::cgen::{Constraint, Env, Origin};
use liquid_mini::lang::{ArithOp, BaseType, Ident, KVarId, Pos, Pred, RType, RelOp, Sort, SortCtx, Span};
use liquid_mini::logic::Query;
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::Rng;

pub fn x() -> Ident {
    Ident::new("x", 1)
}

pub fn y() -> Ident {
    Ident::new("y", 2)
}

fn v() -> Pred {
    Pred::vv()
}

fn var(i: &Ident) -> Pred {
    Pred::var(i)
}

fn int(n: i64) -> Pred {
    Pred::Int(n)
}

fn rel(op: RelOp, a: Pred, b: Pred) -> Pred {
    Pred::rel(op, a, b)
}

fn add(a: Pred, b: Pred) -> Pred {
    Pred::arith(ArithOp::Add, a, b)
}

fn candidates() -> Vec<Pred> {
    use RelOp::*;
    vec![
        rel(Ge, v(), int(0)),
        rel(Gt, v(), int(0)),
        rel(Le, v(), int(0)),
        rel(Ge, v(), var(&x())),
        rel(Le, v(), var(&x())),
        rel(Eq, v(), var(&x())),
        rel(Ge, v(), var(&y())),
        rel(Lt, v(), var(&y())),
        rel(Ne, v(), int(0)),
        rel(Eq, v(), add(var(&x()), int(1))),
        rel(Le, v(), int(3)),
        rel(Ge, v(), add(var(&x()), int(-1))),
    ]
}

fn source_lhs(rng: &mut StdRng) -> Pred {
    use RelOp::*;
    let c = rng.random_range(-2..=3);
    let opts = [
        rel(Eq, v(), var(&x())),
        rel(Eq, v(), var(&y())),
        rel(Eq, v(), add(var(&x()), int(1))),
        rel(Eq, v(), int(c)),
        Pred::and([rel(Ge, v(), var(&x())), rel(Ge, v(), var(&y()))]),
        rel(Gt, v(), int(c)),
    ];
    opts.choose(rng).unwrap().clone()
}

fn concrete_rhs(rng: &mut StdRng) -> Pred {
    use RelOp::*;
    let opts = [
        rel(Ge, v(), int(0)),
        rel(Gt, v(), var(&x())),
        rel(Ne, v(), int(0)),
        rel(Ge, v(), var(&y())),
        rel(Le, v(), int(5)),
        rel(Ge, v(), int(-3)),
    ];
    opts.choose(rng).unwrap().clone()
}

fn env_refinement(rng: &mut StdRng) -> Pred {
    use RelOp::*;
    let c = rng.random_range(-1..=2);
    [Pred::tt(), rel(Ge, v(), int(c)), rel(Gt, v(), int(c)), rel(Le, v(), int(c))].choose(rng).unwrap().clone()
}

pub struct System {
    pub constraints: Vec<Constraint>,
    pub candidates: BTreeMap<KVarId, Vec<Pred>>,
}

fn kvar_occurrence(rng: &mut StdRng, k: KVarId) -> Pred {
    let p = Pred::kvar(k);
    if rng.random_bool(0.25) {
        p.subst1(&x(), &var(&y()))
    } else {
        p
    }
}

/// A random system over `x`, `y`, with at most twelve candidate
/// qualifiers in total.
pub fn system(rng: &mut StdRng) -> System {
    let nk = rng.random_range(1..=3u32);
    let pool = candidates();
    let mut budget = 12usize;
    let mut cands = BTreeMap::new();
    for k in 0..nk {
        let most = budget.saturating_sub((nk - k - 1) as usize).clamp(1, 6);
        let n = rng.random_range(1..=most);
        budget -= n;
        let mut qs: Vec<Pred> = pool.choose_multiple(rng, n).cloned().collect();
        qs.sort();
        cands.insert(KVarId(k), qs);
    }
    let mut env = Env::default();
    env.bind(&x(), RType::refined(BaseType::Int, env_refinement(rng)));
    env.bind(&y(), RType::refined(BaseType::Int, env_refinement(rng)));
    if rng.random_bool(0.3) {
        env.guard(rel(RelOp::Le, var(&x()), var(&y())));
    }
    let kv = |rng: &mut StdRng| KVarId(rng.random_range(0..nk));
    let mut cs = Vec::new();
    let mut push = |env: &Env, lhs: Pred, rhs: Pred| {
        let id = cs.len();
        let line = id as u32 + 1;
        cs.push(Constraint {
            id,
            env: env.clone(),
            sort: Sort::Int,
            lhs,
            rhs,
            span: Span::new(Pos::new(line, 1, 0), Pos::new(line, 2, 0)),
            origin: Origin::Subtype,
            owner: "t".into(),
            exclude: None,
        });
    };
    for k in 0..nk {
        push(&env, source_lhs(rng), Pred::kvar(KVarId(k)));
    }
    for _ in 0..rng.random_range(0..=3) {
        let (a, b) = (kv(rng), kv(rng));
        let mut e = env.clone();
        if rng.random_bool(0.3) {
            let w = Ident::new("w", 3);
            e.bind(&w, RType::refined(BaseType::Int, Pred::kvar(kv(rng))));
        }
        push(&e, kvar_occurrence(rng, a), Pred::kvar(b));
    }
    for _ in 0..rng.random_range(0..=2) {
        let k = kv(rng);
        let mut lhs = kvar_occurrence(rng, k);
        if rng.random_bool(0.3) {
            lhs = Pred::and([lhs, source_lhs(rng)]);
        }
        push(&env, lhs, concrete_rhs(rng));
    }
    System { constraints: cs, candidates: cands }
}

fn term(rng: &mut StdRng, vars: &[Ident], depth: u32) -> Pred {
    if depth > 0 && rng.random_bool(0.1) {
        let c = formula(rng, vars, depth - 1);
        return Pred::ite(c, term(rng, vars, 0), term(rng, vars, 0));
    }
    let mut t = Pred::Int(rng.random_range(-4..=4));
    for x in vars {
        let c = rng.random_range(-2..=2);
        if c == 0 {
            continue;
        }
        let m = if c == 1 { Pred::var(x) } else { Pred::arith(ArithOp::Mul, Pred::Int(c), Pred::var(x)) };
        t = Pred::arith(ArithOp::Add, m, t);
    }
    t
}

fn atom(rng: &mut StdRng, vars: &[Ident]) -> Pred {
    use RelOp::*;
    let op = *[Eq, Ne, Lt, Le, Gt, Ge].choose(rng).unwrap();
    let a = vars.choose(rng).map(Pred::var).unwrap();
    Pred::rel(op, a, term(rng, vars, 1))
}

fn formula(rng: &mut StdRng, vars: &[Ident], depth: u32) -> Pred {
    if depth == 0 || rng.random_bool(0.5) {
        return atom(rng, vars);
    }
    match rng.random_range(0..4) {
        0 => Pred::and([formula(rng, vars, depth - 1), formula(rng, vars, depth - 1)]),
        1 => Pred::or([formula(rng, vars, depth - 1), formula(rng, vars, depth - 1)]),
        2 => Pred::not(formula(rng, vars, depth - 1)),
        _ => Pred::imp(formula(rng, vars, depth - 1), formula(rng, vars, depth - 1)),
    }
}

/// A query over up to three integer constants confined to [-8, 8].
pub fn bounded_query(rng: &mut StdRng) -> Query {
    let all = [Ident::new("a", 1), Ident::new("b", 2), Ident::new("c", 3)];
    let n = rng.random_range(1..=3);
    let vars = &all[..n];
    let mut hyps: Vec<Pred> = (0..rng.random_range(0..=3)).map(|_| formula(rng, vars, 2)).collect();
    let goal = match rng.random_range(0..10) {
        0 => Pred::tt(),
        1..=3 if !hyps.is_empty() => {
            let n = rng.random_range(1..=hyps.len());
            let picked: Vec<Pred> = hyps.choose_multiple(rng, n).cloned().collect();
            Pred::and(picked)
        }
        4 => {
            hyps.push(Pred::ff());
            formula(rng, vars, 2)
        }
        _ => formula(rng, vars, 2),
    };
    for x in vars {
        hyps.push(Pred::rel(RelOp::Le, Pred::Int(-8), Pred::var(x)));
        hyps.push(Pred::rel(RelOp::Le, Pred::var(x), Pred::Int(8)));
    }
    let sorts: BTreeMap<Ident, Sort> = vars.iter().map(|x| (x.clone(), Sort::Int)).collect();
    Query::new(hyps, goal, &sorts, &SortCtx::default()).expect("well-formed query")
}

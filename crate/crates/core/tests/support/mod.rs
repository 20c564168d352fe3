//! Checks shared by the acceptance harness and the integration tests.
#![allow(dead_code)]

pub mod gen;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use liquid_mini::cgen::{Constraint, Origin};
use liquid_mini::corpus::{corpus_dir, corpus_manifest, Expected};
use liquid_mini::driver::{self, Options, Verdict};
use liquid_mini::front::load;
use liquid_mini::front::lower::parse_qualifier;
use liquid_mini::interp::{eval_measure, Interp, RunError, Value};
use liquid_mini::lang::{Ident, KVarId, Pred, Program, Sort, SortCtx, Subst};
use liquid_mini::logic::embed::{constraint_query, LogicCtx};
use liquid_mini::logic::eval::BoundedOracle;
use liquid_mini::logic::smt::{SmtOracle, SolverConfig};
use liquid_mini::logic::{Cached, Oracle, Query, Validity};
use liquid_mini::measure;
use liquid_mini::solver::{instantiate, Solution, Solver};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub type Check = Result<String, String>;

pub fn z3() -> Cached<SmtOracle> {
    let cfg = SolverConfig::discover(None).expect("an SMT solver on PATH");
    Cached::new(SmtOracle::new(cfg).expect("solver starts"))
}

pub fn corpus_file(name: &str) -> PathBuf {
    corpus_dir().join(name)
}

pub fn corpus_program(name: &str) -> Program {
    let path = corpus_file(name);
    let text = std::fs::read_to_string(&path).unwrap();
    load(&path.to_string_lossy(), &text).unwrap()
}

/// Every manifest case gets its expected verdict, unsafe ones at the
/// expected location, each within the time limit.
pub fn corpus_verdicts() -> Check {
    let mut failures = Vec::new();
    let cases = corpus_manifest();
    let mut slowest = Duration::ZERO;
    for c in &cases {
        let start = Instant::now();
        let r = driver::check_file(&c.path.to_string_lossy(), &Options::default());
        let took = start.elapsed();
        slowest = slowest.max(took);
        if took > Duration::from_secs(30) {
            failures.push(format!("{}: took {took:?}", c.name()));
        }
        match (&r.verdict, c.verdict) {
            (Verdict::Safe, Expected::Safe) => {}
            (Verdict::Unsafe(ds), Expected::Unsafe) => {
                if !c.at(ds[0].span.start) {
                    failures.push(format!(
                        "{}: first diagnostic at {}, expected {:?}",
                        c.name(),
                        ds[0].span,
                        c.location
                    ));
                }
            }
            (v, e) => failures.push(format!("{}: got {v:?}, expected {e:?}", c.name())),
        }
    }
    if failures.is_empty() {
        Ok(format!("{} files, slowest {:.2}s", cases.len(), slowest.as_secs_f64()))
    } else {
        Err(failures.join("; "))
    }
}

/// The two obligations of `max` appear in the constraint dump and are
/// valid.
pub fn max_derivation() -> Check {
    let path = corpus_file("max.lm");
    let text = std::fs::read_to_string(&path).unwrap();
    let ck = driver::front_end("max.lm", &text).map_err(|e| e.to_string())?;
    let dump = ck.constraints.dump("max.lm");
    let wanted = [
        "x:Int, y:Int, x >= y |- v = x <: v >= x && v >= y",
        "x:Int, y:Int, not (x >= y) |- v = y <: v >= x && v >= y",
    ];
    let ctx = LogicCtx { sorts: ck.prog.sort_ctx(), measures: ck.prog.measures.clone() };
    let mut oracle = z3();
    for w in wanted {
        let line = dump.lines().find(|l| l.ends_with(w)).ok_or_else(|| format!("missing obligation `{w}`"))?;
        let c = ck
            .constraints
            .constraints
            .iter()
            .find(|c| line.ends_with(&c.to_string()))
            .ok_or("dump line without constraint")?;
        let q = constraint_query(&ctx, c, &mut |p| p.clone(), c.rhs.clone())
            .map_err(|e| e.to_string())?
            .ok_or("goal outside fragment")?;
        let v = oracle.check(&q).map_err(|e| e.to_string())?;
        if v != Validity::Valid {
            return Err(format!("`{w}` is {v:?}"));
        }
    }
    Ok("both obligations dumped and valid".into())
}

/// The worked instantiation example.
pub fn worked_instantiation() -> Check {
    let prog = load("q.lm", "{-@ measure len @-}\nlen :: [a] -> Int\nlen [] = 0\nlen (_:xs) = 1 + len xs\n")
        .map_err(|e| e.to_string())?;
    let pool: Vec<_> = ["v >= 0", "⋆ <= v", "v < len ⋆"]
        .iter()
        .map(|t| parse_qualifier(t, &prog).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let scope = vec![
        (Ident::new("x", 1), Sort::Int),
        (Ident::new("y", 2), Sort::Int),
        (Ident::new("a", 3), Sort::list(Sort::Int)),
    ];
    let got: BTreeSet<String> =
        instantiate(&pool, &Sort::Int, &scope, &prog.sort_ctx()).iter().map(|p| p.to_string()).collect();
    let want: BTreeSet<String> = ["v >= 0", "x <= v", "y <= v", "v < len a"].iter().map(|s| s.to_string()).collect();
    if got == want {
        Ok(format!("{{{}}}", got.into_iter().collect::<Vec<_>>().join(", ")))
    } else {
        Err(format!("got {got:?}"))
    }
}

/// All assignments of subsets of each kvar's candidates, strongest first
/// by construction of the comparison below.
pub fn brute_force_strongest(
    ctx: &LogicCtx,
    cs: &[Constraint],
    cands: &BTreeMap<KVarId, Vec<Pred>>,
    oracle: &mut impl Oracle,
) -> (Solution, bool) {
    let ks: Vec<KVarId> = cands.keys().copied().collect();
    let sizes: Vec<usize> = ks.iter().map(|k| cands[k].len()).collect();
    let total: usize = sizes.iter().sum();
    assert!(total <= 16);
    let valid = |sol: &Solution, c: &Constraint, oracle: &mut dyn Oracle| -> bool {
        let goal = sol.apply(&c.rhs);
        goal.conjuncts().iter().all(|g| match constraint_query(ctx, c, &mut |p| sol.apply(p), (*g).clone()) {
            Ok(Some(q)) => q.fast_path().is_some() || oracle.check(&q).map(|v| v.is_valid()).unwrap_or(false),
            _ => false,
        })
    };
    let mut best: Option<Solution> = None;
    for bits in 0u32..(1 << total) {
        let mut map = BTreeMap::new();
        let mut off = 0;
        for (k, n) in ks.iter().zip(&sizes) {
            let sel = cands[k].iter().enumerate().filter(|(i, _)| bits & (1 << (off + i)) != 0).map(|(_, q)| q.clone());
            map.insert(*k, sel.collect::<Vec<_>>());
            off += n;
        }
        let sol = Solution { map };
        if cs.iter().filter(|c| c.rhs_kvar().is_some()).all(|c| valid(&sol, c, oracle)) {
            let bigger = match &best {
                None => true,
                Some(b) => ks.iter().all(|k| b.get(*k).iter().all(|q| sol.get(*k).contains(q))),
            };
            if bigger {
                best = Some(sol);
            }
        }
    }
    let best = best.expect("the empty assignment is always valid");
    let ok = cs.iter().filter(|c| c.rhs_kvar().is_none()).all(|c| valid(&best, c, oracle));
    (best, ok)
}

fn same_solution(a: &Solution, b: &Solution, ks: impl Iterator<Item = KVarId>) -> bool {
    ks.into_iter().all(|k| {
        let x: BTreeSet<&Pred> = a.get(k).iter().collect();
        let y: BTreeSet<&Pred> = b.get(k).iter().collect();
        x == y
    })
}

/// The solver agrees with brute-force enumeration on random systems.
pub fn strongest_solution(trials: usize, seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let ctx = LogicCtx::default();
    let mut oracle = z3();
    let mut failing = 0;
    for t in 0..trials {
        let sys = gen::system(&mut rng);
        let out = Solver::new(&ctx, &mut oracle)
            .solve(&sys.constraints, Solution { map: sys.candidates.clone() })
            .map_err(|e| e.to_string())?;
        let (best, ok) = brute_force_strongest(&ctx, &sys.constraints, &sys.candidates, &mut oracle);
        if !same_solution(&out.solution, &best, sys.candidates.keys().copied()) {
            return Err(format!("trial {t}: solver {:?} vs brute force {:?}", out.solution.map, best.map));
        }
        if out.is_safe() != ok {
            return Err(format!("trial {t}: solver safe={} vs brute force {ok}", out.is_safe()));
        }
        if !ok {
            failing += 1;
        }
        let mut shuffled = sys.constraints.clone();
        shuffled.shuffle(&mut rng);
        for (i, c) in shuffled.iter_mut().enumerate() {
            c.id = i;
        }
        let again = Solver::new(&ctx, &mut oracle)
            .solve(&shuffled, Solution { map: sys.candidates.clone() })
            .map_err(|e| e.to_string())?;
        if !same_solution(&again.solution, &best, sys.candidates.keys().copied()) {
            return Err(format!("trial {t}: permuted constraint order changed the solution"));
        }
    }
    Ok(format!("{trials} systems, {failing} with a violated concrete constraint"))
}

/// Valid answers, from the fast path or the solver, survive exhaustive
/// evaluation over the bounded box; invalid ones have a witness there.
pub fn oracle_soundness(trials: usize, seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut oracle = z3();
    let bounded = BoundedOracle { bound: 8 };
    let (mut valid, mut fast) = (0, 0);
    for t in 0..trials {
        let q = gen::bounded_query(&mut rng);
        let answer = match q.fast_path() {
            Some(v) => {
                fast += 1;
                let z = oracle.check(&q).map_err(|e| e.to_string())?;
                if z != v {
                    return Err(format!("trial {t}: fast path {v:?} but solver {z:?}\n{}", q.script()));
                }
                v
            }
            None => oracle.check(&q).map_err(|e| e.to_string())?,
        };
        let witness = bounded.countermodel(&q).map_err(|e| e.to_string())?;
        match (&answer, &witness) {
            (Validity::Valid, Some(m)) => return Err(format!("trial {t}: Valid refuted by {m:?}\n{}", q.script())),
            (Validity::Invalid(_), None) => return Err(format!("trial {t}: Invalid without witness\n{}", q.script())),
            (Validity::Unknown(why), _) => return Err(format!("trial {t}: unknown ({why})")),
            (Validity::Valid, None) => valid += 1,
            _ => {}
        }
    }
    Ok(format!("{trials} queries, {valid} valid, {fast} by fast path"))
}

/// Every binary tree shape with `n` nodes, keys in order, cached heights
/// correct.
pub fn avl_shapes(n: usize, next_key: &mut i64) -> Vec<Value<'static>> {
    if n == 0 {
        return vec![Value::con("Leaf", vec![])];
    }
    let mut out = Vec::new();
    for left in 0..n {
        let right = n - 1 - left;
        let base = *next_key;
        let mut k = base;
        let ls = avl_shapes(left, &mut k);
        for l in &ls {
            let key = base + left as i64;
            let mut k2 = key + 1;
            for r in avl_shapes(right, &mut k2) {
                let h = 1 + tree_height(l).max(tree_height(&r));
                out.push(Value::con("Node", vec![Value::Int(key), l.clone(), r, Value::Int(h)]));
            }
        }
    }
    *next_key += n as i64;
    out
}

pub fn tree_height(t: &Value) -> i64 {
    match t.ctor() {
        Some(("Node", [_, l, r, _])) => 1 + tree_height(l).max(tree_height(r)),
        _ => 0,
    }
}

/// The constructor axioms of every measure over the value's nodes, as
/// hypotheses about one constant per node.
fn unfold_axioms(prog: &Program, v: &Value, next: &mut u32, vars: &mut BTreeMap<Ident, Sort>, hyps: &mut Vec<Pred>) -> Pred {
    match v {
        Value::Int(n) => Pred::Int(*n),
        Value::Bool(b) => Pred::Bool(*b),
        Value::Data(c, fields) => {
            let (d, decl) = prog.data_of_ctor(c).unwrap();
            *next += 1;
            let me = Ident::new("t", *next);
            vars.insert(me.clone(), Sort::Data(d.name.clone(), vec![Sort::Int]));
            let mut s = Subst::new();
            for ((f, _), fv) in decl.fields.iter().zip(fields.iter()) {
                let t = unfold_axioms(prog, fv, next, vars, hyps);
                s.insert(f.clone(), t);
            }
            s.insert(Ident::vv(), Pred::var(&me));
            for m in prog.measures.iter().filter(|m| m.data == d.name) {
                if let Some(fact) = measure::equation_fact(m, decl) {
                    hyps.push(fact.subst(&s));
                }
            }
            Pred::var(&me)
        }
        Value::Fun(_) => panic!("function value"),
    }
}

fn value_pred(v: &Value) -> Pred {
    match v {
        Value::Int(n) => Pred::Int(*n),
        Value::Bool(b) => Pred::Bool(*b),
        _ => panic!("measure results are Int or Bool"),
    }
}

/// Equations and unfolded axioms agree on every small list and tree.
pub fn measure_agreement() -> Check {
    let mut oracle = z3();
    let mut checked = 0;
    let mut run = |prog: &Program, values: &[Value<'static>], checked: &mut usize| -> Result<(), String> {
        let sorts: SortCtx = prog.sort_ctx();
        for v in values {
            let mut vars = BTreeMap::new();
            let mut hyps = Vec::new();
            let mut next = 0;
            let root = unfold_axioms(prog, v, &mut next, &mut vars, &mut hyps);
            for m in &prog.measures {
                let by_eqs = eval_measure(prog, m, v).ok_or_else(|| format!("{} undefined on {v}", m.name))?;
                let goal = Pred::eq(Pred::App(m.symbol(), vec![root.clone()]), value_pred(&by_eqs));
                let q = Query::new(hyps.clone(), goal.clone(), &vars, &sorts).map_err(|e| e.to_string())?;
                if oracle.check(&q).map_err(|e| e.to_string())? != Validity::Valid {
                    return Err(format!("{} {v}: axioms do not entail {}", m.name, goal));
                }
                // The axioms must also be consistent with that value.
                let q = Query::new(hyps.clone(), Pred::not(goal), &vars, &sorts).map_err(|e| e.to_string())?;
                if oracle.check(&q).map_err(|e| e.to_string())?.is_valid() {
                    return Err(format!("{} {v}: axioms are inconsistent", m.name));
                }
                *checked += 1;
            }
        }
        Ok(())
    };
    let head = corpus_program("head.lm");
    let lists: Vec<Value<'static>> = (0..=6).map(|n| Value::int_list(&(0..n as i64).collect::<Vec<_>>())).collect();
    run(&head, &lists, &mut checked)?;
    let avl = corpus_program("avl_insert.lm");
    let mut trees = Vec::new();
    for n in 0..=6 {
        let mut k = 0;
        trees.extend(avl_shapes(n, &mut k));
    }
    let ntrees = trees.len();
    run(&avl, &trees, &mut checked)?;
    Ok(format!("{checked} measure values on {} lists and {ntrees} trees", lists.len()))
}

fn ints(v: &Value) -> Result<Vec<i64>, String> {
    v.elements()
        .ok_or_else(|| format!("not a list: {v}"))?
        .iter()
        .map(|x| x.as_int().ok_or_else(|| format!("not an int: {x}")))
        .collect()
}

fn inc_list<'p>(xs: &[i64]) -> Value<'p> {
    let mut s = xs.to_vec();
    s.sort();
    s.iter().rev().fold(Value::con("Emp", vec![]), |acc, &x| Value::con(":<", vec![Value::Int(x), acc]))
}

fn random_list(rng: &mut StdRng) -> Vec<i64> {
    let n = rng.random_range(0..=6);
    (0..n).map(|_| rng.random_range(-5..=5)).collect()
}

fn check_sorted(name: &str, input: &[i64], out: &[i64]) -> Result<(), String> {
    let mut want = input.to_vec();
    want.sort();
    if out != want {
        return Err(format!("{name} {input:?} gave {out:?}"));
    }
    Ok(())
}

fn avl_ok(t: &Value, lo: Option<i64>, hi: Option<i64>) -> Result<i64, String> {
    match t.ctor() {
        Some(("Leaf", [])) => Ok(0),
        Some(("Node", [k, l, r, h])) => {
            let k = k.as_int().ok_or("key")?;
            if lo.is_some_and(|lo| k <= lo) || hi.is_some_and(|hi| k >= hi) {
                return Err(format!("BST order violated at {k}"));
            }
            let hl = avl_ok(l, lo, Some(k))?;
            let hr = avl_ok(r, Some(k), hi)?;
            if (hl - hr).abs() > 1 {
                return Err(format!("unbalanced at {k}: {hl} vs {hr}"));
            }
            let real = 1 + hl.max(hr);
            if h.as_int() != Some(real) {
                return Err(format!("cached height {h} at {k}, real {real}"));
            }
            Ok(real)
        }
        _ => Err(format!("not a tree: {t}")),
    }
}

fn no_pat_error<T>(name: &str, r: Result<T, RunError>) -> Result<T, String> {
    r.map_err(|e| format!("{name}: {e}"))
}

/// Run the safe corpus programs on random small inputs.
pub fn dynamic_cross_check(trials: usize, seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let progs: BTreeMap<&str, Program> = [
        "max.lm",
        "head.lm",
        "inclist_insert.lm",
        "insertsort.lm",
        "merge.lm",
        "mergesort.lm",
        "quicksort.lm",
        "avl_insert.lm",
    ]
    .into_iter()
    .map(|n| (n, corpus_program(n)))
    .collect();
    let safe: BTreeSet<String> = corpus_manifest()
        .iter()
        .filter(|c| c.verdict == Expected::Safe)
        .map(|c| c.path.file_name().unwrap().to_string_lossy().to_string())
        .collect();
    for n in progs.keys() {
        if !safe.contains(*n) {
            return Err(format!("{n} is not a safe corpus case"));
        }
    }
    let mut runs = 0;
    for _ in 0..trials {
        let xs = random_list(&mut rng);
        let (a, b) = (rng.random_range(-8..=8), rng.random_range(-8..=8));

        let i = Interp::new(&progs["max.lm"]);
        let m = no_pat_error("max", i.call("max", vec![Value::Int(a), Value::Int(b)]))?;
        if m != Value::Int(a.max(b)) {
            return Err(format!("max {a} {b} = {m}"));
        }

        let i = Interp::new(&progs["head.lm"]);
        let r = no_pat_error("safeFirst", i.call("safeFirst", vec![Value::int_list(&xs)]))?;
        if r != Value::Int(xs.first().copied().unwrap_or(0)) {
            return Err(format!("safeFirst {xs:?} = {r}"));
        }

        let i = Interp::new(&progs["inclist_insert.lm"]);
        let r = no_pat_error("insert", i.call("insert", vec![Value::Int(a), inc_list(&xs)]))?;
        let mut with = xs.clone();
        with.push(a);
        check_sorted("insert", &with, &ints(&r)?)?;

        for (file, f) in [("insertsort.lm", "insertSort"), ("mergesort.lm", "mergeSort"), ("quicksort.lm", "quickSort")] {
            let i = Interp::new(&progs[file]);
            let r = no_pat_error(f, i.call(f, vec![Value::int_list(&xs)]))?;
            check_sorted(f, &xs, &ints(&r)?)?;
        }

        let ys = random_list(&mut rng);
        let i = Interp::new(&progs["merge.lm"]);
        let r = no_pat_error("merge", i.call("merge", vec![inc_list(&xs), inc_list(&ys)]))?;
        let both: Vec<i64> = xs.iter().chain(&ys).copied().collect();
        check_sorted("merge", &both, &ints(&r)?)?;

        let i = Interp::new(&progs["avl_insert.lm"]);
        let mut t = Value::con("Leaf", vec![]);
        let mut keys = BTreeSet::new();
        for &k in &xs {
            t = no_pat_error("insert", i.call("insert", vec![Value::Int(k), t]))?;
            keys.insert(k);
            avl_ok(&t, None, None).map_err(|e| format!("after inserting {xs:?}: {e}"))?;
        }
        runs += 10;
    }
    Ok(format!("{trials} trials, {runs} program runs, no pattern errors"))
}

/// Two runs over the corpus render identically.
pub fn determinism() -> Check {
    let paths: Vec<String> = corpus_manifest().iter().map(|c| c.path.to_string_lossy().to_string()).collect();
    let opts = Options { dump_solution: true, ..Options::default() };
    let (a, _) = driver::run(&paths, &opts);
    let (b, _) = driver::run(&paths, &opts);
    let par = Options { jobs: 4, ..opts.clone() };
    let (c, _) = driver::run(&paths, &par);
    if a != b {
        return Err("two sequential runs differ".into());
    }
    if a != c {
        return Err("parallel run differs from sequential run".into());
    }
    Ok(format!("{} bytes identical across 3 runs", a.len()))
}

pub fn origin_is_dead_code(c: &Constraint) -> bool {
    matches!(c.origin, Origin::PatError(_))
}

//! Direct evaluation of predicates over concrete integers and booleans,
//! and a brute-force validity checker over a bounded box.

use std::collections::BTreeMap;

use super::{Model, Oracle, OracleError, Query, Validity};
use crate::lang::{ArithOp, Ident, Pred};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Val {
    Int(i64),
    Bool(bool),
}

impl Val {
    fn int(self) -> Option<i64> {
        match self {
            Val::Int(n) => Some(n),
            Val::Bool(_) => None,
        }
    }

    fn bool(self) -> Option<bool> {
        match self {
            Val::Bool(b) => Some(b),
            Val::Int(_) => None,
        }
    }
}

/// Evaluate a kvar-free, measure-free predicate. `None` on an unbound
/// variable, a measure application or a sort error.
pub fn eval(p: &Pred, env: &BTreeMap<Ident, Val>) -> Option<Val> {
    Some(match p {
        Pred::Bool(b) => Val::Bool(*b),
        Pred::Int(n) => Val::Int(*n),
        Pred::Var(x) => *env.get(x)?,
        Pred::KVar(_) | Pred::App(..) => return None,
        Pred::Arith(op, a, b) => {
            let (a, b) = (eval(a, env)?.int()?, eval(b, env)?.int()?);
            Val::Int(match op {
                ArithOp::Add => a.checked_add(b)?,
                ArithOp::Sub => a.checked_sub(b)?,
                ArithOp::Mul => a.checked_mul(b)?,
            })
        }
        Pred::Rel(op, a, b) => {
            let (a, b) = (eval(a, env)?, eval(b, env)?);
            match (a, b) {
                (Val::Int(a), Val::Int(b)) => Val::Bool(op.holds(a, b)),
                (Val::Bool(a), Val::Bool(b)) => match op {
                    crate::lang::RelOp::Eq => Val::Bool(a == b),
                    crate::lang::RelOp::Ne => Val::Bool(a != b),
                    _ => return None,
                },
                _ => return None,
            }
        }
        Pred::And(ps) => {
            let mut r = true;
            for q in ps {
                r &= eval(q, env)?.bool()?;
            }
            Val::Bool(r)
        }
        Pred::Or(ps) => {
            let mut r = false;
            for q in ps {
                r |= eval(q, env)?.bool()?;
            }
            Val::Bool(r)
        }
        Pred::Not(q) => Val::Bool(!eval(q, env)?.bool()?),
        Pred::Imp(a, b) => Val::Bool(!eval(a, env)?.bool()? || eval(b, env)?.bool()?),
        Pred::Ite(c, a, b) => {
            if eval(c, env)?.bool()? {
                eval(a, env)?
            } else {
                eval(b, env)?
            }
        }
    })
}

/// Search the box `[-bound, bound]^n` for a countermodel. Only queries over
/// integer and boolean constants without measures are supported.
pub struct BoundedOracle {
    pub bound: i64,
}

impl BoundedOracle {
    pub fn countermodel(&self, q: &Query) -> Result<Option<Model>, OracleError> {
        if !q.funs.is_empty() || !q.sorts.is_empty() {
            return Err(OracleError::Fragment("bounded evaluation supports only Int and Bool".into()));
        }
        let mut vars = Vec::new();
        for p in q.hyps.iter().chain([&q.goal]) {
            for x in p.free_vars() {
                if !vars.contains(&x) {
                    vars.push(x);
                }
            }
        }
        let sorts: Vec<&str> = vars
            .iter()
            .map(|x| q.consts.get(&x.smt_name()).map(|(s, _)| s.as_str()).unwrap_or("Int"))
            .collect();
        let mut env = BTreeMap::new();
        let hyp = Pred::and(q.hyps.clone());
        Ok(self.search(&vars, &sorts, 0, &mut env, &hyp, &q.goal))
    }

    fn search(
        &self,
        vars: &[Ident],
        sorts: &[&str],
        i: usize,
        env: &mut BTreeMap<Ident, Val>,
        hyp: &Pred,
        goal: &Pred,
    ) -> Option<Model> {
        if i == vars.len() {
            let h = eval(hyp, env).and_then(Val::bool)?;
            let g = eval(goal, env).and_then(Val::bool)?;
            if h && !g {
                return Some(env.iter().map(|(x, v)| (x.to_string(), fmt_val(*v))).collect());
            }
            return None;
        }
        let vals: Vec<Val> = if sorts[i] == "Bool" {
            vec![Val::Bool(false), Val::Bool(true)]
        } else {
            (-self.bound..=self.bound).map(Val::Int).collect()
        };
        for v in vals {
            env.insert(vars[i].clone(), v);
            if let Some(m) = self.search(vars, sorts, i + 1, env, hyp, goal) {
                return Some(m);
            }
        }
        env.remove(&vars[i]);
        None
    }
}

fn fmt_val(v: Val) -> String {
    match v {
        Val::Int(n) => n.to_string(),
        Val::Bool(b) => b.to_string(),
    }
}

impl Oracle for BoundedOracle {
    /// Valid here only means no countermodel inside the box.
    fn check(&mut self, q: &Query) -> Result<Validity, OracleError> {
        Ok(match self.countermodel(q)? {
            Some(m) => Validity::Invalid(Some(m)),
            None => Validity::Valid,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{RelOp, Sort, SortCtx};

    #[test]
    fn finds_negative_witness() {
        let vars = BTreeMap::from([(Ident::vv(), Sort::Int)]);
        let q = Query::new(vec![], Pred::rel(RelOp::Ge, Pred::vv(), Pred::Int(0)), &vars, &SortCtx::default())
            .unwrap();
        let m = BoundedOracle { bound: 8 }.countermodel(&q).unwrap().unwrap();
        assert!(m["v"].parse::<i64>().unwrap() < 0);
    }

    #[test]
    fn ite_and_bool_equality() {
        let x = Ident::new("x", 1);
        let env = BTreeMap::from([(x.clone(), Val::Int(3))]);
        let m = Pred::ite(Pred::rel(RelOp::Ge, Pred::var(&x), Pred::Int(5)), Pred::var(&x), Pred::Int(5));
        assert_eq!(eval(&m, &env), Some(Val::Int(5)));
        let b = Pred::eq(Pred::Bool(true), Pred::rel(RelOp::Lt, Pred::var(&x), Pred::Int(4)));
        assert_eq!(eval(&b, &env), Some(Val::Bool(true)));
    }
}

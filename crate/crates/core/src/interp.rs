//! A reference interpreter for core programs and a direct evaluator for
//! measures over values. Used for dynamic cross-checks of verdicts.

use std::cell::{Cell, RefCell};
use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use crate::front::desugar::BUILTINS;
use crate::lang::{ArithOp, Expr, ExprKind, Ident, MeasureDecl, Pred, Program, RelOp, CONS, NIL};

#[derive(Clone)]
pub enum Value<'p> {
    Int(i64),
    Bool(bool),
    Data(Rc<str>, Rc<Vec<Value<'p>>>),
    Fun(Rc<Func<'p>>),
}

pub enum Func<'p> {
    Closure { param: &'p Ident, body: &'p Expr, env: Env<'p> },
    /// A builtin operator or constructor waiting for `arity` arguments.
    Partial { head: Head, arity: usize, args: Vec<Value<'p>> },
}

#[derive(Clone, Debug)]
pub enum Head {
    Prim(String),
    Con(String),
}

impl<'p> PartialEq for Value<'p> {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Data(c, xs), Value::Data(d, ys)) => c == d && xs == ys,
            _ => false,
        }
    }
}

impl<'p> PartialOrd for Value<'p> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.partial_cmp(b),
            (Value::Bool(a), Value::Bool(b)) => a.partial_cmp(b),
            _ => None,
        }
    }
}

impl<'p> fmt::Debug for Value<'p> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<'p> fmt::Display for Value<'p> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{}", if *b { "True" } else { "False" }),
            Value::Data(c, args) if args.is_empty() => write!(f, "{c}"),
            Value::Data(c, args) => {
                write!(f, "({c}")?;
                for a in args.iter() {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
            Value::Fun(_) => write!(f, "<function>"),
        }
    }
}

impl<'p> Value<'p> {
    pub fn con(name: &str, args: Vec<Value<'p>>) -> Self {
        Value::Data(Rc::from(name), Rc::new(args))
    }

    pub fn int_list(xs: &[i64]) -> Self {
        xs.iter().rev().fold(Value::con(NIL, vec![]), |acc, &x| Value::con(CONS, vec![Value::Int(x), acc]))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn ctor(&self) -> Option<(&str, &[Value<'p>])> {
        match self {
            Value::Data(c, args) => Some((c, args)),
            _ => None,
        }
    }

    /// Elements of a list-like value: every two-field constructor is a
    /// cons cell, every nullary one the end.
    pub fn elements(&self) -> Option<Vec<Value<'p>>> {
        let mut out = Vec::new();
        let mut v = self;
        loop {
            match v.ctor()? {
                (_, []) => return Some(out),
                (_, [x, rest]) => {
                    out.push(x.clone());
                    v = rest;
                }
                _ => return None,
            }
        }
    }
}

#[derive(Clone, Default)]
pub struct Env<'p>(Option<Rc<Frame<'p>>>);

pub struct Frame<'p> {
    name: &'p Ident,
    slot: RefCell<Option<Value<'p>>>,
    next: Env<'p>,
}

impl<'p> Env<'p> {
    fn push(&self, name: &'p Ident, v: Option<Value<'p>>) -> Env<'p> {
        Env(Some(Rc::new(Frame { name, slot: RefCell::new(v), next: self.clone() })))
    }

    fn lookup(&self, x: &Ident) -> Option<Value<'p>> {
        let mut e = self;
        while let Some(f) = &e.0 {
            if f.name == x {
                return f.slot.borrow().clone();
            }
            e = &f.next;
        }
        None
    }

    fn set(&self, x: &Ident, v: Value<'p>) {
        let mut e = self;
        while let Some(f) = &e.0 {
            if f.name == x {
                *f.slot.borrow_mut() = Some(v);
                return;
            }
            e = &f.next;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("pattern-match failure in `{0}`")]
    PatError(String),
    #[error("evaluation stuck: {0}")]
    Stuck(String),
    #[error("out of fuel")]
    OutOfFuel,
}

type R<'p> = Result<Value<'p>, RunError>;

fn stuck<T>(msg: impl Into<String>) -> Result<T, RunError> {
    Err(RunError::Stuck(msg.into()))
}

pub struct Interp<'p> {
    prog: &'p Program,
    globals: BTreeMap<&'p str, &'p Expr>,
    fuel: Cell<u64>,
}

impl<'p> Interp<'p> {
    pub fn new(prog: &'p Program) -> Self {
        let globals = prog.binds.iter().map(|b| (b.name.as_str(), &b.expr)).collect();
        Interp { prog, globals, fuel: Cell::new(1_000_000) }
    }

    pub fn with_fuel(self, fuel: u64) -> Self {
        self.fuel.set(fuel);
        self
    }

    fn tick(&self) -> Result<(), RunError> {
        let f = self.fuel.get();
        if f == 0 {
            return Err(RunError::OutOfFuel);
        }
        self.fuel.set(f - 1);
        Ok(())
    }

    /// Call a top-level binding.
    pub fn call(&self, name: &str, args: Vec<Value<'p>>) -> R<'p> {
        let mut f = self.global(name)?;
        for a in args {
            f = self.apply(f, a)?;
        }
        Ok(f)
    }

    fn global(&self, name: &str) -> R<'p> {
        if let Some(e) = self.globals.get(name) {
            return self.eval(e, &Env::default());
        }
        if BUILTINS.contains(&name) {
            let arity = if name == "not" { 1 } else { 2 };
            return Ok(Value::Fun(Rc::new(Func::Partial { head: Head::Prim(name.into()), arity, args: vec![] })));
        }
        stuck(format!("unbound `{name}`"))
    }

    fn constructor(&self, c: &str) -> R<'p> {
        let (_, decl) = self.prog.data_of_ctor(c).ok_or_else(|| RunError::Stuck(format!("constructor `{c}`")))?;
        if decl.fields.is_empty() {
            return Ok(Value::con(c, vec![]));
        }
        Ok(Value::Fun(Rc::new(Func::Partial { head: Head::Con(c.into()), arity: decl.fields.len(), args: vec![] })))
    }

    pub fn eval(&self, e: &'p Expr, env: &Env<'p>) -> R<'p> {
        self.tick()?;
        match &e.kind {
            ExprKind::Int(n) => Ok(Value::Int(*n)),
            ExprKind::Bool(b) => Ok(Value::Bool(*b)),
            ExprKind::Var(x) => match env.lookup(x) {
                Some(v) => Ok(v),
                None if x.is_global() => self.global(x.as_str()),
                None => stuck(format!("unbound `{x:?}`")),
            },
            ExprKind::Con(c) => self.constructor(c),
            ExprKind::App(f, a) => {
                let f = self.eval(f, env)?;
                let a = self.eval(a, env)?;
                self.apply(f, a)
            }
            ExprKind::Lam(x, body) => Ok(Value::Fun(Rc::new(Func::Closure { param: x, body, env: env.clone() }))),
            ExprKind::Let(x, rhs, body) => {
                let v = self.eval(rhs, env)?;
                self.eval(body, &env.push(x, Some(v)))
            }
            ExprKind::LetRec(bs, body) => {
                let mut env2 = env.clone();
                for (x, _) in bs {
                    env2 = env2.push(x, None);
                }
                for (x, rhs) in bs {
                    let v = self.eval(rhs, &env2)?;
                    env2.set(x, v);
                }
                self.eval(body, &env2)
            }
            ExprKind::If(c, a, b) => match self.eval(c, env)? {
                Value::Bool(true) => self.eval(a, env),
                Value::Bool(false) => self.eval(b, env),
                v => stuck(format!("if on {v}")),
            },
            ExprKind::Case(x, alts) => {
                let v = env.lookup(x).ok_or_else(|| RunError::Stuck(format!("unbound `{x:?}`")))?;
                let Value::Data(c, fields) = &v else { return stuck(format!("case on {v}")) };
                let alt = alts.iter().find(|a| *a.con == **c).ok_or_else(|| RunError::Stuck(format!("no alt {c}")))?;
                let mut env2 = env.clone();
                for (b, f) in alt.binders.iter().zip(fields.iter()) {
                    env2 = env2.push(b, Some(f.clone()));
                }
                self.eval(&alt.body, &env2)
            }
            ExprKind::PatError(m) => Err(RunError::PatError(m.clone())),
        }
    }

    pub fn apply(&self, f: Value<'p>, a: Value<'p>) -> R<'p> {
        let Value::Fun(func) = f else { return stuck(format!("applying {f}")) };
        match &*func {
            Func::Closure { param, body, env } => self.eval(body, &env.push(param, Some(a))),
            Func::Partial { head, arity, args } => {
                let mut args = args.clone();
                args.push(a);
                if args.len() < *arity {
                    return Ok(Value::Fun(Rc::new(Func::Partial { head: head.clone(), arity: *arity, args })));
                }
                match head {
                    Head::Con(c) => Ok(Value::con(c, args)),
                    Head::Prim(p) => prim(p, &args),
                }
            }
        }
    }
}

fn prim<'p>(op: &str, args: &[Value<'p>]) -> R<'p> {
    let ints = || match (args[0].as_int(), args.get(1).and_then(Value::as_int)) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => stuck(format!("`{op}` on non-integers")),
    };
    let bools = || match (args[0].as_bool(), args.get(1).and_then(Value::as_bool)) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => stuck(format!("`{op}` on non-booleans")),
    };
    let ord = |f: fn(std::cmp::Ordering) -> bool| match args[0].partial_cmp(&args[1]) {
        Some(o) => Ok(Value::Bool(f(o))),
        None => stuck(format!("`{op}` on incomparable values")),
    };
    match op {
        "+" => ints().map(|(a, b)| Value::Int(a.wrapping_add(b))),
        "-" => ints().map(|(a, b)| Value::Int(a.wrapping_sub(b))),
        "*" => ints().map(|(a, b)| Value::Int(a.wrapping_mul(b))),
        "max" => ints().map(|(a, b)| Value::Int(a.max(b))),
        "min" => ints().map(|(a, b)| Value::Int(a.min(b))),
        "&&" => bools().map(|(a, b)| Value::Bool(a && b)),
        "||" => bools().map(|(a, b)| Value::Bool(a || b)),
        "not" => match args[0].as_bool() {
            Some(b) => Ok(Value::Bool(!b)),
            None => stuck("`not` on non-boolean"),
        },
        "==" => Ok(Value::Bool(args[0] == args[1])),
        "/=" => Ok(Value::Bool(args[0] != args[1])),
        "<" => ord(|o| o.is_lt()),
        "<=" => ord(|o| o.is_le()),
        ">" => ord(|o| o.is_gt()),
        ">=" => ord(|o| o.is_ge()),
        _ => stuck(format!("unknown primitive `{op}`")),
    }
}

/// Evaluate a measure on a value by its defining equations.
pub fn eval_measure<'p>(prog: &Program, m: &MeasureDecl, v: &Value<'p>) -> Option<Value<'p>> {
    let (c, fields) = v.ctor()?;
    let eq = m.eqs.iter().find(|e| e.ctor == c)?;
    let env: BTreeMap<Ident, Value<'p>> = eq.binders.iter().cloned().zip(fields.iter().cloned()).collect();
    eval_logic(prog, &eq.body, &env)
}

/// Evaluate a logic term whose variables are bound to values; measure
/// applications are evaluated by their equations.
pub fn eval_logic<'p>(prog: &Program, p: &Pred, env: &BTreeMap<Ident, Value<'p>>) -> Option<Value<'p>> {
    let int = |q: &Pred| eval_logic(prog, q, env)?.as_int();
    let boolean = |q: &Pred| eval_logic(prog, q, env)?.as_bool();
    Some(match p {
        Pred::Bool(b) => Value::Bool(*b),
        Pred::Int(n) => Value::Int(*n),
        Pred::Var(x) => env.get(x)?.clone(),
        Pred::KVar(_) => return None,
        Pred::Arith(op, a, b) => {
            let (a, b) = (int(a)?, int(b)?);
            Value::Int(match op {
                ArithOp::Add => a.checked_add(b)?,
                ArithOp::Sub => a.checked_sub(b)?,
                ArithOp::Mul => a.checked_mul(b)?,
            })
        }
        Pred::Rel(op, a, b) => {
            let (a, b) = (eval_logic(prog, a, env)?, eval_logic(prog, b, env)?);
            Value::Bool(match op {
                RelOp::Eq => a == b,
                RelOp::Ne => a != b,
                _ => op.holds(a.as_int()?, b.as_int()?),
            })
        }
        Pred::And(ps) => {
            let mut r = true;
            for q in ps {
                r &= boolean(q)?;
            }
            Value::Bool(r)
        }
        Pred::Or(ps) => {
            let mut r = false;
            for q in ps {
                r |= boolean(q)?;
            }
            Value::Bool(r)
        }
        Pred::Not(q) => Value::Bool(!boolean(q)?),
        Pred::Imp(a, b) => Value::Bool(!boolean(a)? || boolean(b)?),
        Pred::Ite(c, a, b) => {
            if boolean(c)? {
                eval_logic(prog, a, env)?
            } else {
                eval_logic(prog, b, env)?
            }
        }
        Pred::App(f, args) => {
            let m = prog.measure(f.as_str())?;
            let v = eval_logic(prog, args.first()?, env)?;
            eval_measure(prog, m, &v)?
        }
    })
}

use std::collections::BTreeMap;
use std::fmt;

/// Logic sorts of refinement terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Int,
    Bool,
    /// A rigid program type variable. Treated as an ordered abstract sort.
    TyVar(String),
    /// A datatype, erased to an uninterpreted sort in the logic.
    Data(String, Vec<Sort>),
    /// A sort unknown, solved by unification (qualifier templates).
    Meta(u32),
}

impl Sort {
    pub fn list(elem: Sort) -> Sort {
        Sort::Data(crate::lang::LIST.to_string(), vec![elem])
    }

    pub fn is_ordered(&self) -> bool {
        matches!(self, Sort::Int | Sort::TyVar(_))
    }

    pub fn has_meta(&self) -> bool {
        match self {
            Sort::Meta(_) => true,
            Sort::Data(_, args) => args.iter().any(Sort::has_meta),
            _ => false,
        }
    }

    /// Replace rigid type variables by metas, consistently by name.
    pub fn generalize(&self, vars: &mut BTreeMap<String, u32>) -> Sort {
        match self {
            Sort::TyVar(a) => {
                let n = vars.len() as u32;
                Sort::Meta(*vars.entry(a.clone()).or_insert(n))
            }
            Sort::Data(d, args) => Sort::Data(d.clone(), args.iter().map(|s| s.generalize(vars)).collect()),
            s => s.clone(),
        }
    }

    /// The name of the solver sort. Type variables are embedded as integers.
    pub fn smt(&self) -> String {
        match self {
            Sort::Int | Sort::TyVar(_) | Sort::Meta(_) => "Int".to_string(),
            Sort::Bool => "Bool".to_string(),
            Sort::Data(d, _) => smt_sort_name(d),
        }
    }
}

pub fn smt_sort_name(data: &str) -> String {
    match data {
        crate::lang::LIST => "List".to_string(),
        _ if data.starts_with('(') => format!("Tuple{}", data.matches(',').count() + 1),
        _ => data.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect(),
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Int => write!(f, "Int"),
            Sort::Bool => write!(f, "Bool"),
            Sort::TyVar(a) => write!(f, "{a}"),
            Sort::Meta(n) => write!(f, "'s{n}"),
            Sort::Data(d, args) if d == crate::lang::LIST && args.len() == 1 => write!(f, "[{}]", args[0]),
            Sort::Data(d, args) if d.starts_with('(') => {
                write!(f, "(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Sort::Data(d, args) => {
                write!(f, "{d}")?;
                for a in args {
                    let compound = matches!(a, Sort::Data(n, xs)
                        if !xs.is_empty() && n != crate::lang::LIST && !n.starts_with('('));
                    if compound {
                        write!(f, " ({a})")?
                    } else {
                        write!(f, " {a}")?
                    }
                }
                Ok(())
            }
        }
    }
}

/// Substitution of meta sorts, built by unification.
#[derive(Debug, Clone, Default)]
pub struct SortSubst {
    map: BTreeMap<u32, Sort>,
}

impl SortSubst {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn apply(&self, s: &Sort) -> Sort {
        match s {
            Sort::Meta(n) => match self.map.get(n) {
                Some(t) => self.apply(t),
                None => s.clone(),
            },
            Sort::Data(d, args) => Sort::Data(d.clone(), args.iter().map(|a| self.apply(a)).collect()),
            _ => s.clone(),
        }
    }

    fn occurs(&self, n: u32, s: &Sort) -> bool {
        match self.apply(s) {
            Sort::Meta(m) => m == n,
            Sort::Data(_, args) => args.iter().any(|a| self.occurs(n, a)),
            _ => false,
        }
    }

    /// Unify two sorts, extending the substitution. Returns false on clash.
    pub fn unify(&mut self, a: &Sort, b: &Sort) -> bool {
        let a = self.apply(a);
        let b = self.apply(b);
        match (&a, &b) {
            (Sort::Meta(x), Sort::Meta(y)) if x == y => true,
            (Sort::Meta(x), t) | (t, Sort::Meta(x)) => {
                if self.occurs(*x, t) {
                    return false;
                }
                self.map.insert(*x, t.clone());
                true
            }
            (Sort::Data(d1, a1), Sort::Data(d2, a2)) => {
                d1 == d2 && a1.len() == a2.len() && a1.iter().zip(a2).all(|(x, y)| self.unify(x, y))
            }
            _ => a == b,
        }
    }
}

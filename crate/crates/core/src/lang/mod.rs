//! Core data structures shared by every phase.

pub mod core;
pub mod ident;
pub mod pred;
pub mod qualifier;
pub mod rtype;
pub mod sort;
pub mod span;

pub use self::core::*;
pub use ident::{Ident, NameSupply};
pub use pred::{ArithOp, FunSort, KVarApp, KVarId, Pred, RelOp, SortChecker, SortCtx, SortError, Subst};
pub use qualifier::Qualifier;
pub use rtype::{BaseType, RType};
pub use sort::{Sort, SortSubst};
pub use span::{Pos, Span};

/// Name of the builtin list type constructor.
pub const LIST: &str = "List";
pub const NIL: &str = "[]";
pub const CONS: &str = ":";
pub const UNIT: &str = "()";

/// Type constructor name of the n-ary tuple.
pub fn tuple_name(n: usize) -> String {
    format!("({})", ",".repeat(n.saturating_sub(1)))
}

pub fn is_tuple_name(s: &str) -> bool {
    s.len() >= 3 && s.starts_with('(') && s.ends_with(')') && s[1..s.len() - 1].chars().all(|c| c == ',')
}

pub fn tuple_arity(s: &str) -> usize {
    s.len() - 1
}

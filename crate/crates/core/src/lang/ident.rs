use std::cell::Cell;
use std::fmt;
use std::sync::Arc;

/// A program identifier. `id` is zero for top-level names and unique per
/// binder after renaming; `name` is kept for diagnostics.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ident {
    pub name: Arc<str>,
    pub id: u32,
}

/// Reserved id of the value variable.
pub const VV_ID: u32 = u32::MAX;

impl Ident {
    pub fn global(name: &str) -> Self {
        Ident { name: Arc::from(name), id: 0 }
    }

    pub fn new(name: &str, id: u32) -> Self {
        Ident { name: Arc::from(name), id }
    }

    /// The value variable `v` bound by every refinement.
    pub fn vv() -> Self {
        Ident { name: Arc::from("v"), id: VV_ID }
    }

    pub fn is_vv(&self) -> bool {
        self.id == VV_ID
    }

    pub fn is_global(&self) -> bool {
        self.id == 0
    }

    pub fn as_str(&self) -> &str {
        &self.name
    }

    /// Symbol used for this identifier in solver scripts.
    pub fn smt_name(&self) -> String {
        if self.is_vv() {
            return "VV".to_string();
        }
        let mut s: String = self
            .name
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
            .collect();
        if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit()) {
            s.insert(0, '_');
        }
        format!("{}!{}", s, self.id)
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl fmt::Debug for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_vv() {
            write!(f, "v")
        } else {
            write!(f, "{}#{}", self.name, self.id)
        }
    }
}

/// Supply of fresh binder ids for one checking run.
#[derive(Debug)]
pub struct NameSupply {
    next: Cell<u32>,
}

impl Default for NameSupply {
    fn default() -> Self {
        NameSupply { next: Cell::new(1) }
    }
}

impl NameSupply {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn starting_at(first: u32) -> Self {
        NameSupply { next: Cell::new(first) }
    }

    pub fn fresh(&self, name: &str) -> Ident {
        let id = self.next.get();
        self.next.set(id + 1);
        Ident::new(name, id)
    }

    /// Fresh copy of an existing identifier, keeping its name.
    pub fn refresh(&self, x: &Ident) -> Ident {
        self.fresh(&x.name)
    }
}

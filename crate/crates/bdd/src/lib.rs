//! Reduced ordered binary decision diagrams.
//!
//! A [`BddManager`] owns a canonical node store (one unique table per
//! variable), a memoizing operation cache and a mutable variable order.
//! [`Bdd`] values are reference-counted handles into a manager; two handles
//! of the same manager denote the same boolean function iff their roots are
//! identical.
//!
//! Nodes are never complemented: negation rebuilds the diagram with the
//! terminals exchanged, so the node count of `f` and `!f` is always equal.
//!
//! Memory is reclaimed by a manager-level sweep of nodes whose reference
//! count dropped to zero. The sweep runs only between top-level operations,
//! either explicitly ([`BddManager::gc`]) or when the number of allocated
//! nodes crosses the configured threshold.
//!
//! ```
//! use splitsynth_bdd::BddManager;
//!
//! let mgr = BddManager::new();
//! let x = mgr.new_var();
//! let y = mgr.new_var();
//! let f = mgr.var(x).and(&mgr.var(y));
//! assert_eq!(f.exists(&[x]), mgr.var(y));
//! assert!(f.and(&f.not()).is_false());
//! ```

mod handle;
mod manager;
mod reorder;

pub use handle::{Bdd, SatIter};
pub use manager::{BddConfig, BddManager, BddStats, VarId};
pub use reorder::{AnnealConfig, ReorderMethod, ReorderReport};

use thiserror::Error;

/// Binary operations accepted by [`BddManager::apply`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoolOp {
    And,
    Or,
    Xor,
}

/// Quantifier kinds accepted by [`BddManager::quantify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Exists,
    Forall,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BddError {
    #[error("operands belong to different BDD managers")]
    ManagerMismatch,
    #[error("variable {0} is not declared in this manager")]
    UnknownVar(u32),
    #[error("function depends on variable {0}, which is missing from the enumeration support")]
    SupportMissing(u32),
    #[error("rename maps {0} variables onto {1}")]
    RenameWidth(usize, usize),
}

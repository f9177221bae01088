//! Correct-by-construction controller synthesis for dynamical systems by
//! abstraction refinement.
//!
//! The continuous state space is partitioned into rectangular cells
//! ([`abstraction`]), giving a finite transition system ([`fts`]) that is
//! stored either as an explicit transition list or as a BDD relation under a
//! log or split state encoding ([`encoding`], [`symbolic`]). A nested
//! fixed point computes the states from which the specification
//! `□A ∧ ◇□B ∧ ⋀ □◇Gⁱ` can be enforced ([`synthesis`]); its iterates guide
//! where the partition is refined next ([`refine`]) and yield a controller
//! ([`controller`]). [`bench`] runs the encoding comparison on thermal
//! building models.
//!
//! ```
//! use splitsynth::fts::{Fts, Quant};
//! use splitsynth::StateSet;
//!
//! let mut fts = Fts::new(2);
//! for q in 1..=3 {
//!     fts.insert_state(q).unwrap();
//! }
//! for (q, u, r) in [(1, 0, 2), (1, 0, 3), (1, 1, 2), (2, 0, 3), (3, 0, 3)] {
//!     fts.add_transition(q, u, r).unwrap();
//! }
//! let x: StateSet = [2].into_iter().collect();
//! assert_eq!(fts.pre(&x, Quant::EA).to_vec(), vec![1]);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abstraction;
pub mod bench;
pub mod controller;
pub mod encoding;
pub mod error;
pub mod fts;
pub mod refine;
pub mod stateset;
pub mod symbolic;
pub mod synthesis;

pub use error::{Error, Result};
pub use stateset::StateSet;

pub type StateId = u32;
pub type ActionId = u32;

//! Bosonic lattice fields over an unbounded grid, handled through finitely
//! supported ("quasi-local") operators and states that differ from a fixed
//! background at finitely many sites.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`] - grid sites, truncated single-site Fock spaces, ladder operators
//! * [`algebra`] - the *-algebra of quasi-local operators and its dense embedding
//! * [`state`] - backgrounds, sector labels, vectors of a sector Hilbert space
//! * [`functional`] - pure and mixed state functionals
//! * [`dynamics`] - local energy densities, the Liouvillian and windowed evolution
//! * [`reversal`] - time reversal and sector-jump classification
//! * [`master`] - projection-operator reduction and the dissipative semigroup

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod dynamics;
mod error;
pub mod functional;
pub mod lattice;
pub mod linalg;
pub mod master;
pub mod reversal;
pub mod sampling;
pub mod state;

pub use error::{Error, Result};
pub use lattice::{C64, FockTruncation, GridIndex, SiteOperator, SiteState, Window};

/// Default cap on the dimension of dense window embeddings.
pub const DEFAULT_DENSE_CAP: usize = 4096;

/// Coefficients below this magnitude are pruned from canonical term lists.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

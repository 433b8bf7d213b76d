//! Projection-operator reduction of the window Liouvillian onto a span of
//! slow observables.
//!
//! With `P` the HS projector onto the span and `Q = 1 - P`, the projected
//! resolvent is `P R(z) P = (z - PLP - E(z))^{-1}` with self-energy
//! `E(z) = PLQ (z - QLQ)^{-1} QLP`. The dominant pole is approximated by
//! `z₀ = PLP + E(iη)` for small `η > 0`, split as `z₀ = ξ - iθ` into a
//! Hermitian dispersion `ξ` and a positive dissipation `θ`, and the reduced
//! dynamics is the semigroup `T_p(t) = exp(-i z₀ t)`, `t >= 0`.

mod basis;
mod blocks;
mod compare;
mod generator;
mod pole;
mod superop;

pub use basis::{BasisPreset, ObservableBasis};
pub use blocks::{project_split, ProjectedBlocks, QlqSpectrum};
pub use compare::{compare_exact_vs_master, ExactProjector, VanHoveRow, VanHoveSweep};
pub use generator::{dispersion_dissipation, semigroup_evolve, ComplexMatrix, GeneratorDiagnostics, ProjectedGenerator};
pub use pole::{hermitian_parts, projected_resolvent, self_energy, weak_coupling_pole, PoleReport};
pub use superop::{build_superoperator, build_superoperator_capped, superoperator_from_hamiltonian, unvectorize, vectorize, Superoperator};

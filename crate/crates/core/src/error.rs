use thiserror::Error;

use crate::lattice::GridIndex;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid Fock truncation: {0}")]
    InvalidTruncation(String),

    #[error("occupation {n} outside 0..={n_max}")]
    OccupationOutOfRange { n: usize, n_max: usize },

    #[error("site dimension mismatch: {left} vs {right}")]
    TruncationMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("site {0:?} lies outside the window")]
    WindowTooSmall(GridIndex),

    #[error("dense dimension {dim} exceeds cap {cap}")]
    CapExceeded { dim: usize, cap: usize },

    #[error("vectors belong to different sectors")]
    SectorMismatch,

    #[error("invalid background: {0}")]
    InvalidBackground(String),

    #[error("vector has zero norm")]
    ZeroVector,

    #[error("boundary leakage {leakage:.3e} exceeds tolerance {tol:.3e}")]
    LeakageExceeded { leakage: f64, tol: f64 },

    #[error("norm drift {drift:.3e} exceeds tolerance {tol:.3e}")]
    NormDrift { drift: f64, tol: f64 },

    #[error("observable basis is not HS-orthonormal (defect {0:.3e})")]
    DegenerateBasis(f64),

    #[error("z = {z_re}{z_im:+}i is within {distance:.3e} of the spectrum of QLQ")]
    NearSingular { z_re: f64, z_im: f64, distance: f64 },

    #[error("no eta plateau: best relative spread {best_spread:.3e} > {max_spread:.3e}")]
    NoPlateau { best_spread: f64, max_spread: f64 },

    #[error("semigroup is only defined for t >= 0, got {0}")]
    NegativeTime(f64),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),
}

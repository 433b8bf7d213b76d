use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::blocks::ProjectedBlocks;
use crate::linalg::{hermiticity_defect, HermitianEigen};
use crate::{Error, Result, C64};

/// Row-major complex matrix as `[re, im]` pairs, for serialization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&DMatrix<C64>> for ComplexMatrix {
    fn from(m: &DMatrix<C64>) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                data.push([m[(r, c)].re, m[(r, c)].im]);
            }
        }
        ComplexMatrix { rows: m.nrows(), cols: m.ncols(), data }
    }
}

impl From<&ComplexMatrix> for DMatrix<C64> {
    fn from(m: &ComplexMatrix) -> Self {
        DMatrix::from_row_iterator(m.rows, m.cols, m.data.iter().map(|[re, im]| C64::new(*re, *im)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorDiagnostics {
    /// `‖ξ − ξ†‖_F`.
    pub xi_hermiticity: f64,
    /// `‖θ − θ†‖_F`.
    pub theta_hermiticity: f64,
    pub xi_spectrum: Vec<f64>,
    /// Ascending; non-negative up to roundoff.
    pub theta_spectrum: Vec<f64>,
}

/// Reduced generator on the slow span: `z₀ = ξ − iθ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectedGenerator {
    pub eta: f64,
    pub plp: ComplexMatrix,
    pub xi: ComplexMatrix,
    pub theta: ComplexMatrix,
    pub diagnostics: GeneratorDiagnostics,
}

impl ProjectedGenerator {
    pub fn xi_matrix(&self) -> DMatrix<C64> {
        (&self.xi).into()
    }

    pub fn theta_matrix(&self) -> DMatrix<C64> {
        (&self.theta).into()
    }

    /// `ξ − iθ`.
    pub fn pole(&self) -> DMatrix<C64> {
        self.xi_matrix() - self.theta_matrix() * C64::new(0.0, 1.0)
    }

    pub fn k(&self) -> usize {
        self.xi.rows
    }
}

/// `ξ = PLP − Σ_m λ_m/(λ_m² + η²) PLQ|m⟩⟨m|QLP` and
/// `θ = Σ_m η/(λ_m² + η²) PLQ|m⟩⟨m|QLP`, so that `PLP + E(iη) = ξ − iθ`.
pub fn dispersion_dissipation(blocks: &ProjectedBlocks, eta: f64) -> Result<ProjectedGenerator> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    let spectrum = blocks.qlq_spectrum()?;
    let e2 = eta * eta;
    let xi = &blocks.plp - spectrum.contract(|l| C64::from(l / (l * l + e2)));
    let theta = spectrum.contract(|l| C64::from(eta / (l * l + e2)));
    let diagnostics = GeneratorDiagnostics {
        xi_hermiticity: hermiticity_defect(&xi),
        theta_hermiticity: hermiticity_defect(&theta),
        xi_spectrum: HermitianEigen::new(&xi)?.values.iter().copied().collect(),
        theta_spectrum: HermitianEigen::new(&theta)?.values.iter().copied().collect(),
    };
    Ok(ProjectedGenerator { eta, plp: (&blocks.plp).into(), xi: (&xi).into(), theta: (&theta).into(), diagnostics })
}

/// `T_p(t) = exp(−iξt − θt)` for `t >= 0`.
pub fn semigroup_evolve(generator: &ProjectedGenerator, t: f64) -> Result<DMatrix<C64>> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("time must be finite, got {t}")));
    }
    Ok((generator.pole() * C64::new(0.0, -t)).exp())
}

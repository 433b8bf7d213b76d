use nalgebra::DMatrix;
use serde::Serialize;

use super::basis::{BasisPreset, ObservableBasis};
use super::blocks::project_split;
use super::generator::{dispersion_dissipation, semigroup_evolve, ProjectedGenerator};
use super::superop::{build_superoperator, Superoperator};
use crate::dynamics::HamiltonianSpec;
use crate::lattice::Window;
use crate::linalg::{spectral_norm, HermitianEigen};
use crate::{Error, Result, C64};

/// `B† e^{−iLt} B` for all `t` from one diagonalization of `L`.
pub struct ExactProjector {
    values: Vec<f64>,
    /// `B† V` (`k × D²`).
    overlap: DMatrix<C64>,
}

impl ExactProjector {
    pub fn new(l: &Superoperator, basis: &ObservableBasis) -> Result<Self> {
        let eig = HermitianEigen::new(&l.matrix)?;
        Ok(ExactProjector { overlap: basis.vectors().adjoint() * &eig.vectors, values: eig.values.iter().copied().collect() })
    }

    pub fn at(&self, t: f64) -> DMatrix<C64> {
        let mut scaled = self.overlap.clone();
        for (m, &l) in self.values.iter().enumerate() {
            let phase = C64::new(0.0, -l * t).exp();
            for z in scaled.column_mut(m).iter_mut() {
                *z *= phase;
            }
        }
        scaled * self.overlap.adjoint()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VanHoveRow {
    pub g: f64,
    /// Rescaled time `g²t`.
    pub tau: f64,
    pub t: f64,
    /// `‖B† e^{−iL_g t} B − T_p(t)‖₂`.
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VanHoveSweep {
    pub couplings: Vec<f64>,
    pub eta: f64,
    pub rows: Vec<VanHoveRow>,
    /// Sup of the error over the τ grid, one per coupling.
    pub sup_errors: Vec<f64>,
    /// `sup_errors[i+1] / sup_errors[i]`.
    pub ratios: Vec<f64>,
    #[serde(skip)]
    pub generators: Vec<ProjectedGenerator>,
}

/// For each coupling `g` (which scales the kinetic density), compares the
/// exact projected propagator with the master-equation semigroup on the
/// grid `t = τ/g²`. At `g = 0` the physical time equals `τ`.
pub fn compare_exact_vs_master(
    spec: &HamiltonianSpec,
    window: &Window,
    preset: BasisPreset,
    couplings: &[f64],
    tau_grid: &[f64],
    eta: f64,
) -> Result<VanHoveSweep> {
    if tau_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidParameter("rescaled times must be finite and non-negative".into()));
    }
    let basis = ObservableBasis::preset(spec, window, preset)?;
    let mut rows = Vec::with_capacity(couplings.len() * tau_grid.len());
    let mut sup_errors = Vec::with_capacity(couplings.len());
    let mut generators = Vec::with_capacity(couplings.len());
    for &g in couplings {
        if !g.is_finite() {
            return Err(Error::InvalidParameter(format!("coupling must be finite, got {g}")));
        }
        let mut coupled = spec.clone();
        coupled.hopping_scale = g;
        let l = build_superoperator(&coupled, window)?;
        let blocks = project_split(&l, &basis)?;
        let generator = dispersion_dissipation(&blocks, eta)?;
        let exact = ExactProjector::new(&l, &basis)?;
        let mut sup: f64 = 0.0;
        for &tau in tau_grid {
            let t = if g == 0.0 { tau } else { tau / (g * g) };
            let error = spectral_norm(&(exact.at(t) - semigroup_evolve(&generator, t)?));
            sup = sup.max(error);
            rows.push(VanHoveRow { g, tau, t, error });
        }
        sup_errors.push(sup);
        generators.push(generator);
    }
    let ratios = sup_errors.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { f64::NAN }).collect();
    Ok(VanHoveSweep { couplings: couplings.to_vec(), eta, rows, sup_errors, ratios, generators })
}

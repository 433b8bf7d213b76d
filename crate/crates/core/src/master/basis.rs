use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::superop::vectorize;
use crate::algebra::QuasiLocalOperator;
use crate::dynamics::HamiltonianSpec;
use crate::lattice::Window;
use crate::{Error, Result, C64};

const DEPENDENCE_TOL: f64 = 1e-10;

/// Ready-made slow-observable sets on a window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisPreset {
    /// `N(I)` for every window site.
    Densities,
    /// The identity followed by the densities.
    IdentityDensities,
    /// Momentum densities along the first axis at sites whose neighbours lie
    /// in the window.
    Currents,
}

/// HS-orthonormal set of window operators spanning the slow subspace.
#[derive(Clone, Debug)]
pub struct ObservableBasis {
    window: Window,
    window_dim: usize,
    /// `vec` of the orthonormalized operators, one per column.
    vectors: DMatrix<C64>,
}

impl ObservableBasis {
    /// Gram–Schmidt (two passes) on the embedded operators, in order.
    pub fn new(operators: &[QuasiLocalOperator], window: &Window) -> Result<Self> {
        let dense = operators.iter().map(|a| a.embed_dense(window)).collect::<Result<Vec<_>>>()?;
        Self::from_dense(&dense, window)
    }

    pub fn from_dense(operators: &[DMatrix<C64>], window: &Window) -> Result<Self> {
        if operators.is_empty() {
            return Err(Error::InvalidParameter("basis needs at least one operator".into()));
        }
        let d = operators[0].nrows();
        let mut cols: Vec<DVector<C64>> = Vec::with_capacity(operators.len());
        for a in operators {
            if a.nrows() != d || a.ncols() != d {
                return Err(Error::InvalidParameter("basis operators must share the window dimension".into()));
            }
            let mut v = vectorize(a);
            let scale = v.norm();
            for _ in 0..2 {
                for q in &cols {
                    let c = q.dotc(&v);
                    v -= q * c;
                }
            }
            let r = v.norm();
            if !(r > DEPENDENCE_TOL * scale.max(1.0)) {
                return Err(Error::DegenerateBasis(r));
            }
            cols.push(v / C64::from(r));
        }
        Ok(ObservableBasis { window: window.clone(), window_dim: d, vectors: DMatrix::from_columns(&cols) })
    }

    pub fn preset(spec: &HamiltonianSpec, window: &Window, preset: BasisPreset) -> Result<Self> {
        let d = spec.site_dim();
        let densities = window.sites().iter().map(|s| spec.number(*s));
        let ops: Vec<QuasiLocalOperator> = match preset {
            BasisPreset::Densities => densities.collect(),
            BasisPreset::IdentityDensities => std::iter::once(QuasiLocalOperator::identity(d)).chain(densities).collect(),
            BasisPreset::Currents => window
                .sites()
                .iter()
                .filter(|s| window.contains(&s.shifted(0, 1)) && window.contains(&s.shifted(0, -1)))
                .map(|s| spec.momentum(*s, 0))
                .collect(),
        };
        Self::new(&ops, window)
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn window_dim(&self) -> usize {
        self.window_dim
    }

    /// Number of basis operators `k`.
    pub fn len(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.ncols() == 0
    }

    /// `D² × k` matrix of orthonormal columns.
    pub fn vectors(&self) -> &DMatrix<C64> {
        &self.vectors
    }

    /// Same span, rotated by the `k × k` unitary `u`: new column `j` is
    /// `Σ_i vectors[:, i] u[i, j]`.
    pub fn rotated(&self, u: &DMatrix<C64>) -> Self {
        ObservableBasis { window: self.window.clone(), window_dim: self.window_dim, vectors: &self.vectors * u }
    }

    /// `max |B†B − 1|`.
    pub fn gram_defect(&self) -> f64 {
        let k = self.len();
        let g = self.vectors.adjoint() * &self.vectors - DMatrix::<C64>::identity(k, k);
        g.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::FockTruncation;

    #[test]
    fn presets_are_orthonormal() {
        let spec = HamiltonianSpec::free(FockTruncation::new(1).unwrap());
        let w = Window::chain(3).unwrap();
        for p in [BasisPreset::Densities, BasisPreset::IdentityDensities, BasisPreset::Currents] {
            let b = ObservableBasis::preset(&spec, &w, p).unwrap();
            assert!(b.gram_defect() < 1e-12);
        }
        assert_eq!(ObservableBasis::preset(&spec, &w, BasisPreset::Currents).unwrap().len(), 1);
    }

    #[test]
    fn dependent_operators_rejected() {
        let spec = HamiltonianSpec::free(FockTruncation::new(1).unwrap());
        let w = Window::chain(2).unwrap();
        let n = spec.number(crate::GridIndex::ORIGIN);
        let err = ObservableBasis::new(&[n.clone(), n.scale(C64::new(0.0, 2.0))], &w).unwrap_err();
        assert!(matches!(err, Error::DegenerateBasis(_)));
    }
}

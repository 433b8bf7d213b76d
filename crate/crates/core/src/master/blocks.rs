use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use super::basis::ObservableBasis;
use super::superop::Superoperator;
use crate::linalg::HermitianEigen;
use crate::{Error, Result, C64};

/// Spectral form of `QLQ` with the couplings to the slow span:
/// `PLQ (f(QLQ)) QLP = Σ_m f(λ_m) left[:, m] right[m, :]`.
#[derive(Clone, Debug)]
pub struct QlqSpectrum {
    pub values: DVector<f64>,
    /// `PLQ V` (`k × q`).
    pub left: DMatrix<C64>,
    /// `V† QLP` (`q × k`).
    pub right: DMatrix<C64>,
}

impl QlqSpectrum {
    /// `Σ_m f(λ_m) left[:, m] right[m, :]`.
    pub fn contract(&self, f: impl Fn(f64) -> C64) -> DMatrix<C64> {
        let mut scaled = self.left.clone();
        for (m, &lambda) in self.values.iter().enumerate() {
            let fm = f(lambda);
            for z in scaled.column_mut(m).iter_mut() {
                *z *= fm;
            }
        }
        scaled * &self.right
    }
}

/// The four blocks of `L` with respect to `P = BB†` and its complement,
/// expressed in orthonormal coordinates of the two ranges.
#[derive(Debug)]
pub struct ProjectedBlocks {
    pub plp: DMatrix<C64>,
    pub plq: DMatrix<C64>,
    pub qlp: DMatrix<C64>,
    pub qlq: DMatrix<C64>,
    /// Orthonormal basis of `ran P` (`D² × k`).
    pub p_basis: DMatrix<C64>,
    /// Orthonormal basis of `ran Q` (`D² × (D² − k)`).
    pub q_basis: DMatrix<C64>,
    spectrum: OnceLock<std::result::Result<QlqSpectrum, Error>>,
}

impl Clone for ProjectedBlocks {
    fn clone(&self) -> Self {
        ProjectedBlocks {
            plp: self.plp.clone(),
            plq: self.plq.clone(),
            qlp: self.qlp.clone(),
            qlq: self.qlq.clone(),
            p_basis: self.p_basis.clone(),
            q_basis: self.q_basis.clone(),
            spectrum: OnceLock::new(),
        }
    }
}

/// Splits `L` into `PLP, PLQ, QLP, QLQ`.
pub fn project_split(l: &Superoperator, basis: &ObservableBasis) -> Result<ProjectedBlocks> {
    let n = l.dim();
    let b = basis.vectors();
    if b.nrows() != n {
        return Err(Error::InvalidParameter(format!(
            "basis lives in dimension {}, superoperator in {n}",
            b.nrows()
        )));
    }
    let k = b.ncols();
    let q_proj = DMatrix::<C64>::identity(n, n) - b * b.adjoint();
    let eig = HermitianEigen::new(&q_proj)?;
    // eigenvalues of a projector are 0 (k times) then 1
    let q_basis = eig.vectors.columns(k, n - k).into_owned();
    let lb = &l.matrix * b;
    let lc = &l.matrix * &q_basis;
    Ok(ProjectedBlocks {
        plp: b.adjoint() * &lb,
        plq: b.adjoint() * &lc,
        qlp: q_basis.adjoint() * &lb,
        qlq: q_basis.adjoint() * &lc,
        p_basis: b.clone(),
        q_basis,
        spectrum: OnceLock::new(),
    })
}

impl ProjectedBlocks {
    pub fn k(&self) -> usize {
        self.plp.nrows()
    }

    /// `P = BB†` on the full operator space.
    pub fn projector(&self) -> DMatrix<C64> {
        &self.p_basis * self.p_basis.adjoint()
    }

    /// `PLP + PLQ + QLP + QLQ` mapped back to the full operator space.
    pub fn reassemble(&self) -> DMatrix<C64> {
        let (b, c) = (&self.p_basis, &self.q_basis);
        b * &self.plp * b.adjoint() + b * &self.plq * c.adjoint() + c * &self.qlp * b.adjoint() + c * &self.qlq * c.adjoint()
    }

    /// Eigendecomposition of `QLQ`, computed once.
    pub fn qlq_spectrum(&self) -> Result<&QlqSpectrum> {
        self.spectrum
            .get_or_init(|| {
                let eig = HermitianEigen::new(&self.qlq)?;
                Ok(QlqSpectrum {
                    left: &self.plq * &eig.vectors,
                    right: eig.vectors.adjoint() * &self.qlp,
                    values: eig.values,
                })
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Mean gap between consecutive distinct eigenvalues of `QLQ`.
    pub fn mean_level_spacing(&self) -> Result<f64> {
        let s = self.qlq_spectrum()?;
        let v = &s.values;
        if v.len() < 2 {
            return Ok(0.0);
        }
        Ok((v[v.len() - 1] - v[0]) / (v.len() - 1) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::HamiltonianSpec;
    use crate::lattice::{FockTruncation, Window};
    use crate::linalg::max_abs_diff;
    use crate::master::build_superoperator;

    #[test]
    fn reassembly_and_projector() {
        let mut spec = HamiltonianSpec::free(FockTruncation::new(1).unwrap());
        spec.interaction = 0.5;
        spec.range = 1.0;
        let w = Window::chain(3).unwrap();
        let l = build_superoperator(&spec, &w).unwrap();
        let basis = ObservableBasis::preset(&spec, &w, super::super::BasisPreset::Densities).unwrap();
        let blocks = project_split(&l, &basis).unwrap();
        assert!(max_abs_diff(&blocks.reassemble(), &l.matrix) < 1e-12);
        let p = blocks.projector();
        assert!(max_abs_diff(&(&p * &p), &p) < 1e-12);
        let qq = &blocks.q_basis.adjoint() * &blocks.q_basis;
        assert!(max_abs_diff(&qq, &DMatrix::identity(qq.nrows(), qq.nrows())) < 1e-12);
    }

    #[test]
    fn identity_basis_has_zero_plp() {
        let spec = HamiltonianSpec::free(FockTruncation::new(1).unwrap());
        let w = Window::chain(2).unwrap();
        let l = build_superoperator(&spec, &w).unwrap();
        let id = crate::algebra::QuasiLocalOperator::identity(2);
        let basis = ObservableBasis::new(&[id], &w).unwrap();
        let blocks = project_split(&l, &basis).unwrap();
        assert!(blocks.plp.norm() < 1e-14);
        assert!(blocks.qlp.norm() < 1e-14);
    }
}

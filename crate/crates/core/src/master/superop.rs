use nalgebra::{DMatrix, DVector};

use crate::dynamics::{window_hamiltonian, LocalHamiltonian};
use crate::lattice::Window;
use crate::{Error, Result, C64, DEFAULT_DENSE_CAP};

/// `A ↦ [H, A]` on window operators, in the matrix-unit basis with
/// column-stacking `vec`.
#[derive(Clone, Debug)]
pub struct Superoperator {
    pub matrix: DMatrix<C64>,
    /// Hilbert dimension `D` of the window; the matrix is `D² × D²`.
    pub window_dim: usize,
}

impl Superoperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, a: &DMatrix<C64>) -> DMatrix<C64> {
        unvectorize(&(&self.matrix * vectorize(a)), self.window_dim)
    }
}

/// Column-stacking `vec(A)`.
pub fn vectorize(a: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_column_slice(a.as_slice())
}

pub fn unvectorize(v: &DVector<C64>, dim: usize) -> DMatrix<C64> {
    DMatrix::from_column_slice(dim, dim, v.as_slice())
}

/// `L = 1 ⊗ H − Hᵀ ⊗ 1` for a dense Hamiltonian.
pub fn superoperator_from_hamiltonian(h: &DMatrix<C64>) -> Superoperator {
    let d = h.nrows();
    let id = DMatrix::<C64>::identity(d, d);
    Superoperator { matrix: id.kronecker(h) - h.transpose().kronecker(&id), window_dim: d }
}

pub fn build_superoperator<H: LocalHamiltonian + ?Sized>(h: &H, window: &Window) -> Result<Superoperator> {
    build_superoperator_capped(h, window, DEFAULT_DENSE_CAP)
}

/// Fails with [`Error::CapExceeded`] when `D² > cap`.
pub fn build_superoperator_capped<H: LocalHamiltonian + ?Sized>(
    h: &H,
    window: &Window,
    cap: usize,
) -> Result<Superoperator> {
    let dim = window
        .hilbert_dim(h.site_dim())
        .and_then(|d| d.checked_mul(d))
        .ok_or(Error::CapExceeded { dim: usize::MAX, cap })?;
    if dim > cap {
        return Err(Error::CapExceeded { dim, cap });
    }
    Ok(superoperator_from_hamiltonian(&window_hamiltonian(h, window)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, HermitianEigen};

    #[test]
    fn matches_commutator() {
        let h = DMatrix::from_fn(3, 3, |i, j| C64::new((i + 2 * j) as f64, i as f64 - j as f64));
        let h = &h + h.adjoint();
        let a = DMatrix::from_fn(3, 3, |i, j| C64::new(i as f64 * 0.3, j as f64 - 1.0));
        let l = superoperator_from_hamiltonian(&h);
        assert!(max_abs_diff(&l.apply(&a), &(&h * &a - &a * &h)) < 1e-12);
    }

    #[test]
    fn single_mode_spectrum() {
        let omega = 1.7;
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![C64::from(0.0), C64::from(omega)]));
        let l = superoperator_from_hamiltonian(&h);
        let values = HermitianEigen::new(&l.matrix).unwrap().values;
        let want = [-omega, 0.0, 0.0, omega];
        for (v, w) in values.iter().zip(want) {
            assert!((v - w).abs() < 1e-14);
        }
    }
}

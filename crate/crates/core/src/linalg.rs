//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result, C64};

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

/// `Tr(a† b)`.
pub fn hs_inner(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn hs_norm(a: &DMatrix<C64>) -> f64 {
    a.norm()
}

pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Frobenius norm of `a - a†`.
pub fn hermiticity_defect(a: &DMatrix<C64>) -> f64 {
    (a - a.adjoint()).norm()
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<C64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<C64>,
}

impl HermitianEigen {
    pub fn new(m: &DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Eigen(format!("non-square {}x{}", m.nrows(), m.ncols())));
        }
        if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Eigen("non-finite entries".into()));
        }
        let n = m.nrows();
        if n == 0 {
            return Ok(HermitianEigen { values: DVector::zeros(0), vectors: DMatrix::zeros(0, 0) });
        }
        // symmetrize so roundoff in the input does not leak into the solver
        let sym = (m + m.adjoint()) * C64::from(0.5);
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut vectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Ok(HermitianEigen { values, vectors })
    }

    /// `V f(Λ) V†` for a complex-valued spectral function.
    pub fn apply_fn(&self, f: impl Fn(f64) -> C64) -> DMatrix<C64> {
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let fj = f(lambda);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= fj;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// `exp(-i H t)`.
    pub fn propagator(&self, t: f64) -> DMatrix<C64> {
        self.apply_fn(|e| C64::new(0.0, -e * t).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_reconstructs() {
        let m = DMatrix::from_fn(4, 4, |i, j| C64::new((i + j) as f64, i as f64 - j as f64));
        let eig = HermitianEigen::new(&m).unwrap();
        let back = eig.apply_fn(C64::from);
        assert!(max_abs_diff(&back, &m) < 1e-12);
        assert!(eig.values.iter().zip(eig.values.iter().skip(1)).all(|(a, b)| a <= b));
    }

    #[test]
    fn propagator_is_unitary() {
        let m = DMatrix::from_fn(5, 5, |i, j| C64::new(1.0 / (1 + i + j) as f64, 0.0));
        let u = HermitianEigen::new(&m).unwrap().propagator(3.7);
        let id = DMatrix::<C64>::identity(5, 5);
        assert!(max_abs_diff(&(u.adjoint() * &u), &id) < 1e-13);
    }

    #[test]
    fn hs_inner_matches_trace() {
        let a = DMatrix::from_fn(3, 3, |i, j| C64::new(i as f64, j as f64));
        let b = DMatrix::from_fn(3, 3, |i, j| C64::new(j as f64 - 1.0, (i * j) as f64));
        let tr = (a.adjoint() * &b).trace();
        assert!((hs_inner(&a, &b) - tr).norm() < 1e-13);
    }
}

//! Positive linear functionals on the operator algebra: vector states of a
//! sector and finite mixtures of them.

use crate::algebra::QuasiLocalOperator;
use crate::state::{apply, inner_product, LocalVector};
use crate::{Error, Result, C64};

/// `A ↦ (v, A v)` for one sector vector `v`.
#[derive(Clone, Debug)]
pub struct PureStateFunctional {
    vector: LocalVector,
}

impl PureStateFunctional {
    pub fn new(vector: LocalVector) -> Self {
        PureStateFunctional { vector }
    }

    pub fn vector(&self) -> &LocalVector {
        &self.vector
    }

    pub fn norm_squared(&self) -> f64 {
        inner_product(&self.vector, &self.vector).expect("own sector").re
    }

    pub fn evaluate(&self, a: &QuasiLocalOperator) -> Result<C64> {
        inner_product(&self.vector, &apply(a, &self.vector)?)
    }

    pub fn expectation(&self, a: &QuasiLocalOperator) -> Result<C64> {
        let n2 = self.norm_squared();
        if !(n2 > 0.0) {
            return Err(Error::ZeroVector);
        }
        Ok(self.evaluate(a)? / n2)
    }
}

/// `Σ_α f_α ξ_α`, each component evaluated inside its own sector.
#[derive(Clone, Debug)]
pub struct MixedState {
    components: Vec<(f64, PureStateFunctional)>,
}

impl MixedState {
    pub fn new(components: Vec<(f64, PureStateFunctional)>) -> Result<Self> {
        if components.iter().any(|(f, _)| !(f.is_finite() && *f >= 0.0)) {
            return Err(Error::InvalidParameter("mixture weights must be finite and non-negative".into()));
        }
        Ok(MixedState { components })
    }

    pub fn components(&self) -> &[(f64, PureStateFunctional)] {
        &self.components
    }

    pub fn evaluate(&self, a: &QuasiLocalOperator) -> Result<C64> {
        self.components.iter().map(|(f, xi)| Ok(xi.evaluate(a)? * *f)).sum()
    }

    /// Divides by `Σ f_α ‖v_α‖²`; weights need not sum to one.
    pub fn expectation(&self, a: &QuasiLocalOperator) -> Result<C64> {
        let total: f64 = self.components.iter().map(|(f, xi)| f * xi.norm_squared()).sum();
        if !(total > 0.0) {
            return Err(Error::ZeroVector);
        }
        Ok(self.evaluate(a)? / total)
    }
}

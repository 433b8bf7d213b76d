#![allow(dead_code)]

use std::collections::BTreeMap;

use gns_lattice::algebra::QuasiLocalOperator;
use gns_lattice::state::LocalVector;
use gns_lattice::{GridIndex, Window, C64};
use nalgebra::{DMatrix, DVector};

/// Kronecker product written out by index arithmetic, independent of
/// nalgebra's `kronecker`.
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |r, c| a[(r / br, c / bc)] * b[(r % br, c % bc)])
}

pub fn kron_vec(a: &DVector<C64>, b: &DVector<C64>) -> DVector<C64> {
    DVector::from_fn(a.len() * b.len(), |r, _| a[r / b.len()] * b[r % b.len()])
}

/// Dense oracle for a quasi-local operator: term by term, site by site.
pub fn dense_operator(a: &QuasiLocalOperator, window: &Window) -> DMatrix<C64> {
    let d = a.site_dim();
    let dim = d.pow(window.len() as u32);
    let mut total = DMatrix::zeros(dim, dim);
    for (c, p) in a.terms() {
        let mut m = DMatrix::from_element(1, 1, *c);
        for s in window.sites() {
            let f = p.factor(s).map(|f| f.matrix.clone()).unwrap_or_else(|| DMatrix::identity(d, d));
            m = kron(&m, &f);
        }
        total += m;
    }
    total
}

/// Dense oracle for a sector vector on a window containing its overrides.
pub fn dense_vector(v: &LocalVector, window: &Window) -> DVector<C64> {
    let dim = v.site_dim().pow(window.len() as u32);
    let mut total = DVector::zeros(dim);
    for (c, o) in v.terms() {
        let mut x = DVector::from_element(1, *c);
        for s in window.sites() {
            let st = o.get(s).unwrap_or_else(|| v.background().site(s));
            x = kron_vec(&x, &st.amplitudes);
        }
        total += x;
    }
    total
}

pub fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn site_op(site: i64, m: DMatrix<C64>) -> BTreeMap<GridIndex, DMatrix<C64>> {
    BTreeMap::from([(GridIndex::line(site), m)])
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

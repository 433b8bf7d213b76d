//! Grid sites, the truncated single-site Fock space and its operators.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type C64 = nalgebra::Complex<f64>;

/// Lattice coordinates of a grid point. Unused coordinates are zero.
///
/// Ordering is lexicographic on `(i1, i2, i3)`, which is also the order in
/// which windows lay out sites in dense Kronecker products.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridIndex(pub [i64; 3]);

impl GridIndex {
    pub const ORIGIN: GridIndex = GridIndex([0, 0, 0]);

    pub fn new(i1: i64, i2: i64, i3: i64) -> Self {
        GridIndex([i1, i2, i3])
    }

    /// Site `i` on the first axis.
    pub fn line(i: i64) -> Self {
        GridIndex([i, 0, 0])
    }

    pub fn coords(&self) -> [i64; 3] {
        self.0
    }

    /// `self + delta * e_axis`.
    pub fn shifted(&self, axis: usize, delta: i64) -> Self {
        let mut c = self.0;
        c[axis] += delta;
        GridIndex(c)
    }

    pub fn sup_distance(&self, other: &GridIndex) -> i64 {
        (0..3).map(|k| (self.0[k] - other.0[k]).abs()).max().unwrap_or(0)
    }

    pub fn squared_distance(&self, other: &GridIndex) -> i64 {
        (0..3).map(|k| (self.0[k] - other.0[k]).pow(2)).sum()
    }
}

impl fmt::Debug for GridIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.0[0], self.0[1], self.0[2])
    }
}

/// Per-site truncation of the bosonic Fock space plus the lattice scales.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockTruncation {
    pub n_max: usize,
    pub dx: f64,
    pub mass: f64,
}

impl FockTruncation {
    pub fn new(n_max: usize) -> Result<Self> {
        Self::with_scales(n_max, 1.0, 1.0)
    }

    pub fn with_scales(n_max: usize, dx: f64, mass: f64) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidTruncation("n_max must be at least 1".into()));
        }
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::InvalidTruncation(format!("grid spacing must be positive, got {dx}")));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidTruncation(format!("mass must be positive, got {mass}")));
        }
        Ok(FockTruncation { n_max, dx, mass })
    }

    /// Dimension of the single-site space, `n_max + 1`.
    pub fn site_dim(&self) -> usize {
        self.n_max + 1
    }

    /// `dx^{3/2}`, the factor between the field operator and the dimensionless
    /// annihilator: `psi(I) = dx^{3/2} a`.
    pub fn field_scale(&self) -> f64 {
        self.dx.powf(1.5)
    }

    /// `dx^3`, the cell volume.
    pub fn cell_volume(&self) -> f64 {
        self.dx.powi(3)
    }
}

/// Amplitudes of a single-site state in the number basis. Not necessarily
/// normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteState {
    pub amplitudes: DVector<C64>,
}

impl SiteState {
    pub fn new(amplitudes: DVector<C64>) -> Self {
        SiteState { amplitudes }
    }

    pub fn from_slice(amps: &[C64]) -> Self {
        SiteState { amplitudes: DVector::from_column_slice(amps) }
    }

    /// Number-basis vector `|n>`.
    pub fn number(trunc: &FockTruncation, n: usize) -> Result<Self> {
        if n > trunc.n_max {
            return Err(Error::OccupationOutOfRange { n, n_max: trunc.n_max });
        }
        let mut v = DVector::zeros(trunc.site_dim());
        v[n] = C64::new(1.0, 0.0);
        Ok(SiteState { amplitudes: v })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.amplitudes.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scaled(&self, c: C64) -> SiteState {
        SiteState { amplitudes: &self.amplitudes * c }
    }

    pub fn normalized(&self) -> Option<SiteState> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| SiteState { amplitudes: &self.amplitudes / C64::from(n) })
    }

    /// Representative with the first non-negligible amplitude real and
    /// positive, and unit norm. Used for sector labels.
    pub fn phase_fixed(&self) -> SiteState {
        let mut v = self.amplitudes.clone();
        let n = v.norm();
        if n > 0.0 {
            v /= C64::from(n);
        }
        if let Some(first) = v.iter().find(|z| z.norm() > 1e-12).copied() {
            let phase = first / C64::from(first.norm());
            v /= phase;
        }
        SiteState { amplitudes: v }
    }

    pub fn approx_eq(&self, other: &SiteState, tol: f64) -> bool {
        self.dim() == other.dim()
            && self.amplitudes.iter().zip(other.amplitudes.iter()).all(|(a, b)| (a - b).norm() <= tol)
    }
}

/// An operator on a single site in the number basis.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteOperator {
    pub matrix: DMatrix<C64>,
}

impl SiteOperator {
    pub fn new(matrix: DMatrix<C64>) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols(), "site operators are square");
        SiteOperator { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        SiteOperator { matrix: DMatrix::identity(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> SiteOperator {
        SiteOperator { matrix: self.matrix.adjoint() }
    }

    pub fn compose(&self, rhs: &SiteOperator) -> SiteOperator {
        SiteOperator { matrix: &self.matrix * &rhs.matrix }
    }

    pub fn apply(&self, state: &SiteState) -> SiteState {
        SiteState { amplitudes: &self.matrix * &state.amplitudes }
    }

    pub fn scaled(&self, c: C64) -> SiteOperator {
        SiteOperator { matrix: &self.matrix * c }
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        let d = self.dim();
        (0..d).all(|i| {
            (0..d).all(|j| {
                let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                (self.matrix[(i, j)] - target).norm() <= tol
            })
        })
    }
}

/// The annihilator `a` and creator `a_dag` on the truncated site space.
///
/// `a|n> = sqrt(n)|n-1>`, `a_dag|n> = sqrt(n+1)|n+1>` with `a_dag|n_max> = 0`.
pub fn ladder_ops(trunc: &FockTruncation) -> (SiteOperator, SiteOperator) {
    let d = trunc.site_dim();
    let mut a = DMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let a_dag = a.adjoint();
    (SiteOperator { matrix: a }, SiteOperator { matrix: a_dag })
}

/// `a_dag a = diag(0, 1, ..., n_max)`.
pub fn number_operator(trunc: &FockTruncation) -> SiteOperator {
    let d = trunc.site_dim();
    SiteOperator {
        matrix: DMatrix::from_fn(d, d, |i, j| if i == j { C64::new(i as f64, 0.0) } else { C64::new(0.0, 0.0) }),
    }
}

/// Number-basis state `|n>`.
pub fn number_basis_state(trunc: &FockTruncation, n: usize) -> Result<SiteState> {
    SiteState::number(trunc, n)
}

/// `<lhs|rhs>`, conjugate-linear in the first argument.
pub fn site_inner(lhs: &SiteState, rhs: &SiteState) -> C64 {
    lhs.amplitudes.dotc(&rhs.amplitudes)
}

/// Entrywise complex conjugation in the number basis.
pub trait Conjugate {
    fn conjugate(&self) -> Self;
}

impl Conjugate for SiteState {
    fn conjugate(&self) -> Self {
        SiteState { amplitudes: self.amplitudes.map(|z| z.conj()) }
    }
}

impl Conjugate for SiteOperator {
    fn conjugate(&self) -> Self {
        SiteOperator { matrix: self.matrix.map(|z| z.conj()) }
    }
}

/// A finite box of grid points, stored in lexicographic order.
///
/// Dense window matrices take the first site as the most significant tensor
/// factor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Window {
    lo: GridIndex,
    hi: GridIndex,
    sites: Vec<GridIndex>,
}

impl Window {
    /// All sites with `lo <= I <= hi` coordinatewise.
    pub fn new_box(lo: GridIndex, hi: GridIndex) -> Result<Self> {
        if (0..3).any(|k| lo.0[k] > hi.0[k]) {
            return Err(Error::InvalidParameter(format!("empty window {lo:?}..{hi:?}")));
        }
        let mut sites = Vec::new();
        for i1 in lo.0[0]..=hi.0[0] {
            for i2 in lo.0[1]..=hi.0[1] {
                for i3 in lo.0[2]..=hi.0[2] {
                    sites.push(GridIndex([i1, i2, i3]));
                }
            }
        }
        Ok(Window { lo, hi, sites })
    }

    /// `len` consecutive sites `0..len` on the first axis.
    pub fn chain(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidParameter("window needs at least one site".into()));
        }
        Self::new_box(GridIndex::ORIGIN, GridIndex::line(len as i64 - 1))
    }

    /// The box `[-radius, radius]^dimension` around the origin.
    pub fn centered(dimension: usize, radius: i64) -> Result<Self> {
        let mut lo = [0; 3];
        let mut hi = [0; 3];
        for k in 0..dimension.min(3) {
            lo[k] = -radius;
            hi[k] = radius;
        }
        Self::new_box(GridIndex(lo), GridIndex(hi))
    }

    pub fn sites(&self) -> &[GridIndex] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn bounds(&self) -> (GridIndex, GridIndex) {
        (self.lo, self.hi)
    }

    pub fn contains(&self, site: &GridIndex) -> bool {
        (0..3).all(|k| self.lo.0[k] <= site.0[k] && site.0[k] <= self.hi.0[k])
    }

    /// Tensor-factor position of `site`.
    pub fn position(&self, site: &GridIndex) -> Option<usize> {
        self.sites.binary_search(site).ok()
    }

    /// Dense Hilbert dimension `site_dim^len`, or `None` on overflow.
    pub fn hilbert_dim(&self, site_dim: usize) -> Option<usize> {
        let mut dim: usize = 1;
        for _ in 0..self.len() {
            dim = dim.checked_mul(site_dim)?;
        }
        Some(dim)
    }

    /// Box grown by `radius` along the first `dimension` axes.
    pub fn dilated(&self, dimension: usize, radius: i64) -> Window {
        let mut lo = self.lo.0;
        let mut hi = self.hi.0;
        for k in 0..dimension.min(3) {
            lo[k] -= radius;
            hi[k] += radius;
        }
        Window::new_box(GridIndex(lo), GridIndex(hi)).expect("dilation of a valid box is valid")
    }

    /// Sites on a face of the box along one of the first `dimension` axes.
    pub fn boundary_sites(&self, dimension: usize) -> Vec<GridIndex> {
        self.sites
            .iter()
            .copied()
            .filter(|s| (0..dimension.min(3)).any(|k| s.0[k] == self.lo.0[k] || s.0[k] == self.hi.0[k]))
            .collect()
    }
}

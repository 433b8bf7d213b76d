//! The *-algebra of quasi-local operators.
//!
//! An element is a finite linear combination of product operators, each of
//! which carries a non-identity site operator at finitely many grid points
//! and the identity everywhere else. Products act sitewise on the union of
//! supports; sums are formal term lists, canonicalized after every operation.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;

use crate::lattice::{Conjugate, GridIndex, SiteOperator, Window};
use crate::{Error, Result, C64, DEFAULT_DENSE_CAP, PRUNE_THRESHOLD};

/// Entry tolerance when comparing normalized site factors for merging.
const FACTOR_TOL: f64 = 1e-14;

/// Site operators at finitely many sites, identity elsewhere.
///
/// In canonical form no stored factor is the identity and every factor is
/// scaled so that its pivot entry (the first entry of at least half the
/// maximal magnitude, row-major) equals one.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductOperator {
    factors: BTreeMap<GridIndex, SiteOperator>,
}

impl ProductOperator {
    pub fn identity() -> Self {
        ProductOperator { factors: BTreeMap::new() }
    }

    /// Product with exactly these factors. Canonical form is restored once
    /// the product enters a [`QuasiLocalOperator`].
    pub fn from_factors(factors: BTreeMap<GridIndex, SiteOperator>) -> Self {
        ProductOperator { factors }
    }

    pub fn factors(&self) -> &BTreeMap<GridIndex, SiteOperator> {
        &self.factors
    }

    pub fn factor(&self, site: &GridIndex) -> Option<&SiteOperator> {
        self.factors.get(site)
    }

    pub fn support(&self) -> impl Iterator<Item = &GridIndex> {
        self.factors.keys()
    }

    fn compose(&self, rhs: &ProductOperator) -> ProductOperator {
        let mut factors = self.factors.clone();
        for (site, op) in &rhs.factors {
            match factors.get_mut(site) {
                Some(lhs) => *lhs = lhs.compose(op),
                None => {
                    factors.insert(*site, op.clone());
                }
            }
        }
        ProductOperator { factors }
    }

    fn adjoint(&self) -> ProductOperator {
        ProductOperator { factors: self.factors.iter().map(|(s, op)| (*s, op.adjoint())).collect() }
    }
}

/// Scales `op` so its pivot is one. Returns the removed scale, or `None` for
/// a zero operator.
fn normalize_factor(op: &mut SiteOperator) -> Option<C64> {
    let max = op.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(max > f64::MIN_POSITIVE) {
        return None;
    }
    let d = op.dim();
    let pivot = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| op.matrix[(i, j)])
        .find(|z| z.norm() >= 0.5 * max)
        .expect("max entry exists");
    op.matrix /= pivot;
    Some(pivot)
}

fn factors_close(a: &SiteOperator, b: &SiteOperator) -> bool {
    a.matrix.iter().zip(b.matrix.iter()).all(|(x, y)| (x - y).norm() <= FACTOR_TOL)
}

/// A finite sum `Σ c_k P_k` of product operators.
#[derive(Clone, Debug)]
pub struct QuasiLocalOperator {
    site_dim: usize,
    terms: Vec<(C64, ProductOperator)>,
}

impl QuasiLocalOperator {
    pub fn zero(site_dim: usize) -> Self {
        QuasiLocalOperator { site_dim, terms: Vec::new() }
    }

    pub fn identity(site_dim: usize) -> Self {
        QuasiLocalOperator { site_dim, terms: vec![(C64::new(1.0, 0.0), ProductOperator::identity())] }
    }

    /// `op` at `site`, identity elsewhere.
    pub fn site(site: GridIndex, op: SiteOperator) -> Self {
        let site_dim = op.dim();
        Self::product(site_dim, C64::new(1.0, 0.0), [(site, op)])
    }

    /// `coeff · Π op_I`. Repeated sites are composed left to right.
    pub fn product(site_dim: usize, coeff: C64, factors: impl IntoIterator<Item = (GridIndex, SiteOperator)>) -> Self {
        let mut p = ProductOperator::identity();
        for (site, op) in factors {
            assert_eq!(op.dim(), site_dim, "site operator dimension");
            p = p.compose(&ProductOperator { factors: BTreeMap::from([(site, op)]) });
        }
        Self::from_terms(site_dim, vec![(coeff, p)])
    }

    pub fn from_terms(site_dim: usize, terms: Vec<(C64, ProductOperator)>) -> Self {
        let mut op = QuasiLocalOperator { site_dim, terms };
        op.canonicalize();
        op
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn terms(&self) -> &[(C64, ProductOperator)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn support(&self) -> BTreeSet<GridIndex> {
        self.terms.iter().flat_map(|(_, p)| p.support().copied()).collect()
    }

    fn check_dim(&self, other: &QuasiLocalOperator) -> Result<()> {
        if self.site_dim != other.site_dim {
            return Err(Error::TruncationMismatch { left: self.site_dim, right: other.site_dim });
        }
        Ok(())
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::from_terms(self.site_dim, self.terms.iter().map(|(k, p)| (k * c, p.clone())).collect())
    }

    pub fn add(&self, other: &QuasiLocalOperator) -> Result<Self> {
        self.check_dim(other)?;
        let terms = self.terms.iter().chain(other.terms.iter()).cloned().collect();
        Ok(Self::from_terms(self.site_dim, terms))
    }

    pub fn sub(&self, other: &QuasiLocalOperator) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Sitewise product on the union of supports, extended bilinearly.
    pub fn multiply(&self, other: &QuasiLocalOperator) -> Result<Self> {
        self.check_dim(other)?;
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ca, pa) in &self.terms {
            for (cb, pb) in &other.terms {
                terms.push((ca * cb, pa.compose(pb)));
            }
        }
        Ok(Self::from_terms(self.site_dim, terms))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_terms(self.site_dim, self.terms.iter().map(|(c, p)| (c.conj(), p.adjoint())).collect())
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &QuasiLocalOperator) -> Result<Self> {
        self.multiply(other)?.sub(&other.multiply(self)?)
    }

    /// Terms whose support lies inside `window`.
    pub fn restricted_to(&self, window: &Window) -> Self {
        let terms = self.terms.iter().filter(|(_, p)| p.support().all(|s| window.contains(s))).cloned().collect();
        QuasiLocalOperator { site_dim: self.site_dim, terms }
    }

    /// Dense matrix on `window` with the default dimension cap.
    pub fn embed_dense(&self, window: &Window) -> Result<DMatrix<C64>> {
        self.embed_dense_capped(window, DEFAULT_DENSE_CAP)
    }

    pub fn embed_dense_capped(&self, window: &Window, cap: usize) -> Result<DMatrix<C64>> {
        let dim = dense_dim(window, self.site_dim, cap)?;
        if let Some(out) = self.support().into_iter().find(|s| !window.contains(s)) {
            return Err(Error::WindowTooSmall(out));
        }
        let identity = DMatrix::<C64>::identity(self.site_dim, self.site_dim);
        let mut total = DMatrix::<C64>::zeros(dim, dim);
        for (c, p) in &self.terms {
            let mut m = DMatrix::from_element(1, 1, *c);
            for site in window.sites() {
                let f = p.factor(site).map(|op| &op.matrix).unwrap_or(&identity);
                m = m.kronecker(f);
            }
            total += m;
        }
        Ok(total)
    }

    /// Inverse of [`embed_dense`](Self::embed_dense): expands a window matrix
    /// in the site basis `{1} ∪ {|m><n| : (m, n) != (0, 0)}`, so that sites
    /// on which the matrix acts trivially drop out of the support.
    pub fn from_dense(matrix: &DMatrix<C64>, window: &Window, site_dim: usize) -> Result<Self> {
        let w = window.len();
        let dim = window.hilbert_dim(site_dim).ok_or(Error::CapExceeded { dim: usize::MAX, cap: DEFAULT_DENSE_CAP })?;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::InvalidParameter(format!(
                "matrix is {}x{}, window needs {dim}x{dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let d = site_dim;
        let d2 = d * d;
        let total = d2.pow(w as u32);
        // coefficient tensor indexed by per-site labels p_k = r_k*d + c_k, site 0 most significant
        let mut coef = vec![C64::new(0.0, 0.0); total];
        for r in 0..dim {
            for c in 0..dim {
                let (mut rr, mut cc, mut label, mut stride) = (r, c, 0usize, 1usize);
                for _ in 0..w {
                    label += ((rr % d) * d + cc % d) * stride;
                    rr /= d;
                    cc /= d;
                    stride *= d2;
                }
                coef[label] = matrix[(r, c)];
            }
        }
        for k in 0..w {
            let stride = d2.pow((w - 1 - k) as u32);
            for p in 0..total {
                if !(p / stride).is_multiple_of(d2) {
                    continue;
                }
                let base = coef[p];
                for m in 1..d {
                    coef[p + (m * d + m) * stride] -= base;
                }
            }
        }
        let identity = C64::new(1.0, 0.0);
        let mut terms = Vec::new();
        for (p, &c) in coef.iter().enumerate() {
            if c.norm() <= PRUNE_THRESHOLD {
                continue;
            }
            let mut factors = BTreeMap::new();
            for (k, site) in window.sites().iter().enumerate() {
                let label = (p / d2.pow((w - 1 - k) as u32)) % d2;
                if label != 0 {
                    let mut unit = DMatrix::zeros(d, d);
                    unit[(label / d, label % d)] = identity;
                    factors.insert(*site, SiteOperator::new(unit));
                }
            }
            terms.push((c, ProductOperator { factors }));
        }
        Ok(Self::from_terms(site_dim, terms))
    }

    fn canonicalize(&mut self) {
        loop {
            let mut groups: BTreeMap<Vec<GridIndex>, Vec<(C64, ProductOperator)>> = BTreeMap::new();
            for (c, p) in std::mem::take(&mut self.terms) {
                if let Some((c, p)) = normalize_term(c, p) {
                    let key: Vec<GridIndex> = p.support().copied().collect();
                    groups.entry(key).or_default().push((c, p));
                }
            }
            let mut support_changed = false;
            for (key, group) in groups {
                for (c, p) in merge_group(group) {
                    if c.norm() <= PRUNE_THRESHOLD {
                        continue;
                    }
                    match normalize_term(c, p) {
                        Some((c, p)) => {
                            support_changed |= p.factors.len() != key.len();
                            self.terms.push((c, p));
                        }
                        None => continue,
                    }
                }
            }
            if !support_changed {
                return;
            }
        }
    }
}

fn normalize_term(mut c: C64, p: ProductOperator) -> Option<(C64, ProductOperator)> {
    if c.norm() <= PRUNE_THRESHOLD {
        return None;
    }
    let mut factors = BTreeMap::new();
    for (site, mut op) in p.factors {
        let scale = normalize_factor(&mut op)?;
        c *= scale;
        if !op.is_identity(FACTOR_TOL) {
            factors.insert(site, op);
        }
    }
    (c.norm() > PRUNE_THRESHOLD).then_some((c, ProductOperator { factors }))
}

/// Sites (within one shared support) where the two products differ, or
/// `None` if there are two or more.
fn single_difference(a: &ProductOperator, b: &ProductOperator) -> Option<Option<GridIndex>> {
    let mut diff = None;
    for ((site, fa), fb) in a.factors.iter().zip(b.factors.values()) {
        if !factors_close(fa, fb) {
            if diff.is_some() {
                return None;
            }
            diff = Some(*site);
        }
    }
    Some(diff)
}

/// Merges terms of equal support that differ at no more than one site:
/// `c A⊗X + d A⊗Y = A⊗(cX + dY)`.
fn merge_group(mut group: Vec<(C64, ProductOperator)>) -> Vec<(C64, ProductOperator)> {
    loop {
        let before = group.len();
        let mut merged: Vec<(C64, ProductOperator)> = Vec::with_capacity(group.len());
        'next: for (c, p) in group {
            for (mc, mp) in merged.iter_mut() {
                match single_difference(mp, &p) {
                    Some(None) => {
                        *mc += c;
                        continue 'next;
                    }
                    Some(Some(site)) => {
                        let lhs = &mp.factors[&site].matrix * *mc;
                        let rhs = &p.factors[&site].matrix * c;
                        mp.factors.insert(site, SiteOperator::new(lhs + rhs));
                        *mc = C64::new(1.0, 0.0);
                        continue 'next;
                    }
                    None => {}
                }
            }
            merged.push((c, p));
        }
        // a merge can rescale a factor, so renormalize before the next pass
        group = merged
            .into_iter()
            .filter_map(|(c, p)| {
                let mut factors = BTreeMap::new();
                let mut c = c;
                for (site, mut op) in p.factors {
                    match normalize_factor(&mut op) {
                        Some(s) => c *= s,
                        None => return None,
                    }
                    factors.insert(site, op);
                }
                Some((c, ProductOperator { factors }))
            })
            .collect();
        if group.len() == before {
            return group;
        }
    }
}

fn dense_dim(window: &Window, site_dim: usize, cap: usize) -> Result<usize> {
    match window.hilbert_dim(site_dim) {
        Some(dim) if dim <= cap => Ok(dim),
        Some(dim) => Err(Error::CapExceeded { dim, cap }),
        None => Err(Error::CapExceeded { dim: usize::MAX, cap }),
    }
}

impl Conjugate for QuasiLocalOperator {
    fn conjugate(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(c, p)| {
                (c.conj(), ProductOperator { factors: p.factors.iter().map(|(s, op)| (*s, op.conjugate())).collect() })
            })
            .collect();
        Self::from_terms(self.site_dim, terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{ladder_ops, FockTruncation};
    use crate::linalg::max_abs_diff;
    use crate::sampling;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line(i: i64) -> GridIndex {
        GridIndex::line(i)
    }

    fn one() -> C64 {
        C64::new(1.0, 0.0)
    }

    #[test]
    fn identity_factors_are_dropped() {
        let e = QuasiLocalOperator::site(line(3), SiteOperator::identity(3).scaled(C64::new(2.0, 0.0)));
        assert_eq!(e.terms().len(), 1);
        assert!(e.support().is_empty());
        assert!((e.terms()[0].0 - C64::new(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn add_zero_is_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = Window::chain(2).unwrap();
        let a = sampling::random_operator(&mut rng, 3, w.sites(), 2);
        let s = a.add(&QuasiLocalOperator::zero(3)).unwrap();
        assert!(max_abs_diff(&s.embed_dense(&w).unwrap(), &a.embed_dense(&w).unwrap()) < 1e-13);
    }

    #[test]
    fn same_site_sum_collapses_to_single_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = sampling::random_site_operator(&mut rng, 3);
        let y = sampling::random_site_operator(&mut rng, 3);
        let a = QuasiLocalOperator::site(line(0), x.clone());
        let b = QuasiLocalOperator::site(line(0), y.clone());
        let sum = a.add(&b).unwrap();
        assert_eq!(sum.terms().len(), 1);
        // 2 · {(A + B)/2}
        let product_form = QuasiLocalOperator::site(line(0), SiteOperator::new((&x.matrix + &y.matrix) * C64::from(0.5)))
            .scale(C64::new(2.0, 0.0));
        let w = Window::chain(1).unwrap();
        assert!(max_abs_diff(&sum.embed_dense(&w).unwrap(), &product_form.embed_dense(&w).unwrap()) < 1e-14);
    }

    #[test]
    fn identity_is_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = Window::chain(2).unwrap();
        let a = sampling::random_operator(&mut rng, 2, w.sites(), 3);
        let e = QuasiLocalOperator::identity(2);
        let ea = e.multiply(&a).unwrap();
        assert!(max_abs_diff(&ea.embed_dense(&w).unwrap(), &a.embed_dense(&w).unwrap()) < 1e-14);
        let ident = e.embed_dense(&w).unwrap();
        assert!(max_abs_diff(&ident, &DMatrix::identity(4, 4)) < 1e-15);
        assert!(max_abs_diff(&e.adjoint().embed_dense(&w).unwrap(), &ident) < 1e-15);
    }

    #[test]
    fn distinct_site_fields_commute() {
        let t = FockTruncation::new(2).unwrap();
        let (a, _) = ladder_ops(&t);
        let p0 = QuasiLocalOperator::site(line(0), a.clone());
        let p1 = QuasiLocalOperator::site(line(1), a);
        assert!(p0.commutator(&p1).unwrap().is_zero());
    }

    #[test]
    fn adjoint_of_field_is_creator() {
        let t = FockTruncation::new(3).unwrap();
        let (a, a_dag) = ladder_ops(&t);
        let psi = QuasiLocalOperator::site(line(5), a);
        let w = Window::new_box(line(5), line(5)).unwrap();
        let want = QuasiLocalOperator::site(line(5), a_dag).embed_dense(&w).unwrap();
        assert!(max_abs_diff(&psi.adjoint().embed_dense(&w).unwrap(), &want) < 1e-15);
    }

    #[test]
    fn single_site_embedding_is_the_matrix() {
        let t = FockTruncation::new(2).unwrap();
        let (a, _) = ladder_ops(&t);
        let w = Window::new_box(line(-4), line(-4)).unwrap();
        let m = QuasiLocalOperator::site(line(-4), a.clone()).embed_dense(&w).unwrap();
        assert!(max_abs_diff(&m, &a.matrix) < 1e-15);
    }

    #[test]
    fn hopping_embedding_matches_kronecker() {
        let t = FockTruncation::new(2).unwrap();
        let (a, a_dag) = ladder_ops(&t);
        let hop = QuasiLocalOperator::product(3, one(), [(line(0), a_dag.clone()), (line(1), a.clone())]);
        let w = Window::chain(2).unwrap();
        let want = a_dag.matrix.kronecker(&a.matrix);
        assert!(max_abs_diff(&hop.embed_dense(&w).unwrap(), &want) < 1e-15);
    }

    #[test]
    fn embedding_errors() {
        let t = FockTruncation::new(1).unwrap();
        let (a, _) = ladder_ops(&t);
        let op = QuasiLocalOperator::site(line(7), a);
        assert!(matches!(op.embed_dense(&Window::chain(2).unwrap()), Err(Error::WindowTooSmall(_))));
        let big = Window::chain(13).unwrap();
        assert!(matches!(
            QuasiLocalOperator::identity(2).embed_dense(&big),
            Err(Error::CapExceeded { dim: 8192, cap: 4096 })
        ));
    }

    #[test]
    fn mismatched_dims_are_rejected() {
        let a = QuasiLocalOperator::identity(2);
        let b = QuasiLocalOperator::identity(3);
        assert!(matches!(a.add(&b), Err(Error::TruncationMismatch { .. })));
        assert!(matches!(a.multiply(&b), Err(Error::TruncationMismatch { .. })));
    }

    #[test]
    fn dense_round_trip_shrinks_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = Window::chain(3).unwrap();
        let a = sampling::random_operator(&mut rng, 2, &w.sites()[..2], 3);
        let back = QuasiLocalOperator::from_dense(&a.embed_dense(&w).unwrap(), &w, 2).unwrap();
        assert!(back.support().iter().all(|s| s.0[0] < 2));
        assert!(max_abs_diff(&back.embed_dense(&w).unwrap(), &a.embed_dense(&w).unwrap()) < 1e-13);
    }

    #[test]
    fn canonicalization_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = Window::chain(3).unwrap();
        let a = sampling::random_operator(&mut rng, 2, w.sites(), 6);
        let again = QuasiLocalOperator::from_terms(2, a.terms().to_vec());
        assert_eq!(again.terms().len(), a.terms().len());
        assert!(max_abs_diff(&again.embed_dense(&w).unwrap(), &a.embed_dense(&w).unwrap()) < 1e-14);
    }
}

//! Backgrounds (fully pure state vectors), their sectors, and the vectors of
//! a sector Hilbert space.
//!
//! A [`Background`] assigns a normalized site state to every grid point. A
//! [`LocalVector`] is a finite combination of product vectors that agree with
//! one background outside finitely many sites. Two backgrounds belong to the
//! same sector iff they agree (up to per-site phases) at all but finitely many
//! sites; that relation is decided at the rule level through [`SectorId`].

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use nalgebra::DVector;

use crate::algebra::QuasiLocalOperator;
use crate::lattice::{site_inner, Conjugate, GridIndex, SiteState, Window};
use crate::{Error, Result, C64, DEFAULT_DENSE_CAP, PRUNE_THRESHOLD};

const NORM_TOL: f64 = 1e-12;
const STATE_TOL: f64 = 1e-14;

/// The repeating part of a background.
#[derive(Clone, Debug, PartialEq)]
pub enum TailRule {
    Uniform(SiteState),
    /// `pattern[((i1 mod p1)·p2 + (i2 mod p2))·p3 + (i3 mod p3)]`.
    Periodic { period: [usize; 3], pattern: Vec<SiteState> },
}

impl TailRule {
    fn site(&self, site: &GridIndex) -> &SiteState {
        match self {
            TailRule::Uniform(s) => s,
            TailRule::Periodic { period, pattern } => &pattern[pattern_index(period, site)],
        }
    }

    fn states(&self) -> Vec<&SiteState> {
        match self {
            TailRule::Uniform(s) => vec![s],
            TailRule::Periodic { pattern, .. } => pattern.iter().collect(),
        }
    }

    fn map_states(&self, f: impl Fn(&SiteState) -> SiteState) -> TailRule {
        match self {
            TailRule::Uniform(s) => TailRule::Uniform(f(s)),
            TailRule::Periodic { period, pattern } => {
                TailRule::Periodic { period: *period, pattern: pattern.iter().map(f).collect() }
            }
        }
    }
}

fn pattern_index(period: &[usize; 3], site: &GridIndex) -> usize {
    let r = |k: usize| site.0[k].rem_euclid(period[k] as i64) as usize;
    (r(0) * period[1] + r(1)) * period[2] + r(2)
}

/// Which constructor a background came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleKind {
    Uniform,
    Periodic,
    Explicit,
}

/// A fully pure state vector: a normalized site state at every grid point,
/// given by a tail rule plus a finite patch of explicit sites.
#[derive(Clone, Debug, PartialEq)]
pub struct Background {
    site_dim: usize,
    tail: TailRule,
    patch: BTreeMap<GridIndex, SiteState>,
}

fn normalized(state: &SiteState, site_dim: usize) -> Result<SiteState> {
    if state.dim() != site_dim {
        return Err(Error::TruncationMismatch { left: state.dim(), right: site_dim });
    }
    if !state.is_finite() {
        return Err(Error::InvalidBackground("non-finite amplitude".into()));
    }
    state.normalized().ok_or_else(|| Error::InvalidBackground("zero site state".into()))
}

impl Background {
    pub fn uniform(state: SiteState) -> Result<Self> {
        let site_dim = state.dim();
        Ok(Background { site_dim, tail: TailRule::Uniform(normalized(&state, site_dim)?), patch: BTreeMap::new() })
    }

    pub fn periodic(period: [usize; 3], pattern: Vec<SiteState>) -> Result<Self> {
        if period.contains(&0) {
            return Err(Error::InvalidBackground("period entries must be positive".into()));
        }
        if pattern.len() != period.iter().product::<usize>() {
            return Err(Error::InvalidBackground(format!(
                "pattern has {} states, period {:?} needs {}",
                pattern.len(),
                period,
                period.iter().product::<usize>()
            )));
        }
        let site_dim = pattern[0].dim();
        let pattern = pattern.iter().map(|s| normalized(s, site_dim)).collect::<Result<Vec<_>>>()?;
        Ok(Background { site_dim, tail: TailRule::Periodic { period, pattern }, patch: BTreeMap::new() })
    }

    /// `default` everywhere except the finitely many sites in `patch`.
    pub fn explicit(default: SiteState, patch: BTreeMap<GridIndex, SiteState>) -> Result<Self> {
        Self::uniform(default)?.with_patch(patch)
    }

    /// This background with some sites replaced.
    pub fn with_patch(&self, patch: BTreeMap<GridIndex, SiteState>) -> Result<Self> {
        let mut out = self.clone();
        for (site, state) in patch {
            out.patch.insert(site, normalized(&state, self.site_dim)?);
        }
        Ok(out)
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn site(&self, site: &GridIndex) -> &SiteState {
        self.patch.get(site).unwrap_or_else(|| self.tail.site(site))
    }

    pub fn tail(&self) -> &TailRule {
        &self.tail
    }

    pub fn patch(&self) -> &BTreeMap<GridIndex, SiteState> {
        &self.patch
    }

    pub fn kind(&self) -> RuleKind {
        match (&self.tail, self.patch.is_empty()) {
            (_, false) => RuleKind::Explicit,
            (TailRule::Uniform(_), true) => RuleKind::Uniform,
            (TailRule::Periodic { .. }, true) => RuleKind::Periodic,
        }
    }

    /// Distinct site states of the tail (one per pattern slot).
    pub fn tail_states(&self) -> Vec<&SiteState> {
        self.tail.states()
    }

    pub fn sector_id(&self) -> SectorId {
        SectorId::of(self)
    }

    /// Product of `<self(I)|other(I)>` over the sup-norm box of radius
    /// `radius` in the first `dimension` axes.
    pub fn partial_overlap(&self, other: &Background, dimension: usize, radius: i64) -> Result<C64> {
        let window = Window::centered(dimension, radius)?;
        Ok(window.sites().iter().map(|s| site_inner(self.site(s), other.site(s))).product())
    }
}

impl Conjugate for Background {
    fn conjugate(&self) -> Self {
        Background {
            site_dim: self.site_dim,
            tail: self.tail.map_states(|s| s.conjugate()),
            patch: self.patch.iter().map(|(k, s)| (*k, s.conjugate())).collect(),
        }
    }
}

/// Canonical label of the sector a background generates.
///
/// The patch is discarded (finitely many sites never change the sector), the
/// tail is reduced to its minimal period, and each state gets the phase
/// convention of [`SiteState::phase_fixed`]. Equality compares amplitudes to
/// `1e-12`.
#[derive(Clone, Debug)]
pub struct SectorId {
    period: [usize; 3],
    pattern: Vec<DVector<C64>>,
}

impl SectorId {
    fn of(background: &Background) -> SectorId {
        let (mut period, mut pattern) = match &background.tail {
            TailRule::Uniform(s) => ([1, 1, 1], vec![s.phase_fixed()]),
            TailRule::Periodic { period, pattern } => (*period, pattern.iter().map(SiteState::phase_fixed).collect()),
        };
        for axis in 0..3 {
            let p = period[axis];
            let reduced = (1..p).filter(|q| p % q == 0).find(|&q| {
                all_slots(&period).all(|idx| {
                    let mut folded = idx;
                    folded.0[axis] = idx.0[axis].rem_euclid(q as i64);
                    pattern[pattern_index(&period, &idx)].approx_eq(&pattern[pattern_index(&period, &folded)], NORM_TOL)
                })
            });
            if let Some(q) = reduced {
                let mut smaller = period;
                smaller[axis] = q;
                pattern = all_slots(&smaller).map(|idx| pattern[pattern_index(&period, &idx)].clone()).collect();
                period = smaller;
            }
        }
        SectorId { period, pattern: pattern.into_iter().map(|s| s.amplitudes).collect() }
    }

    pub fn period(&self) -> [usize; 3] {
        self.period
    }
}

fn all_slots(period: &[usize; 3]) -> impl Iterator<Item = GridIndex> + '_ {
    (0..period[0] as i64).flat_map(move |a| {
        (0..period[1] as i64).flat_map(move |b| (0..period[2] as i64).map(move |c| GridIndex([a, b, c])))
    })
}

impl PartialEq for SectorId {
    fn eq(&self, other: &Self) -> bool {
        self.period == other.period
            && self.pattern.len() == other.pattern.len()
            && self
                .pattern
                .iter()
                .zip(other.pattern.iter())
                .all(|(a, b)| a.len() == b.len() && a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() <= NORM_TOL))
    }
}

/// A single product vector: the background with finitely many sites
/// replaced by (possibly non-normalized) states.
#[derive(Clone, Debug)]
pub struct PureStateVector {
    pub background: Arc<Background>,
    pub overrides: BTreeMap<GridIndex, SiteState>,
}

impl PureStateVector {
    pub fn new(background: Arc<Background>, overrides: BTreeMap<GridIndex, SiteState>) -> Self {
        PureStateVector { background, overrides }
    }

    pub fn into_local(self) -> LocalVector {
        LocalVector::from_terms(self.background, vec![(C64::new(1.0, 0.0), self.overrides)])
    }
}

pub type Overrides = BTreeMap<GridIndex, SiteState>;

/// Finite linear combination of product vectors over one background.
#[derive(Clone, Debug)]
pub struct LocalVector {
    background: Arc<Background>,
    terms: Vec<(C64, Overrides)>,
}

impl LocalVector {
    /// The background itself.
    pub fn background_vector(background: Arc<Background>) -> Self {
        LocalVector { background, terms: vec![(C64::new(1.0, 0.0), BTreeMap::new())] }
    }

    pub fn zero(background: Arc<Background>) -> Self {
        LocalVector { background, terms: Vec::new() }
    }

    pub fn from_terms(background: Arc<Background>, terms: Vec<(C64, Overrides)>) -> Self {
        let mut v = LocalVector { background, terms };
        v.canonicalize();
        v
    }

    pub fn background(&self) -> &Arc<Background> {
        &self.background
    }

    pub fn terms(&self) -> &[(C64, Overrides)] {
        &self.terms
    }

    pub fn site_dim(&self) -> usize {
        self.background.site_dim()
    }

    pub fn sector_id(&self) -> SectorId {
        self.background.sector_id()
    }

    /// Union of the override supports.
    pub fn support(&self) -> BTreeSet<GridIndex> {
        self.terms.iter().flat_map(|(_, o)| o.keys().copied()).collect()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::from_terms(self.background.clone(), self.terms.iter().map(|(k, o)| (k * c, o.clone())).collect())
    }

    /// Terms rewritten over `target`, which must be in the same sector.
    /// Sites where the two backgrounds' patches disagree become overrides.
    fn rebased_terms(&self, target: &Arc<Background>) -> Vec<(C64, Overrides)> {
        if Arc::ptr_eq(&self.background, target) || *self.background == **target {
            return self.terms.clone();
        }
        let sites: BTreeSet<GridIndex> = self.background.patch.keys().chain(target.patch.keys()).copied().collect();
        self.terms
            .iter()
            .map(|(c, o)| {
                let mut o = o.clone();
                for s in &sites {
                    o.entry(*s).or_insert_with(|| self.background.site(s).clone());
                }
                (*c, o)
            })
            .collect()
    }

    fn check_sector(&self, other: &LocalVector) -> Result<()> {
        if self.site_dim() != other.site_dim() {
            return Err(Error::TruncationMismatch { left: self.site_dim(), right: other.site_dim() });
        }
        if self.sector_id() != other.sector_id() {
            return Err(Error::SectorMismatch);
        }
        Ok(())
    }

    /// Dense window factor `Σ_k c_k ⊗_{I∈window} φ_k(I)`. All overrides must
    /// lie inside the window.
    pub fn to_dense(&self, window: &Window) -> Result<DVector<C64>> {
        let d = self.site_dim();
        let dim = match window.hilbert_dim(d) {
            Some(dim) if dim <= DEFAULT_DENSE_CAP => dim,
            other => return Err(Error::CapExceeded { dim: other.unwrap_or(usize::MAX), cap: DEFAULT_DENSE_CAP }),
        };
        if let Some(out) = self.support().into_iter().find(|s| !window.contains(s)) {
            return Err(Error::WindowTooSmall(out));
        }
        let mut total = DVector::zeros(dim);
        for (c, o) in &self.terms {
            let mut v = DVector::from_element(1, *c);
            for site in window.sites() {
                let s = o.get(site).unwrap_or_else(|| self.background.site(site));
                v = v.kronecker(&s.amplitudes);
            }
            total += v;
        }
        Ok(total)
    }

    /// Inverse of [`to_dense`](Self::to_dense) over `background`: one term per
    /// configuration of all but the last window site.
    pub fn from_dense(background: Arc<Background>, window: &Window, amplitudes: &DVector<C64>) -> Result<Self> {
        let d = background.site_dim();
        let dim = window.hilbert_dim(d).ok_or(Error::CapExceeded { dim: usize::MAX, cap: DEFAULT_DENSE_CAP })?;
        if amplitudes.len() != dim {
            return Err(Error::InvalidParameter(format!("vector length {} != window dimension {dim}", amplitudes.len())));
        }
        let w = window.len();
        let mut terms = Vec::with_capacity(dim / d);
        for prefix in 0..dim / d {
            let slice = amplitudes.rows(prefix * d, d).into_owned();
            if slice.iter().all(|z| z.norm() <= PRUNE_THRESHOLD) {
                continue;
            }
            let mut overrides = BTreeMap::new();
            let mut rest = prefix;
            for k in (0..w - 1).rev() {
                let n = rest % d;
                rest /= d;
                let mut basis = DVector::zeros(d);
                basis[n] = C64::new(1.0, 0.0);
                overrides.insert(window.sites()[k], SiteState::new(basis));
            }
            overrides.insert(window.sites()[w - 1], SiteState::new(slice));
            terms.push((C64::new(1.0, 0.0), overrides));
        }
        Ok(Self::from_terms(background, terms))
    }

    /// Drops overrides proportional to the background, normalizes override
    /// pivots into the coefficient, and merges terms with equal override
    /// support that differ at no more than one site.
    fn canonicalize(&mut self) {
        let bg = self.background.clone();
        loop {
            let mut groups: BTreeMap<Vec<GridIndex>, Vec<(C64, Overrides)>> = BTreeMap::new();
            for (c, o) in std::mem::take(&mut self.terms) {
                if let Some((c, o)) = normalize_vector_term(&bg, c, o) {
                    groups.entry(o.keys().copied().collect()).or_default().push((c, o));
                }
            }
            let mut changed = false;
            for (key, group) in groups {
                for (c, o) in merge_vector_group(group) {
                    if let Some((c, o)) = normalize_vector_term(&bg, c, o) {
                        changed |= o.len() != key.len();
                        self.terms.push((c, o));
                    }
                }
            }
            if !changed {
                return;
            }
        }
    }
}

fn normalize_vector_term(bg: &Background, mut c: C64, overrides: Overrides) -> Option<(C64, Overrides)> {
    if c.norm() <= PRUNE_THRESHOLD {
        return None;
    }
    let mut out = BTreeMap::new();
    for (site, mut s) in overrides {
        let norm = s.norm();
        if !(norm > f64::MIN_POSITIVE) {
            return None;
        }
        let reference = bg.site(&site);
        let along = site_inner(reference, &s);
        let residual = (&s.amplitudes - &reference.amplitudes * along).norm();
        if residual <= STATE_TOL * norm {
            c *= along;
            continue;
        }
        let max = s.amplitudes.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let pivot = *s.amplitudes.iter().find(|z| z.norm() >= 0.5 * max).expect("non-zero state");
        s.amplitudes /= pivot;
        c *= pivot;
        out.insert(site, s);
    }
    (c.norm() > PRUNE_THRESHOLD).then_some((c, out))
}

fn merge_vector_group(mut group: Vec<(C64, Overrides)>) -> Vec<(C64, Overrides)> {
    loop {
        let before = group.len();
        let mut merged: Vec<(C64, Overrides)> = Vec::with_capacity(group.len());
        'next: for (c, o) in group {
            for (mc, mo) in merged.iter_mut() {
                let mut diff = None;
                let mut count = 0;
                for ((site, a), b) in mo.iter().zip(o.values()) {
                    if !a.approx_eq(b, STATE_TOL) {
                        count += 1;
                        diff = Some(*site);
                        if count > 1 {
                            break;
                        }
                    }
                }
                match (count, diff) {
                    (0, _) => {
                        *mc += c;
                        continue 'next;
                    }
                    (1, Some(site)) => {
                        let sum = &mo[&site].amplitudes * *mc + &o[&site].amplitudes * c;
                        mo.insert(site, SiteState::new(sum));
                        *mc = C64::new(1.0, 0.0);
                        continue 'next;
                    }
                    _ => {}
                }
            }
            merged.push((c, o));
        }
        group = merged;
        if group.len() == before {
            return group;
        }
    }
}

impl Conjugate for LocalVector {
    fn conjugate(&self) -> Self {
        let bg = Arc::new(self.background.conjugate());
        let terms = self
            .terms
            .iter()
            .map(|(c, o)| (c.conj(), o.iter().map(|(k, s)| (*k, s.conjugate())).collect()))
            .collect();
        LocalVector::from_terms(bg, terms)
    }
}

/// `(lhs, rhs)`, conjugate-linear in `lhs`. Both vectors must share a sector.
///
/// Per pair of product vectors this is the finite product of site inner
/// products over the union of sites where either differs from the tail;
/// tail sites contribute a factor of one.
pub fn inner_product(lhs: &LocalVector, rhs: &LocalVector) -> Result<C64> {
    lhs.check_sector(rhs)?;
    let bg_l = &lhs.background;
    let bg_r = &rhs.background;
    let patch_sites: BTreeSet<GridIndex> = if Arc::ptr_eq(bg_l, bg_r) || **bg_l == **bg_r {
        BTreeSet::new()
    } else {
        bg_l.patch.keys().chain(bg_r.patch.keys()).copied().collect()
    };
    let mut total = C64::new(0.0, 0.0);
    for (cl, ol) in &lhs.terms {
        for (cr, or) in &rhs.terms {
            let mut sites: BTreeSet<&GridIndex> = ol.keys().chain(or.keys()).collect();
            sites.extend(patch_sites.iter());
            let mut prod = cl.conj() * cr;
            for s in sites {
                let a = ol.get(s).unwrap_or_else(|| bg_l.site(s));
                let b = or.get(s).unwrap_or_else(|| bg_r.site(s));
                prod *= site_inner(a, b);
            }
            total += prod;
        }
    }
    Ok(total)
}

/// Inner product that returns exactly zero across sectors: distinct sectors
/// are globally orthogonal.
pub fn global_inner_product(lhs: &LocalVector, rhs: &LocalVector) -> Result<C64> {
    match inner_product(lhs, rhs) {
        Err(Error::SectorMismatch) => Ok(C64::new(0.0, 0.0)),
        other => other,
    }
}

pub fn norm(v: &LocalVector) -> f64 {
    inner_product(v, v).map(|z| z.re.max(0.0).sqrt()).expect("a vector shares its own sector")
}

/// `c·u + d·w` as a formal sum, collapsing to a single product where the two
/// differ at one common site.
pub fn linear_combine(c: C64, u: &LocalVector, d: C64, w: &LocalVector) -> Result<LocalVector> {
    u.check_sector(w)?;
    let mut terms: Vec<(C64, Overrides)> = u.terms.iter().map(|(k, o)| (k * c, o.clone())).collect();
    terms.extend(w.rebased_terms(&u.background).into_iter().map(|(k, o)| (k * d, o)));
    Ok(LocalVector::from_terms(u.background.clone(), terms))
}

/// `A v`: every operator factor acts on the matching site of every product
/// vector. The background (and therefore the sector) is carried over as is.
pub fn apply(op: &QuasiLocalOperator, v: &LocalVector) -> Result<LocalVector> {
    if op.site_dim() != v.site_dim() {
        return Err(Error::TruncationMismatch { left: op.site_dim(), right: v.site_dim() });
    }
    let bg = &v.background;
    let mut terms = Vec::with_capacity(op.terms().len() * v.terms.len());
    for (ca, p) in op.terms() {
        for (cv, o) in &v.terms {
            let mut out = o.clone();
            for (site, f) in p.factors() {
                let current = o.get(site).unwrap_or_else(|| bg.site(site));
                out.insert(*site, f.apply(current));
            }
            terms.push((ca * cv, out));
        }
    }
    Ok(LocalVector::from_terms(bg.clone(), terms))
}

/// Whether `v` lies in the sector generated by `background`.
pub fn equivalent(v: &PureStateVector, background: &Background) -> bool {
    v.background.site_dim() == background.site_dim() && v.background.sector_id() == background.sector_id()
}

/// `Π_{|I|_∞ ≤ radius} <ρ2(I)|ρ1(I)>` over the first `dimension` axes.
pub fn cross_sector_overlap_partial(
    rho1: &Background,
    rho2: &Background,
    dimension: usize,
    radius: i64,
) -> Result<C64> {
    rho2.partial_overlap(rho1, dimension, radius)
}

/// Partial overlaps for every radius `0..=max_radius`, built shell by shell.
pub fn overlap_profile(rho1: &Background, rho2: &Background, dimension: usize, max_radius: i64) -> Result<Vec<C64>> {
    let mut out = Vec::with_capacity(max_radius as usize + 1);
    let mut acc = C64::new(1.0, 0.0);
    for r in 0..=max_radius {
        let shell = Window::centered(dimension, r)?;
        for s in shell.sites().iter().filter(|s| s.sup_distance(&GridIndex::ORIGIN) == r) {
            acc *= site_inner(rho2.site(s), rho1.site(s));
        }
        out.push(acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{ladder_ops, FockTruncation, SiteOperator};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn vacuum(d: usize) -> Arc<Background> {
        let t = FockTruncation::new(d - 1).unwrap();
        Arc::new(Background::uniform(SiteState::number(&t, 0).unwrap()).unwrap())
    }

    fn gas(phase: f64) -> Background {
        Background::uniform(SiteState::from_slice(&[c(1.0, 0.0), C64::from_polar(1.0, phase)])).unwrap()
    }

    fn ov(site: i64, amps: &[C64]) -> Overrides {
        BTreeMap::from([(GridIndex::line(site), SiteState::from_slice(amps))])
    }

    #[test]
    fn background_alone_has_unit_norm() {
        let v = LocalVector::background_vector(vacuum(2));
        assert!((inner_product(&v, &v).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        assert!((norm(&v) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn superposition_override_overlap() {
        let bg = vacuum(2);
        let plus = LocalVector::from_terms(bg.clone(), vec![(c(1.0, 0.0), ov(0, &[c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]))]);
        let base = LocalVector::background_vector(bg);
        assert!((inner_product(&plus, &base).unwrap() - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn orthogonal_override() {
        let bg = vacuum(2);
        let one = LocalVector::from_terms(bg.clone(), vec![(c(1.0, 0.0), ov(3, &[c(0.0, 0.0), c(1.0, 0.0)]))]);
        assert_eq!(inner_product(&one, &LocalVector::background_vector(bg)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn scaled_override_norm() {
        let bg = vacuum(3);
        let v = LocalVector::from_terms(bg, vec![(c(1.0, 0.0), ov(1, &[c(0.0, 0.0), c(0.0, -2.5), c(0.0, 0.0)]))]);
        assert!((norm(&v) - 2.5).abs() < 1e-14);
    }

    #[test]
    fn linear_combine_identity_and_product_form() {
        let bg = vacuum(2);
        let s1 = [c(0.3, 0.1), c(-0.2, 0.7)];
        let s2 = [c(0.5, 0.0), c(0.0, 0.4)];
        let u = LocalVector::from_terms(bg.clone(), vec![(c(1.0, 0.0), ov(0, &s1))]);
        let w = LocalVector::from_terms(bg.clone(), vec![(c(1.0, 0.0), ov(0, &s2))]);
        let same = linear_combine(c(1.0, 0.0), &u, c(0.0, 0.0), &w).unwrap();
        assert!((inner_product(&same, &u).unwrap() - inner_product(&u, &u).unwrap()).norm() < 1e-14);

        let (cc, dd) = (c(0.7, -0.3), c(-1.1, 0.2));
        let sum = linear_combine(cc, &u, dd, &w).unwrap();
        assert_eq!(sum.terms().len(), 1, "single-site difference collapses to one product");
        // (c+d) {(c φ1 + d φ2)/(c+d)}
        let collapsed: Vec<C64> = s1.iter().zip(s2.iter()).map(|(a, b)| (cc * a + dd * b) / (cc + dd)).collect();
        let product_form = LocalVector::from_terms(bg.clone(), vec![(cc + dd, ov(0, &collapsed))]);
        let probe = LocalVector::from_terms(bg, vec![(c(1.0, 0.0), ov(0, &[c(0.2, 0.9), c(1.3, -0.4)]))]);
        let lhs = inner_product(&probe, &sum).unwrap();
        let rhs = inner_product(&probe, &product_form).unwrap();
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn creator_on_vacuum() {
        let t = FockTruncation::with_scales(2, 0.5, 1.0).unwrap();
        let (a, a_dag) = ladder_ops(&t);
        let bg = vacuum(3);
        let v = LocalVector::background_vector(bg.clone());
        let psi_dag = QuasiLocalOperator::site(GridIndex::line(4), a_dag.scaled(C64::from(t.field_scale())));
        let out = apply(&psi_dag, &v).unwrap();
        let want = LocalVector::from_terms(
            bg.clone(),
            vec![(c(1.0, 0.0), ov(4, &[c(0.0, 0.0), c(t.field_scale(), 0.0), c(0.0, 0.0)]))],
        );
        let diff = linear_combine(c(1.0, 0.0), &out, c(-1.0, 0.0), &want).unwrap();
        assert!(norm(&diff) < 1e-14);
        let n = QuasiLocalOperator::site(GridIndex::line(4), a_dag.compose(&a));
        assert!(norm(&apply(&n, &v).unwrap()) < 1e-15);
        let e = QuasiLocalOperator::identity(3);
        let ev = apply(&e, &v).unwrap();
        assert!((inner_product(&ev, &v).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn apply_keeps_background() {
        let bg = Arc::new(gas(0.4));
        let v = LocalVector::background_vector(bg.clone());
        let op = QuasiLocalOperator::site(GridIndex::line(0), SiteOperator::new(nalgebra::DMatrix::from_row_slice(2, 2, &[c(0.0, 1.0), c(2.0, 0.0), c(0.3, 0.0), c(-1.0, 0.0)])));
        let out = apply(&op, &v).unwrap();
        assert!(Arc::ptr_eq(out.background(), &bg));
        assert_eq!(out.sector_id(), v.sector_id());
    }

    #[test]
    fn sector_equivalence() {
        let t = FockTruncation::new(1).unwrap();
        let zero = Background::uniform(SiteState::number(&t, 0).unwrap()).unwrap();
        let one = Background::uniform(SiteState::number(&t, 1).unwrap()).unwrap();
        let v = PureStateVector::new(Arc::new(zero.clone()), ov(2, &[c(0.1, 0.0), c(0.0, 3.0)]));
        assert!(equivalent(&v, &zero));
        assert!(!equivalent(&v, &one));
    }

    #[test]
    fn periodic_background_equals_patched_explicit_rewrite() {
        let a = SiteState::from_slice(&[c(1.0, 0.0), c(0.0, 1.0)]);
        let b = SiteState::from_slice(&[c(0.6, 0.0), c(0.8, 0.0)]);
        let periodic = Background::periodic([2, 1, 1], vec![a.clone(), b.clone()]).unwrap();
        let patched = periodic.with_patch(BTreeMap::from([(GridIndex::line(5), a.clone())])).unwrap();
        assert_eq!(patched.kind(), RuleKind::Explicit);
        assert_eq!(periodic.sector_id(), patched.sector_id());
        // period-4 pattern that repeats with period 2 is the same sector
        let doubled = Background::periodic([4, 1, 1], vec![a.clone(), b.clone(), a.clone(), b.clone()]).unwrap();
        assert_eq!(doubled.sector_id(), periodic.sector_id());
        assert_eq!(doubled.sector_id().period(), [2, 1, 1]);
        // a constant pattern collapses to the uniform sector, phases ignored
        let constant = Background::periodic([3, 1, 1], vec![a.clone(), a.scaled(C64::from_polar(1.0, 0.3)), a.clone()]).unwrap();
        assert_eq!(constant.sector_id(), Background::uniform(a).unwrap().sector_id());
        assert_ne!(periodic.sector_id(), Background::uniform(b).unwrap().sector_id());
    }

    #[test]
    fn cross_background_inner_product_in_one_sector() {
        let t = FockTruncation::new(1).unwrap();
        let zero = SiteState::number(&t, 0).unwrap();
        let one = SiteState::number(&t, 1).unwrap();
        let plain = Arc::new(Background::uniform(zero.clone()).unwrap());
        let patched = Arc::new(Background::explicit(zero, BTreeMap::from([(GridIndex::line(2), one.clone())])).unwrap());
        let u = LocalVector::from_terms(plain.clone(), vec![(c(1.0, 0.0), BTreeMap::from([(GridIndex::line(2), one)]))]);
        let w = LocalVector::background_vector(patched);
        assert!((inner_product(&u, &w).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        assert!(inner_product(&LocalVector::background_vector(plain), &w).unwrap().norm() < 1e-15);
    }

    #[test]
    fn cross_sector_is_gated() {
        let u = LocalVector::background_vector(Arc::new(gas(PI / 4.0)));
        let w = LocalVector::background_vector(Arc::new(gas(-PI / 4.0)));
        assert!(matches!(inner_product(&u, &w), Err(Error::SectorMismatch)));
        assert_eq!(global_inner_product(&u, &w).unwrap(), c(0.0, 0.0));
        let bad = LocalVector::background_vector(vacuum(3));
        assert!(matches!(linear_combine(c(1.0, 0.0), &u, c(1.0, 0.0), &bad), Err(Error::TruncationMismatch { .. })));
    }

    #[test]
    fn overlap_of_identical_backgrounds_is_one() {
        let g = gas(0.9);
        for n in 0..6 {
            assert!((cross_sector_overlap_partial(&g, &g, 1, n).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn uniform_overlap_is_geometric() {
        let t = FockTruncation::new(1).unwrap();
        let zero = Background::uniform(SiteState::number(&t, 0).unwrap()).unwrap();
        let plus = Background::uniform(SiteState::from_slice(&[c(1.0, 0.0), c(1.0, 0.0)])).unwrap();
        let profile = overlap_profile(&zero, &plus, 1, 10).unwrap();
        for (n, z) in profile.iter().enumerate() {
            let want = FRAC_1_SQRT_2.powi(2 * n as i32 + 1);
            assert!((z.norm() - want).abs() <= 1e-12 * want);
        }
        let direct = cross_sector_overlap_partial(&zero, &plus, 1, 10).unwrap();
        assert!((direct - profile[10]).norm() < 1e-15);
    }

    #[test]
    fn background_validation() {
        assert!(Background::uniform(SiteState::from_slice(&[c(0.0, 0.0), c(0.0, 0.0)])).is_err());
        assert!(Background::periodic([2, 1, 1], vec![SiteState::from_slice(&[c(1.0, 0.0)])]).is_err());
        assert!(Background::uniform(SiteState::from_slice(&[c(f64::NAN, 0.0)])).is_err());
        let g = gas(0.3);
        for s in g.tail_states() {
            assert!((s.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_round_trip() {
        let bg = Arc::new(gas(0.7));
        let w = Window::chain(3).unwrap();
        let v = LocalVector::from_terms(
            bg.clone(),
            vec![
                (c(0.5, 0.1), ov(0, &[c(0.3, 0.0), c(0.1, 0.2)])),
                (c(-0.2, 0.9), ov(2, &[c(0.0, 1.0), c(0.4, 0.0)])),
            ],
        );
        let dense = v.to_dense(&w).unwrap();
        let back = LocalVector::from_dense(bg, &w, &dense).unwrap();
        let diff = linear_combine(c(1.0, 0.0), &v, c(-1.0, 0.0), &back).unwrap();
        assert!(inner_product(&diff, &diff).unwrap().norm() < 1e-13);
        assert!((norm(&v) - dense.norm()).abs() < 1e-13);
    }
}

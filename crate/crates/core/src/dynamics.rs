//! Local energy densities, the Liouville action `L A = [H, A]`, and windowed
//! time evolution in both pictures.
//!
//! Conventions: `dA/dt = -i L A`, so `A(t) = e^{-iHt} A e^{iHt}`. The
//! Schrödinger companion is `v(t) = e^{iHt} v`, which makes
//! `(v(t), A v(t)) = (v, A(t) v)`.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algebra::QuasiLocalOperator;
use crate::lattice::{ladder_ops, number_operator, FockTruncation, GridIndex, Window};
use crate::linalg::HermitianEigen;
use crate::state::LocalVector;
use crate::{Error, Result, C64};

/// Prefactor and sign of the kinetic density.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KineticConvention {
    /// `-(1/4mΔx²)[ψ*(I)(ψ(I+o) + ψ(I-o) - 2ψ(I)) + h.c.]`, i.e. hopping
    /// amplitude `-1/(2mΔx²)` after summing over sites.
    Standard,
    /// `+(1/8mΔx²)[…]` with the same bracket.
    Positive,
}

fn default_dimension() -> usize {
    1
}
fn default_offset() -> i64 {
    1
}
fn default_scale() -> f64 {
    1.0
}

/// Parameters of the lattice Hamiltonian `H = Σ_I h(I) Δx³` with
/// `h(I) = H₀(I) + Σ_J g N(I)N(J) + ε(I)N(I)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub trunc: FockTruncation,
    /// Number of active lattice axes.
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default = "default_offset")]
    pub hopping_offset: i64,
    pub kinetic: KineticConvention,
    /// Multiplies the whole kinetic density.
    #[serde(default = "default_scale")]
    pub hopping_scale: f64,
    /// Phase `e^{iφ}` on forward hops.
    #[serde(default)]
    pub hopping_phase: f64,
    /// Density-density coupling `g`.
    #[serde(default)]
    pub interaction: f64,
    /// Euclidean interaction range `S` in lattice units.
    #[serde(default)]
    pub range: f64,
    /// On-site energies `ε(I) = potential[i1 mod len]`.
    #[serde(default)]
    pub potential: Vec<f64>,
}

impl HamiltonianSpec {
    /// Free standard hopping on a chain.
    pub fn free(trunc: FockTruncation) -> Self {
        HamiltonianSpec {
            trunc,
            dimension: 1,
            hopping_offset: 1,
            kinetic: KineticConvention::Standard,
            hopping_scale: 1.0,
            hopping_phase: 0.0,
            interaction: 0.0,
            range: 0.0,
            potential: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        FockTruncation::with_scales(self.trunc.n_max, self.trunc.dx, self.trunc.mass)?;
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(1..=3).contains(&self.dimension) {
            return bad(format!("dimension must be 1, 2 or 3, got {}", self.dimension));
        }
        if !(self.hopping_offset == 1 || self.hopping_offset == 2) {
            return bad(format!("hopping offset must be 1 or 2, got {}", self.hopping_offset));
        }
        for (name, v) in [("hopping_scale", self.hopping_scale), ("hopping_phase", self.hopping_phase), ("interaction", self.interaction)] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if !(self.range.is_finite() && self.range >= 0.0) {
            return bad(format!("interaction range must be finite and non-negative, got {}", self.range));
        }
        if self.potential.iter().any(|e| !e.is_finite()) {
            return bad("potential entries must be finite".into());
        }
        Ok(())
    }

    pub fn site_dim(&self) -> usize {
        self.trunc.site_dim()
    }

    fn weighted(&self, site: GridIndex, m: &crate::SiteOperator, w: f64) -> QuasiLocalOperator {
        QuasiLocalOperator::site(site, m.scaled(C64::from(w)))
    }

    /// `ψ(I) = Δx^{3/2} a`.
    pub fn field(&self, site: GridIndex) -> QuasiLocalOperator {
        let (a, _) = ladder_ops(&self.trunc);
        self.weighted(site, &a, self.trunc.field_scale())
    }

    /// `ψ*(I)`.
    pub fn field_dagger(&self, site: GridIndex) -> QuasiLocalOperator {
        let (_, a_dag) = ladder_ops(&self.trunc);
        self.weighted(site, &a_dag, self.trunc.field_scale())
    }

    /// `N(I) = ψ*(I)ψ(I)`.
    pub fn number(&self, site: GridIndex) -> QuasiLocalOperator {
        self.weighted(site, &number_operator(&self.trunc), self.trunc.cell_volume())
    }

    /// `Σ_{I ∈ window} N(I)`.
    pub fn total_number(&self, window: &Window) -> QuasiLocalOperator {
        sum(self.site_dim(), window.sites().iter().map(|s| self.number(*s)))
    }

    fn hop_difference(&self, site: GridIndex, axis: usize) -> QuasiLocalOperator {
        let fwd = self.field(site.shifted(axis, 1));
        let bwd = self.field(site.shifted(axis, -1));
        self.field_dagger(site).multiply(&fwd.sub(&bwd).expect("same dim")).expect("same dim")
    }

    /// Hermitian momentum density `(X - X†)/(4iΔx)` with
    /// `X = ψ*(I)(ψ(I+e) - ψ(I-e))`.
    pub fn momentum(&self, site: GridIndex, axis: usize) -> QuasiLocalOperator {
        let x = self.hop_difference(site, axis);
        x.sub(&x.adjoint()).expect("same dim").scale(C64::new(0.0, -1.0 / (4.0 * self.trunc.dx)))
    }

    /// `ψ*(I)(ψ(I+e) - ψ(I-e))/(4Δx)`, not Hermitian.
    pub fn momentum_literal(&self, site: GridIndex, axis: usize) -> QuasiLocalOperator {
        self.hop_difference(site, axis).scale(C64::from(1.0 / (4.0 * self.trunc.dx)))
    }

    /// `H₀(I)` summed over the active axes.
    pub fn kinetic(&self, site: GridIndex) -> QuasiLocalOperator {
        let d = self.site_dim();
        let dx2 = self.trunc.dx * self.trunc.dx;
        let prefactor = match self.kinetic {
            KineticConvention::Standard => -1.0 / (4.0 * self.trunc.mass * dx2),
            KineticConvention::Positive => 1.0 / (8.0 * self.trunc.mass * dx2),
        } * self.hopping_scale;
        if prefactor == 0.0 {
            return QuasiLocalOperator::zero(d);
        }
        let o = self.hopping_offset;
        let phase = C64::from_polar(1.0, self.hopping_phase);
        let psi = self.field(site);
        let psi_dag = self.field_dagger(site);
        let mut bracket = QuasiLocalOperator::zero(d);
        for axis in 0..self.dimension {
            let fwd = self.field(site.shifted(axis, o)).scale(phase);
            let bwd = self.field(site.shifted(axis, -o)).scale(phase.conj());
            let lap = sum(d, [fwd, bwd, psi.scale(C64::from(-2.0))]);
            let term = psi_dag.multiply(&lap).expect("same dim");
            bracket = sum(d, [bracket, term.adjoint(), term]);
        }
        bracket.scale(C64::from(prefactor))
    }

    /// Neighbours `J` with `0 < |I - J| <= S`.
    pub fn interaction_partners(&self, site: GridIndex) -> Vec<GridIndex> {
        let r = self.range.floor() as i64;
        let r2 = self.range * self.range;
        let span = |k: usize| if k < self.dimension { -r..=r } else { 0..=0 };
        let mut out = Vec::new();
        for a in span(0) {
            for b in span(1) {
                for c in span(2) {
                    let n2 = (a * a + b * b + c * c) as f64;
                    if n2 > 0.0 && n2 <= r2 + 1e-12 {
                        out.push(GridIndex([site.0[0] + a, site.0[1] + b, site.0[2] + c]));
                    }
                }
            }
        }
        out
    }

    /// `Σ_J g N(I)N(J)` over the partners of `I`.
    pub fn interaction_density(&self, site: GridIndex) -> QuasiLocalOperator {
        let d = self.site_dim();
        if self.interaction == 0.0 {
            return QuasiLocalOperator::zero(d);
        }
        let n_i = self.number(site);
        sum(d, self.interaction_partners(site).into_iter().map(|j| n_i.multiply(&self.number(j)).expect("same dim")))
            .scale(C64::from(self.interaction))
    }

    /// `ε(I) N(I)`.
    pub fn potential_density(&self, site: GridIndex) -> QuasiLocalOperator {
        if self.potential.is_empty() {
            return QuasiLocalOperator::zero(self.site_dim());
        }
        let eps = self.potential[site.0[0].rem_euclid(self.potential.len() as i64) as usize];
        self.number(site).scale(C64::from(eps))
    }

    /// `h(I)`, the full energy density.
    pub fn energy_density(&self, site: GridIndex) -> QuasiLocalOperator {
        sum(self.site_dim(), [self.kinetic(site), self.interaction_density(site), self.potential_density(site)])
    }

    fn sites_within(&self, sites: &BTreeSet<GridIndex>, r: i64) -> BTreeSet<GridIndex> {
        let span = |k: usize| if k < self.dimension { -r..=r } else { 0..=0 };
        let mut out = BTreeSet::new();
        for s in sites {
            for a in span(0) {
                for b in span(1) {
                    for c in span(2) {
                        out.insert(GridIndex([s.0[0] + a, s.0[1] + b, s.0[2] + c]));
                    }
                }
            }
        }
        out
    }
}

fn sum(site_dim: usize, ops: impl IntoIterator<Item = QuasiLocalOperator>) -> QuasiLocalOperator {
    let mut terms = Vec::new();
    for op in ops {
        terms.extend(op.terms().iter().cloned());
    }
    QuasiLocalOperator::from_terms(site_dim, terms)
}

fn touching(op: &QuasiLocalOperator, sites: &BTreeSet<GridIndex>) -> QuasiLocalOperator {
    let terms = op.terms().iter().filter(|(_, p)| p.support().any(|s| sites.contains(s))).cloned().collect();
    QuasiLocalOperator::from_terms(op.site_dim(), terms)
}

/// A Hamiltonian that is a (possibly infinite) sum of local terms.
pub trait LocalHamiltonian {
    fn site_dim(&self) -> usize;

    /// Number of active lattice axes.
    fn dimension(&self) -> usize;

    /// Largest sup-distance between two sites of a single term.
    fn reach(&self) -> i64;

    /// The finite part of `H` whose terms act on at least one of `sites`.
    fn terms_touching(&self, sites: &BTreeSet<GridIndex>) -> QuasiLocalOperator;

    /// The terms of `H` supported inside `window` (open boundary).
    fn restricted_to(&self, window: &Window) -> QuasiLocalOperator;

    /// Window sites coupled by `H` to a site outside the window.
    fn open_sites(&self, window: &Window) -> Vec<GridIndex> {
        window
            .sites()
            .iter()
            .copied()
            .filter(|s| {
                let t = self.terms_touching(&BTreeSet::from([*s]));
                t.support().iter().any(|x| !window.contains(x))
            })
            .collect()
    }
}

impl LocalHamiltonian for HamiltonianSpec {
    fn site_dim(&self) -> usize {
        self.trunc.site_dim()
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn reach(&self) -> i64 {
        let hop = if self.hopping_scale != 0.0 { self.hopping_offset } else { 0 };
        let int = if self.interaction != 0.0 { self.range.floor() as i64 } else { 0 };
        hop.max(int)
    }

    fn terms_touching(&self, sites: &BTreeSet<GridIndex>) -> QuasiLocalOperator {
        let w = C64::from(self.trunc.cell_volume());
        let centres = self.sites_within(sites, self.reach());
        let total = sum(self.site_dim(), centres.into_iter().map(|i| self.energy_density(i).scale(w)));
        touching(&total, sites)
    }

    fn restricted_to(&self, window: &Window) -> QuasiLocalOperator {
        let w = C64::from(self.trunc.cell_volume());
        let centres: BTreeSet<GridIndex> = window.sites().iter().copied().collect();
        sum(self.site_dim(), centres.into_iter().map(|i| self.energy_density(i).scale(w))).restricted_to(window)
    }
}

/// A Hamiltonian given as one finite operator.
#[derive(Clone, Debug)]
pub struct FiniteHamiltonian {
    pub operator: QuasiLocalOperator,
}

impl FiniteHamiltonian {
    pub fn new(operator: QuasiLocalOperator) -> Self {
        FiniteHamiltonian { operator }
    }
}

impl LocalHamiltonian for FiniteHamiltonian {
    fn site_dim(&self) -> usize {
        self.operator.site_dim()
    }

    fn dimension(&self) -> usize {
        3
    }

    fn reach(&self) -> i64 {
        self.operator
            .terms()
            .iter()
            .map(|(_, p)| {
                let s: Vec<&GridIndex> = p.support().collect();
                s.iter().flat_map(|a| s.iter().map(move |b| a.sup_distance(b))).max().unwrap_or(0)
            })
            .max()
            .unwrap_or(0)
    }

    fn terms_touching(&self, sites: &BTreeSet<GridIndex>) -> QuasiLocalOperator {
        touching(&self.operator, sites)
    }

    fn restricted_to(&self, window: &Window) -> QuasiLocalOperator {
        self.operator.restricted_to(window)
    }
}

/// `L A = [H, A]`, using only the terms of `H` that touch `support(A)`.
pub fn liouville_apply<H: LocalHamiltonian + ?Sized>(h: &H, a: &QuasiLocalOperator) -> Result<QuasiLocalOperator> {
    let support = a.support();
    if support.is_empty() {
        return Ok(QuasiLocalOperator::zero(a.site_dim()));
    }
    h.terms_touching(&support).commutator(a)
}

/// Dense window Hamiltonian.
pub fn window_hamiltonian<H: LocalHamiltonian + ?Sized>(h: &H, window: &Window) -> Result<DMatrix<C64>> {
    h.restricted_to(window).embed_dense(window)
}

/// Replaces the factor at tensor position `pos` by `(tr_pos M / d) ⊗ 1`.
fn average_out(m: &DMatrix<C64>, sites: usize, d: usize, pos: usize) -> DMatrix<C64> {
    let dim = m.nrows();
    let lo = d.pow((sites - 1 - pos) as u32);
    let split = |x: usize| (x / (lo * d), (x / lo) % d, x % lo);
    let mut out = DMatrix::zeros(dim, dim);
    for r in 0..dim {
        let (rh, rs, rl) = split(r);
        for c in 0..dim {
            let (ch, cs, cl) = split(c);
            if rs != cs {
                continue;
            }
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..d {
                acc += m[((rh * d + k) * lo + rl, (ch * d + k) * lo + cl)];
            }
            out[(r, c)] = acc / d as f64;
        }
    }
    out
}

/// Relative HS weight of `m` on operators that act non-trivially on any of
/// `sites`.
pub fn boundary_weight(m: &DMatrix<C64>, window: &Window, d: usize, sites: &[GridIndex]) -> f64 {
    let total = m.norm();
    if total == 0.0 {
        return 0.0;
    }
    let mut inner = m.clone();
    for s in sites {
        if let Some(pos) = window.position(s) {
            inner = average_out(&inner, window.len(), d, pos);
        }
    }
    (m - inner).norm() / total
}

/// Result of a Heisenberg-picture window evolution.
#[derive(Clone, Debug)]
pub struct HeisenbergEvolution {
    pub operator: QuasiLocalOperator,
    /// Relative weight on window sites that couple to the outside.
    pub leakage: f64,
}

/// `A(t) = e^{-iHt} A e^{iHt}` with `H` restricted to `window`. Fails when
/// the weight that reaches the open boundary exceeds `tol`.
pub fn evolve_heisenberg<H: LocalHamiltonian + ?Sized>(
    h: &H,
    a: &QuasiLocalOperator,
    t: f64,
    window: &Window,
    tol: f64,
) -> Result<HeisenbergEvolution> {
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("time must be finite, got {t}")));
    }
    let hw = window_hamiltonian(h, window)?;
    let am = a.embed_dense(window)?;
    let u = HermitianEigen::new(&hw)?.propagator(t);
    let evolved = &u * am * u.adjoint();
    let leakage = boundary_weight(&evolved, window, h.site_dim(), &h.open_sites(window));
    if leakage > tol {
        return Err(Error::LeakageExceeded { leakage, tol });
    }
    Ok(HeisenbergEvolution { operator: QuasiLocalOperator::from_dense(&evolved, window, h.site_dim())?, leakage })
}

/// Result of a Schrödinger-picture window evolution.
#[derive(Clone, Debug)]
pub struct SchrodingerEvolution {
    pub vector: LocalVector,
    /// `|‖v(t)‖ - ‖v‖| / ‖v‖`.
    pub norm_drift: f64,
}

/// `v(t) = e^{iHt} v` on the window factor, background frozen outside.
pub fn evolve_schrodinger<H: LocalHamiltonian + ?Sized>(
    h: &H,
    v: &LocalVector,
    t: f64,
    window: &Window,
    tol: f64,
) -> Result<SchrodingerEvolution> {
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("time must be finite, got {t}")));
    }
    let hw = window_hamiltonian(h, window)?;
    let dense = v.to_dense(window)?;
    let n0 = dense.norm();
    if n0 == 0.0 {
        return Err(Error::ZeroVector);
    }
    let u = HermitianEigen::new(&hw)?.propagator(-t);
    let out = u * dense;
    let norm_drift = (out.norm() - n0).abs() / n0;
    if norm_drift > tol {
        return Err(Error::NormDrift { drift: norm_drift, tol });
    }
    Ok(SchrodingerEvolution { vector: LocalVector::from_dense(v.background().clone(), window, &out)?, norm_drift })
}

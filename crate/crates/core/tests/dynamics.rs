mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use common::{c, dense_operator, dense_vector, kron, max_diff};
use gns_lattice::algebra::QuasiLocalOperator;
use gns_lattice::dynamics::{
    evolve_heisenberg, evolve_schrodinger, liouville_apply, window_hamiltonian, FiniteHamiltonian, HamiltonianSpec,
    KineticConvention, LocalHamiltonian,
};
use gns_lattice::functional::PureStateFunctional;
use gns_lattice::lattice::ladder_ops;
use gns_lattice::linalg::hs_inner;
use gns_lattice::sampling::{random_hermitian, random_operator};
use gns_lattice::state::{Background, LocalVector};
use gns_lattice::{Error, FockTruncation, GridIndex, SiteState, Window, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn interacting(n_max: usize) -> HamiltonianSpec {
    let mut h = HamiltonianSpec::free(FockTruncation::with_scales(n_max, 1.0, 1.0).unwrap());
    h.interaction = 0.7;
    h.range = 1.0;
    h.potential = vec![0.0, 0.4, -0.3];
    h
}

fn gas() -> Arc<Background> {
    Arc::new(Background::uniform(SiteState::from_slice(&[c(1.0, 0.0), C64::from_polar(1.0, 0.9)])).unwrap())
}

#[test]
fn two_site_hopping_liouvillian() {
    let t = FockTruncation::new(2).unwrap();
    let (a, a_dag) = ladder_ops(&t);
    let j = 0.8;
    let s = |i: i64| GridIndex::line(i);
    let hop = QuasiLocalOperator::product(3, c(-j, 0.0), [(s(0), a_dag.clone()), (s(1), a.clone())]);
    let h = FiniteHamiltonian::new(hop.add(&hop.adjoint()).unwrap());
    let a1 = QuasiLocalOperator::site(s(0), a.clone());
    let la = liouville_apply(&h, &a1).unwrap();
    let w = Window::chain(2).unwrap();
    let id = DMatrix::<C64>::identity(3, 3);
    let hm = (kron(&a_dag.matrix, &a.matrix) + kron(&a.matrix, &a_dag.matrix)) * c(-j, 0.0);
    let am = kron(&a.matrix, &id);
    let oracle = &hm * &am - &am * &hm;
    assert!(max_diff(&la.embed_dense(&w).unwrap(), &oracle) < 1e-13);
    // below the truncation edge [H, a₁] acts as J a₂
    let want = kron(&id, &a.matrix) * c(j, 0.0);
    let low = |m: &DMatrix<C64>, r: usize, col: usize| m[(r, col)];
    for (r, col) in [(0, 1), (0, 3 + 1), (1, 3 + 1), (3, 3 + 1)] {
        assert!((low(&oracle, r, col) - low(&want, r, col)).norm() < 1e-13);
    }
}

#[test]
fn interior_number_is_conserved_up_to_boundary_flux() {
    let h = interacting(1);
    let w = Window::new_box(GridIndex::line(-2), GridIndex::line(2)).unwrap();
    let inner = Window::new_box(GridIndex::line(-1), GridIndex::line(1)).unwrap();
    let n_inner = h.total_number(&inner);
    let flux = liouville_apply(&h, &n_inner).unwrap();
    // only hops across the two edges of the inner block survive
    let edges: BTreeSet<GridIndex> = [-2, -1, 1, 2].map(GridIndex::line).into_iter().collect();
    for (_, p) in flux.terms() {
        let s: BTreeSet<GridIndex> = p.support().copied().collect();
        assert!(s.len() == 2 && s.is_subset(&edges), "{s:?}");
    }
    let total = h.total_number(&w);
    let hw = FiniteHamiltonian::new(h.restricted_to(&w));
    assert!(liouville_apply(&hw, &total).unwrap().embed_dense(&w).unwrap().norm() < 1e-12);
}

#[test]
fn kinetic_density_commutes_with_number() {
    for conv in [KineticConvention::Standard, KineticConvention::Positive] {
        let mut h = interacting(2);
        h.kinetic = conv;
        h.hopping_offset = if conv == KineticConvention::Positive { 2 } else { 1 };
        let w = Window::new_box(GridIndex::line(-2), GridIndex::line(2)).unwrap();
        let k = dense_operator(&h.kinetic(GridIndex::ORIGIN), &w);
        let n = dense_operator(&h.total_number(&w), &w);
        assert!((&k * &n - &n * &k).norm() < 1e-12);
        assert!((&k - k.adjoint()).norm() < 1e-13);
    }
}

#[test]
fn heisenberg_evolution_basics() {
    let h = interacting(1);
    let w = Window::new_box(GridIndex::line(-2), GridIndex::line(2)).unwrap();
    let a = h.field(GridIndex::ORIGIN);
    let at0 = evolve_heisenberg(&h, &a, 0.0, &w, 1e-12).unwrap();
    assert!(max_diff(&at0.operator.embed_dense(&w).unwrap(), &a.embed_dense(&w).unwrap()) < 1e-12);
    let n = h.total_number(&w);
    let fin = FiniteHamiltonian::new(h.restricted_to(&w));
    let nt = evolve_heisenberg(&fin, &n, 3.7, &w, 1e-12).unwrap();
    assert!(max_diff(&nt.operator.embed_dense(&w).unwrap(), &n.embed_dense(&w).unwrap()) < 1e-11);
    assert_eq!(nt.leakage, 0.0);
    let err = evolve_heisenberg(&h, &a, 5.0, &w, 1e-6).unwrap_err();
    assert!(matches!(err, Error::LeakageExceeded { .. }));
}

#[test]
fn heisenberg_buffer_growth_is_stable() {
    let h = interacting(1);
    let a = h.number(GridIndex::ORIGIN);
    let t = 0.2;
    let mut prev: Option<DMatrix<C64>> = None;
    let probe = Window::new_box(GridIndex::line(-3), GridIndex::line(3)).unwrap();
    let mut diffs = Vec::new();
    for b in 1..=3 {
        let w = Window::new_box(GridIndex::line(-b), GridIndex::line(b)).unwrap();
        let ev = evolve_heisenberg(&h, &a, t, &w, 1.0).unwrap();
        let m = ev.operator.embed_dense(&probe).unwrap();
        if let Some(p) = &prev {
            diffs.push(max_diff(p, &m));
        }
        prev = Some(m);
    }
    assert!(diffs[1] < diffs[0], "{diffs:?}");
    assert!(diffs[1] < 1e-3, "{diffs:?}");
}

#[test]
fn schrodinger_conserves_norm_and_energy() {
    let h = interacting(1);
    let w = Window::chain(8).unwrap();
    let bg = gas();
    let excite = SiteState::from_slice(&[c(0.2, 0.0), c(0.0, 1.0)]);
    let v = LocalVector::from_terms(bg, vec![(c(1.0, 0.0), BTreeMap::from([(GridIndex::line(3), excite)]))]);
    let hw = h.restricted_to(&w);
    let xi0 = PureStateFunctional::new(v.clone());
    let e0 = xi0.expectation(&hw).unwrap().re;
    let n0 = xi0.norm_squared();
    let ev = evolve_schrodinger(&h, &v, 10.0, &w, 1e-9).unwrap();
    assert!(ev.norm_drift <= 1e-9);
    assert!(ev.vector.sector_id() == v.sector_id());
    let xi = PureStateFunctional::new(ev.vector);
    assert!((xi.norm_squared() - n0).abs() <= 1e-9 * n0);
    assert!((xi.expectation(&hw).unwrap().re - e0).abs() <= 1e-9 * e0.abs().max(1.0));
}

#[test]
fn pictures_agree() {
    let h = interacting(1);
    let w = Window::chain(4).unwrap();
    let fin = FiniteHamiltonian::new(h.restricted_to(&w));
    let bg = gas();
    let excite = SiteState::from_slice(&[c(0.6, 0.1), c(-0.3, 0.8)]);
    let v = LocalVector::from_terms(bg, vec![(c(1.0, 0.0), BTreeMap::from([(GridIndex::line(1), excite)]))]);
    let a = h.momentum(GridIndex::line(1), 0).add(&h.number(GridIndex::line(2))).unwrap();
    let t = 0.9;
    let heis = evolve_heisenberg(&fin, &a, t, &w, 1e-9).unwrap().operator;
    let sch = evolve_schrodinger(&fin, &v, t, &w, 1e-9).unwrap().vector;
    let lhs = PureStateFunctional::new(v.clone()).evaluate(&heis).unwrap();
    let rhs = PureStateFunctional::new(sch).evaluate(&a).unwrap();
    assert!((lhs - rhs).norm() < 1e-10);
    // i d/dt <v(t), A v(t)> at t = 0 equals <v, (LA) v>
    let dt = 1e-4;
    let at = |s: f64| PureStateFunctional::new(evolve_schrodinger(&fin, &v, s, &w, 1e-9).unwrap().vector).evaluate(&a).unwrap();
    let fd = (at(dt) - at(-dt)) / (2.0 * dt) * c(0.0, 1.0);
    let la = PureStateFunctional::new(v).evaluate(&liouville_apply(&fin, &a).unwrap()).unwrap();
    assert!((fd - la).norm() < 1e-6, "{fd} vs {la}");
}

#[test]
fn dense_evolution_matches_oracle() {
    let h = interacting(1);
    let w = Window::chain(3).unwrap();
    let bg = gas();
    let v = LocalVector::background_vector(bg);
    let hw = window_hamiltonian(&h, &w).unwrap();
    let x = dense_vector(&v, &w);
    // e^{iHt} through a truncated Taylor series
    let t = 0.4;
    let mut term = x.clone();
    let mut sum = x.clone();
    for k in 1..40 {
        term = (&hw * &term) * c(0.0, t / k as f64);
        sum += &term;
    }
    let got = evolve_schrodinger(&h, &v, t, &w, 1e-12).unwrap().vector;
    assert!((dense_vector(&got, &w) - sum).norm() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn liouvillian_is_local(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut h = interacting(1);
        h.range = 2.0;
        h.hopping_offset = 1 + (seed % 2) as i64;
        let sites: Vec<GridIndex> = (0..3).map(GridIndex::line).collect();
        let a = random_operator(&mut r, 2, &sites, 2);
        let la = liouville_apply(&h, &a).unwrap();
        let support = a.support();
        for s in la.support() {
            prop_assert!(support.iter().any(|x| x.sup_distance(&s) <= h.reach()));
        }
    }

    #[test]
    fn liouvillian_is_hs_hermitian(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let h = interacting(1);
        let w = Window::chain(4).unwrap();
        let fin = FiniteHamiltonian::new(h.restricted_to(&w));
        let a = random_operator(&mut r, 2, w.sites(), 3);
        let b = random_operator(&mut r, 2, w.sites(), 3);
        let e = |q: &QuasiLocalOperator| q.embed_dense(&w).unwrap();
        let lhs = hs_inner(&e(&b), &e(&liouville_apply(&fin, &a).unwrap()));
        let rhs = hs_inner(&e(&liouville_apply(&fin, &b).unwrap()), &e(&a));
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn evolution_is_unitary_and_confined(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let h = interacting(1);
        let w = Window::chain(4).unwrap();
        let fin = FiniteHamiltonian::new(h.restricted_to(&w));
        let a = random_hermitian(&mut r, 2, w.sites(), 3);
        let v = gns_lattice::sampling::random_vector(&mut r, &gas(), w.sites(), 2);
        let t = 2.5;
        let at = evolve_heisenberg(&fin, &a, t, &w, 1e-9).unwrap().operator;
        let (n0, n1) = (a.embed_dense(&w).unwrap().norm(), at.embed_dense(&w).unwrap().norm());
        prop_assert!((n0 - n1).abs() <= 1e-9 * n0.max(1.0));
        let vt = evolve_schrodinger(&fin, &v, t, &w, 1e-9).unwrap().vector;
        prop_assert!(vt.sector_id() == v.sector_id());
    }
}

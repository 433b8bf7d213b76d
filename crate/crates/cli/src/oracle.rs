//! Dense reference computations written independently of the library's own
//! embeddings, and the seeded equivalence checks built on them.

use std::sync::Arc;

use gns_lattice::algebra::QuasiLocalOperator;
use gns_lattice::dynamics::{liouville_apply, HamiltonianSpec, LocalHamiltonian};
use gns_lattice::master::{build_superoperator, project_split, self_energy, ObservableBasis, BasisPreset};
use gns_lattice::reversal::reverse_operator;
use gns_lattice::sampling::{random_operator, random_vector};
use gns_lattice::state::{apply, inner_product, Background, LocalVector};
use gns_lattice::{Error, FockTruncation, GridIndex, SiteState, Window, C64, DEFAULT_DENSE_CAP};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::error::CliError;

pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |r, c| a[(r / br, c / bc)] * b[(r % br, c % bc)])
}

fn kron_vec(a: &DVector<C64>, b: &DVector<C64>) -> DVector<C64> {
    DVector::from_fn(a.len() * b.len(), |r, _| a[r / b.len()] * b[r % b.len()])
}

/// Term-by-term Kronecker embedding on `window` (sites in window order).
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

/// Window factor of a sector vector whose overrides lie inside `window`.
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

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub samples: usize,
    pub max_error: f64,
    pub tol: f64,
    pub pass: bool,
}

impl CheckResult {
    fn new(name: &str, samples: usize, max_error: f64, tol: f64) -> Self {
        CheckResult { name: name.into(), samples, max_error, tol, pass: max_error <= tol }
    }
}

fn random_chain<R: Rng>(rng: &mut R) -> Window {
    Window::chain(rng.gen_range(2..=3)).expect("chain length is positive")
}

/// add, multiply, adjoint and commutator against the dense embedding.
pub fn check_algebra<R: Rng>(rng: &mut R, samples: usize) -> Result<Vec<CheckResult>, CliError> {
    let mut worst = [0.0f64; 4];
    for _ in 0..samples {
        let w = random_chain(rng);
        let d = rng.gen_range(2..=3);
        let (na, nb) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let a = random_operator(rng, d, w.sites(), na);
        let b = random_operator(rng, d, w.sites(), nb);
        let (da, db) = (dense_operator(&a, &w), dense_operator(&b, &w));
        let errs = [
            max_diff(&dense_operator(&a.add(&b)?, &w), &(&da + &db)),
            max_diff(&dense_operator(&a.multiply(&b)?, &w), &(&da * &db)),
            max_diff(&dense_operator(&a.adjoint(), &w), &da.adjoint()),
            max_diff(&dense_operator(&a.commutator(&b)?, &w), &(&da * &db - &db * &da)),
        ];
        for (w, e) in worst.iter_mut().zip(errs) {
            *w = w.max(e);
        }
    }
    Ok(["add", "multiply", "adjoint", "commutator"]
        .iter()
        .zip(worst)
        .map(|(n, e)| CheckResult::new(&format!("algebra_{n}"), samples, e, 1e-12))
        .collect())
}

fn random_background<R: Rng>(rng: &mut R, d: usize) -> Arc<Background> {
    let state = |rng: &mut R| {
        let a: Vec<C64> = (0..d).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        SiteState::from_slice(&a)
    };
    let bg = if rng.gen_bool(0.5) {
        Background::uniform(state(rng))
    } else {
        Background::periodic([2, 1, 1], vec![state(rng), state(rng)])
    };
    Arc::new(bg.expect("random site states are non-zero"))
}

/// Inner products and operator action against dense window vectors.
pub fn check_states<R: Rng>(rng: &mut R, samples: usize) -> Result<Vec<CheckResult>, CliError> {
    let (mut ip, mut ap) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let w = random_chain(rng);
        let d = rng.gen_range(2..=3);
        let bg = random_background(rng, d);
        let u = random_vector(rng, &bg, w.sites(), 2);
        let v = random_vector(rng, &bg, w.sites(), 2);
        let a = random_operator(rng, d, w.sites(), 2);
        let (du, dv) = (dense_vector(&u, &w), dense_vector(&v, &w));
        let want = du.dotc(&dv);
        ip = ip.max((inner_product(&u, &v)? - want).norm() / (1.0 + want.norm()));
        let av = dense_operator(&a, &w) * &dv;
        let scale = av.iter().map(|x| x.norm()).fold(0.0, f64::max);
        let got = dense_vector(&apply(&a, &v)?, &w);
        ap = ap.max(got.iter().zip(av.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / (1.0 + scale));
    }
    Ok(vec![
        CheckResult::new("inner_product", samples, ip, 1e-12),
        CheckResult::new("apply", samples, ap, 1e-12),
    ])
}

/// `L A = [H, A]` against the dense commutator with the window Hamiltonian,
/// for `A` supported away from the window edge.
pub fn check_liouville<R: Rng>(rng: &mut R, spec: &HamiltonianSpec, samples: usize) -> Result<CheckResult, CliError> {
    let mut spec = spec.clone();
    spec.dimension = 1;
    let spec = &spec;
    let reach = spec.reach().max(1);
    let core_len = 2;
    let len = core_len + 2 * reach as usize;
    let window = Window::chain(len)?;
    let dim = window.hilbert_dim(spec.site_dim()).unwrap_or(usize::MAX);
    if dim > DEFAULT_DENSE_CAP {
        return Err(Error::CapExceeded { dim, cap: DEFAULT_DENSE_CAP }.into());
    }
    let inner: Vec<GridIndex> = (reach..reach + core_len as i64).map(GridIndex::line).collect();
    let d = spec.site_dim();
    let h = dense_operator(&spec.restricted_to(&window), &window);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let a = random_operator(rng, d, &inner, 2);
        let da = dense_operator(&a, &window);
        let want = &h * &da - &da * &h;
        let got = dense_operator(&liouville_apply(spec, &a)?, &window);
        worst = worst.max(max_diff(&got, &want) / (1.0 + want.iter().map(|x| x.norm()).fold(0.0, f64::max)));
    }
    Ok(CheckResult::new("liouville", samples, worst, 1e-12))
}

/// Time reversal is entrywise conjugation of the dense embedding.
pub fn check_reversal<R: Rng>(rng: &mut R, samples: usize) -> Result<CheckResult, CliError> {
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let w = random_chain(rng);
        let d = rng.gen_range(2..=3);
        let a = random_operator(rng, d, w.sites(), 3);
        worst = worst.max(max_diff(&dense_operator(&reverse_operator(&a), &w), &dense_operator(&a, &w).conjugate()));
    }
    Ok(CheckResult::new("time_reversal", samples, worst, 1e-15))
}

/// `P R(z) P = (z − PLP − E(z))^{-1}` against direct inversion of `z − L`.
pub fn check_resolvent<R: Rng>(rng: &mut R, spec: &HamiltonianSpec, samples: usize) -> Result<CheckResult, CliError> {
    let mut model = spec.clone();
    model.trunc = FockTruncation::with_scales(1, spec.trunc.dx, spec.trunc.mass)?;
    model.dimension = 1;
    let window = Window::chain(3)?;
    let l = build_superoperator(&model, &window)?;
    let basis = ObservableBasis::preset(&model, &window, BasisPreset::Densities)?;
    let blocks = project_split(&l, &basis)?;
    let (n, k) = (l.dim(), basis.len());
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let z = C64::new(rng.gen_range(-4.0..4.0), sign * rng.gen_range(0.05..2.0));
        let full = (DMatrix::<C64>::identity(n, n) * z - &l.matrix)
            .try_inverse()
            .ok_or_else(|| CliError::Diagnostic(format!("z - L singular at z = {z}")))?;
        let oracle = basis.vectors().adjoint() * full * basis.vectors();
        let reduced = (DMatrix::<C64>::identity(k, k) * z - &blocks.plp - self_energy(&blocks, z)?)
            .try_inverse()
            .ok_or_else(|| CliError::Diagnostic(format!("reduced resolvent singular at z = {z}")))?;
        worst = worst.max(max_diff(&oracle, &reduced));
    }
    Ok(CheckResult::new("resolvent", samples, worst, 1e-8))
}

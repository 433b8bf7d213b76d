//! Random operators and vectors for property sweeps and oracle checks.
//!
//! Everything is driven by a caller-supplied RNG so runs are reproducible
//! from a seed.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::algebra::{ProductOperator, QuasiLocalOperator};
use crate::lattice::{GridIndex, SiteOperator, SiteState};
use crate::state::{Background, LocalVector};
use crate::C64;

pub fn random_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_site_operator<R: Rng + ?Sized>(rng: &mut R, site_dim: usize) -> SiteOperator {
    SiteOperator::new(DMatrix::from_fn(site_dim, site_dim, |_, _| random_complex(rng)))
}

pub fn random_site_state<R: Rng + ?Sized>(rng: &mut R, site_dim: usize) -> SiteState {
    SiteState::new(DVector::from_fn(site_dim, |_, _| random_complex(rng)))
}

/// Sum of `n_terms` random products, each on a random non-empty subset of
/// `sites`.
pub fn random_operator<R: Rng + ?Sized>(
    rng: &mut R,
    site_dim: usize,
    sites: &[GridIndex],
    n_terms: usize,
) -> QuasiLocalOperator {
    let terms = (0..n_terms)
        .map(|_| {
            let mut factors = BTreeMap::new();
            while factors.is_empty() {
                for site in sites {
                    if rng.gen_bool(0.6) {
                        factors.insert(*site, random_site_operator(rng, site_dim));
                    }
                }
            }
            (random_complex(rng), ProductOperator::from_factors(factors))
        })
        .collect();
    QuasiLocalOperator::from_terms(site_dim, terms)
}

/// Random Hermitian operator `(A + A†)/2`.
pub fn random_hermitian<R: Rng + ?Sized>(
    rng: &mut R,
    site_dim: usize,
    sites: &[GridIndex],
    n_terms: usize,
) -> QuasiLocalOperator {
    let a = random_operator(rng, site_dim, sites, n_terms);
    a.add(&a.adjoint()).expect("same dimension").scale(C64::new(0.5, 0.0))
}

/// Random element of the sector of `background` with overrides on random
/// subsets of `sites`.
pub fn random_vector<R: Rng + ?Sized>(
    rng: &mut R,
    background: &Arc<Background>,
    sites: &[GridIndex],
    n_terms: usize,
) -> LocalVector {
    let d = background.site_dim();
    let terms = (0..n_terms)
        .map(|_| {
            let mut overrides = BTreeMap::new();
            for site in sites {
                if rng.gen_bool(0.7) {
                    overrides.insert(*site, random_site_state(rng, d));
                }
            }
            (random_complex(rng), overrides)
        })
        .collect();
    LocalVector::from_terms(background.clone(), terms)
}

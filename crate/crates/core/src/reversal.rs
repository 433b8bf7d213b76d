//! Time reversal: complex conjugation in the number basis, acting on
//! operators, on sector vectors, and on the Liouvillian.

use serde::Serialize;

use crate::algebra::QuasiLocalOperator;
use crate::dynamics::LocalHamiltonian;
use crate::lattice::{site_inner, Conjugate, Window};
use crate::master::build_superoperator;
use crate::state::{Background, LocalVector};
use crate::Result;

const INVARIANT_TOL: f64 = 1e-12;

/// `T A`: coefficients and every site matrix conjugated entrywise.
pub fn reverse_operator(a: &QuasiLocalOperator) -> QuasiLocalOperator {
    a.conjugate()
}

/// `T v`: background, overrides and coefficients conjugated. The result may
/// live in a different sector.
pub fn reverse_state(v: &LocalVector) -> LocalVector {
    v.conjugate()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReversalVerdict {
    /// `T ρ` differs from `ρ` (up to phases) at finitely many sites only.
    Invariant,
    /// `T ρ` differs at infinitely many sites; the two sectors are orthogonal.
    Jumped,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReversalReport {
    pub verdict: ReversalVerdict,
    /// Largest per-site overlap `|<φ(I), φ(I)*>|` among tail sites that are
    /// not reversal invariant; `1` when none.
    pub q: f64,
    /// Fraction of tail sites with overlap below one.
    pub density: f64,
    /// `|<φ, φ*>|` for each tail pattern slot.
    pub per_site: Vec<f64>,
}

/// Classifies the background's sector under time reversal from its tail rule.
pub fn sector_of_reversal(background: &Background) -> ReversalReport {
    let per_site: Vec<f64> = background.tail_states().iter().map(|s| site_inner(s, &s.conjugate()).norm()).collect();
    let jumped: Vec<f64> = per_site.iter().copied().filter(|q| *q < 1.0 - INVARIANT_TOL).collect();
    let density = jumped.len() as f64 / per_site.len() as f64;
    if jumped.is_empty() {
        ReversalReport { verdict: ReversalVerdict::Invariant, q: 1.0, density, per_site }
    } else {
        let q = jumped.iter().copied().fold(0.0, f64::max);
        ReversalReport { verdict: ReversalVerdict::Jumped, q, density, per_site }
    }
}

/// `‖T L T − L‖_HS` for the dense window Liouvillian. In the matrix-unit
/// basis `T L T` is the entrywise conjugate of `L`.
pub fn tlt_residual<H: LocalHamiltonian + ?Sized>(h: &H, window: &Window) -> Result<f64> {
    let l = build_superoperator(h, window)?;
    Ok((l.matrix.conjugate() - &l.matrix).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{FockTruncation, SiteState};
    use crate::C64;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn verdicts() {
        let t = FockTruncation::new(1).unwrap();
        let vac = Background::uniform(SiteState::number(&t, 0).unwrap()).unwrap();
        assert_eq!(sector_of_reversal(&vac).verdict, ReversalVerdict::Invariant);
        let real = Background::uniform(SiteState::from_slice(&[C64::from(1.0), C64::from(1.0)])).unwrap();
        assert_eq!(sector_of_reversal(&real).verdict, ReversalVerdict::Invariant);
        let gas = Background::uniform(SiteState::from_slice(&[C64::from(1.0), C64::from_polar(1.0, FRAC_PI_4)])).unwrap();
        let r = sector_of_reversal(&gas);
        assert_eq!(r.verdict, ReversalVerdict::Jumped);
        assert!((r.q - FRAC_PI_4.cos()).abs() < 1e-15);
        assert_eq!(r.density, 1.0);
    }

    #[test]
    fn global_phase_does_not_jump() {
        let s = SiteState::from_slice(&[C64::from(0.6), C64::from(0.8)]).scaled(C64::from_polar(1.0, 1.1));
        let bg = Background::uniform(s).unwrap();
        assert_eq!(sector_of_reversal(&bg).verdict, ReversalVerdict::Invariant);
        assert_eq!(bg.conjugate().sector_id(), bg.sector_id());
    }

    #[test]
    fn periodic_density() {
        let a = SiteState::from_slice(&[C64::from(1.0), C64::from(0.0)]);
        let b = SiteState::from_slice(&[C64::from(1.0), C64::new(0.0, 1.0)]);
        let bg = Background::periodic([2, 1, 1], vec![a, b]).unwrap();
        let r = sector_of_reversal(&bg);
        assert_eq!(r.verdict, ReversalVerdict::Jumped);
        assert_eq!(r.density, 0.5);
        assert!(r.q < 1e-15);
    }
}

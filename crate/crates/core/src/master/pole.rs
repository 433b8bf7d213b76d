use nalgebra::DMatrix;
use serde::Serialize;

use super::basis::ObservableBasis;
use super::blocks::ProjectedBlocks;
use super::superop::Superoperator;
use crate::linalg::HermitianEigen;
use crate::{Error, Result, C64};

/// Minimum distance between `z` and the spectrum of `QLQ` (or `L`) before a
/// resolvent solve is refused.
const SINGULAR_DISTANCE: f64 = 1e-12;
const SPREAD_FLOOR: f64 = 1e-12;

/// `(Re, Im)` parts of a square matrix: `(Z + Z†)/2` and `(Z − Z†)/(2i)`.
pub fn hermitian_parts(z: &DMatrix<C64>) -> (DMatrix<C64>, DMatrix<C64>) {
    let re = (z + z.adjoint()) * C64::from(0.5);
    let im = (z - z.adjoint()) * C64::new(0.0, -0.5);
    (re, im)
}

fn distance_to_spectrum(values: impl Iterator<Item = f64>, z: C64) -> f64 {
    values.map(|l| (z - C64::from(l)).norm()).fold(f64::INFINITY, f64::min)
}

/// `E(z) = PLQ (z − QLQ)^{-1} QLP`, by an LU solve.
pub fn self_energy(blocks: &ProjectedBlocks, z: C64) -> Result<DMatrix<C64>> {
    let spectrum = blocks.qlq_spectrum()?;
    let distance = distance_to_spectrum(spectrum.values.iter().copied(), z);
    if distance < SINGULAR_DISTANCE {
        return Err(Error::NearSingular { z_re: z.re, z_im: z.im, distance });
    }
    let q = blocks.qlq.nrows();
    if q == 0 {
        return Ok(DMatrix::zeros(blocks.k(), blocks.k()));
    }
    let shifted = DMatrix::<C64>::identity(q, q) * z - &blocks.qlq;
    let x = shifted
        .lu()
        .solve(&blocks.qlp)
        .ok_or(Error::NearSingular { z_re: z.re, z_im: z.im, distance })?;
    Ok(&blocks.plq * x)
}

/// `B† (z − L)^{-1} B` by direct inversion on the full operator space.
pub fn projected_resolvent(l: &Superoperator, basis: &ObservableBasis, z: C64) -> Result<DMatrix<C64>> {
    let n = l.dim();
    let values = HermitianEigen::new(&l.matrix)?.values;
    let distance = distance_to_spectrum(values.iter().copied(), z);
    if distance < SINGULAR_DISTANCE {
        return Err(Error::NearSingular { z_re: z.re, z_im: z.im, distance });
    }
    let shifted = DMatrix::<C64>::identity(n, n) * z - &l.matrix;
    let x = shifted
        .lu()
        .solve(basis.vectors())
        .ok_or(Error::NearSingular { z_re: z.re, z_im: z.im, distance })?;
    Ok(basis.vectors().adjoint() * x)
}

/// `z₀(η) = PLP + E(iη)` across an η schedule, with the plateau found.
#[derive(Clone, Debug, Serialize)]
pub struct PoleReport {
    pub etas: Vec<f64>,
    #[serde(skip)]
    pub poles: Vec<DMatrix<C64>>,
    /// Index range `[start, end]` of the plateau in `etas`.
    pub plateau: (usize, usize),
    /// Largest pairwise `‖Δz₀‖_F` in the plateau over the largest `‖z₀‖_F`.
    pub spread: f64,
    /// Largest eigenvalue of `Im z₀` over the whole schedule.
    pub max_imag_eigenvalue: f64,
    /// η at the middle of the plateau.
    pub eta: f64,
}

impl PoleReport {
    /// `z₀` at the middle of the plateau.
    pub fn value(&self) -> &DMatrix<C64> {
        &self.poles[(self.plateau.0 + self.plateau.1) / 2]
    }
}

fn run_spread(poles: &[DMatrix<C64>]) -> f64 {
    let scale = poles.iter().map(|z| z.norm()).fold(SPREAD_FLOOR, f64::max);
    let mut worst: f64 = 0.0;
    for (i, a) in poles.iter().enumerate() {
        for b in &poles[i + 1..] {
            worst = worst.max((a - b).norm());
        }
    }
    worst / scale
}

/// Evaluates `z₀(η)` on `etas` and selects the longest contiguous run (at
/// least two points) whose relative spread is within `max_spread`, ties
/// going to the smaller spread.
pub fn weak_coupling_pole(blocks: &ProjectedBlocks, etas: &[f64], max_spread: f64) -> Result<PoleReport> {
    if etas.len() < 2 {
        return Err(Error::InvalidParameter("the eta schedule needs at least two values".into()));
    }
    if etas.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::InvalidParameter("eta values must be positive".into()));
    }
    let poles = etas
        .iter()
        .map(|&eta| Ok(&blocks.plp + self_energy(blocks, C64::new(0.0, eta))?))
        .collect::<Result<Vec<_>>>()?;
    let mut max_imag_eigenvalue = f64::NEG_INFINITY;
    for z in &poles {
        let (_, im) = hermitian_parts(z);
        let top = HermitianEigen::new(&im)?.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        max_imag_eigenvalue = max_imag_eigenvalue.max(top);
    }
    let mut best: Option<((usize, usize), f64)> = None;
    let mut best_pair = f64::INFINITY;
    for start in 0..etas.len() - 1 {
        for end in start + 1..etas.len() {
            let spread = run_spread(&poles[start..=end]);
            if end == start + 1 {
                best_pair = best_pair.min(spread);
            }
            if spread > max_spread {
                continue;
            }
            let better = match best {
                None => true,
                Some(((s, e), sp)) => end - start > e - s || (end - start == e - s && spread < sp),
            };
            if better {
                best = Some(((start, end), spread));
            }
        }
    }
    let ((start, end), spread) = best.ok_or(Error::NoPlateau { best_spread: best_pair, max_spread })?;
    Ok(PoleReport {
        etas: etas.to_vec(),
        eta: etas[(start + end) / 2],
        poles,
        plateau: (start, end),
        spread,
        max_imag_eigenvalue,
    })
}

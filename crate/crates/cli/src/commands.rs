use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use gns_lattice::algebra::QuasiLocalOperator;
use gns_lattice::dynamics::{evolve_schrodinger, LocalHamiltonian};
use gns_lattice::functional::PureStateFunctional;
use gns_lattice::lattice::Conjugate;
use gns_lattice::master::{
    build_superoperator, compare_exact_vs_master, dispersion_dissipation, project_split, weak_coupling_pole,
    BasisPreset, ObservableBasis, PoleReport, ProjectedGenerator,
};
use gns_lattice::reversal::{reverse_operator, sector_of_reversal, tlt_residual, ReversalVerdict};
use gns_lattice::state::{overlap_profile, LocalVector};
use gns_lattice::{Error, GridIndex, SiteState, Window, C64, DEFAULT_DENSE_CAP};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::oracle::{self, CheckResult};
use crate::output::{csv_bytes, json_bytes, write_atomic};

const MAX_OVERLAP_RADIUS: i64 = 100_000;

#[derive(Serialize)]
struct OverlapRow {
    n: i64,
    sites: u64,
    abs_overlap: f64,
    re: f64,
    im: f64,
}

pub fn sector_overlap(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let r = cfg.overlap.max_radius;
    if !(0..=MAX_OVERLAP_RADIUS).contains(&r) {
        return Err(CliError::Config(format!("max_radius must lie in 0..={MAX_OVERLAP_RADIUS}, got {r}")));
    }
    let d = cfg.lattice.dimension;
    if !(1..=3).contains(&d) {
        return Err(CliError::Config(format!("dimension must be 1, 2 or 3, got {d}")));
    }
    let rho1 = cfg.background()?;
    let rho2 = cfg.reference()?.unwrap_or_else(|| rho1.conjugate());
    let profile = overlap_profile(&rho1, &rho2, d, r)?;
    let rows: Vec<OverlapRow> = profile
        .iter()
        .enumerate()
        .map(|(n, z)| OverlapRow {
            n: n as i64,
            sites: (2 * n as u64 + 1).saturating_pow(d as u32),
            abs_overlap: z.norm(),
            re: z.re,
            im: z.im,
        })
        .collect();
    Ok(vec![write_atomic(out, "overlap.csv", &csv_bytes(&rows)?)?])
}

#[derive(Serialize)]
struct SignEntry {
    operator: &'static str,
    expected_sign: i8,
    residual: f64,
    norm: f64,
}

#[derive(Serialize)]
struct ReversalDemo {
    verdict: ReversalVerdict,
    q: f64,
    density: f64,
    per_site: Vec<f64>,
    sector_changed: bool,
    window_sites: usize,
    tlt_residual: f64,
    sign_table: Vec<SignEntry>,
}

pub fn time_reversal_demo(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let spec = cfg.spec()?;
    let window = cfg.window()?;
    let bg = cfg.background()?;
    preflight_superoperator(&window, spec.site_dim())?;
    let report = sector_of_reversal(&bg);
    let sector_changed = bg.conjugate().sector_id() != bg.sector_id();
    let tlt = tlt_residual(&spec, &window)?;

    let o = GridIndex::ORIGIN;
    let local = Window::centered(spec.dimension, spec.hopping_offset.max(1))?;
    let entries: [(&'static str, i8, QuasiLocalOperator); 3] =
        [("number", 1, spec.number(o)), ("kinetic", 1, spec.kinetic(o)), ("momentum", -1, spec.momentum(o, 0))];
    let mut sign_table = Vec::new();
    for (name, sign, op) in entries {
        let m = op.embed_dense(&local)?;
        let t = reverse_operator(&op).embed_dense(&local)?;
        let residual = (t - &m * C64::from(sign as f64)).norm();
        sign_table.push(SignEntry { operator: name, expected_sign: sign, residual, norm: m.norm() });
    }
    let demo = ReversalDemo {
        verdict: report.verdict,
        q: report.q,
        density: report.density,
        per_site: report.per_site,
        sector_changed,
        window_sites: window.len(),
        tlt_residual: tlt,
        sign_table,
    };
    Ok(vec![write_atomic(out, "time_reversal.json", &json_bytes(&demo)?)?])
}

#[derive(Serialize)]
struct EvolveRow {
    t: f64,
    number: f64,
    excited_number: f64,
    momentum: f64,
    energy: f64,
    norm_drift: f64,
    energy_drift: f64,
}

pub fn evolve(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let spec = cfg.spec()?;
    let window = cfg.window()?;
    let times = cfg.times()?;
    let tol = cfg.evolve.tol;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CliError::Config(format!("evolve tol must be positive, got {tol}")));
    }
    let d = spec.site_dim();
    let dim = window.hilbert_dim(d).unwrap_or(usize::MAX);
    if dim > DEFAULT_DENSE_CAP {
        return Err(Error::CapExceeded { dim, cap: DEFAULT_DENSE_CAP }.into());
    }
    let origin = window.sites()[0].coords();
    let off = cfg.evolve.excite_site;
    let site = GridIndex([origin[0] + off[0], origin[1] + off[1], origin[2] + off[2]]);
    if !window.contains(&site) {
        return Err(CliError::Config(format!("excite_site {off:?} lies outside the window")));
    }
    let local = match &cfg.evolve.state {
        Some(a) => {
            let s = SiteState::from_slice(&a.iter().map(|[re, im]| C64::new(*re, *im)).collect::<Vec<_>>());
            if s.dim() != d {
                return Err(CliError::Config(format!("evolve state needs {d} amplitudes, got {}", s.dim())));
            }
            if s.normalized().is_none() {
                return Err(CliError::Config("evolve state has zero norm".into()));
            }
            s
        }
        None => SiteState::number(&spec.trunc, 1)
            .map_err(|_| CliError::Config("default excitation |1> needs n_max >= 1".into()))?,
    };
    let bg = Arc::new(cfg.background()?);
    let v0 = LocalVector::from_terms(bg, vec![(C64::new(1.0, 0.0), BTreeMap::from([(site, local)]))]);

    let number = spec.total_number(&window);
    let excited = spec.number(site);
    let momentum = sum_ops(d, window.sites().iter().map(|s| spec.momentum(*s, 0))).restricted_to(&window);
    let energy = spec.restricted_to(&window);

    let mut rows = Vec::with_capacity(times.len());
    let mut e0 = None;
    for &t in &times {
        let ev = evolve_schrodinger(&spec, &v0, t, &window, tol)?;
        let xi = PureStateFunctional::new(ev.vector);
        let e = xi.expectation(&energy)?.re;
        let base = *e0.get_or_insert(e);
        let energy_drift = if base != 0.0 { (e - base).abs() / base.abs() } else { (e - base).abs() };
        if energy_drift > tol {
            return Err(CliError::Diagnostic(format!("energy drift {energy_drift:.3e} exceeds {tol:.3e} at t = {t}")));
        }
        rows.push(EvolveRow {
            t,
            number: xi.expectation(&number)?.re,
            excited_number: xi.expectation(&excited)?.re,
            momentum: xi.expectation(&momentum)?.re,
            energy: e,
            norm_drift: ev.norm_drift,
            energy_drift,
        });
    }
    Ok(vec![write_atomic(out, "evolve.csv", &csv_bytes(&rows)?)?])
}

fn sum_ops(d: usize, ops: impl IntoIterator<Item = QuasiLocalOperator>) -> QuasiLocalOperator {
    let terms = ops.into_iter().flat_map(|o| o.terms().to_vec()).collect();
    QuasiLocalOperator::from_terms(d, terms)
}

fn preflight_superoperator(window: &Window, site_dim: usize) -> Result<(), CliError> {
    let dim = window.hilbert_dim(site_dim).and_then(|n| n.checked_mul(n)).unwrap_or(usize::MAX);
    if dim > DEFAULT_DENSE_CAP {
        return Err(Error::CapExceeded { dim, cap: DEFAULT_DENSE_CAP }.into());
    }
    Ok(())
}

#[derive(Serialize)]
struct ErrorRow {
    g: f64,
    tau: f64,
    t: f64,
    error: f64,
}

#[derive(Serialize)]
struct VanHoveSummary {
    eta: f64,
    couplings: Vec<f64>,
    sup_errors: Vec<f64>,
    ratios: Vec<f64>,
}

#[derive(Serialize)]
struct MasterReport {
    basis: BasisPreset,
    window_sites: usize,
    coupling: f64,
    pole: Option<PoleReport>,
    generator: ProjectedGenerator,
    van_hove: Option<VanHoveSummary>,
}

#[derive(Serialize)]
struct PlateauFailure {
    error: String,
    etas: Vec<f64>,
    max_spread: f64,
    best_spread: f64,
}

pub fn master_eq(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    cfg.validate_master()?;
    let spec = cfg.spec()?;
    let window = cfg.window()?;
    preflight_superoperator(&window, spec.site_dim())?;
    let m = &cfg.master;
    let l = build_superoperator(&spec, &window)?;
    let basis = ObservableBasis::preset(&spec, &window, m.basis)?;
    let blocks = project_split(&l, &basis)?;

    let (pole, eta) = match m.eta {
        Some(eta) => (None, eta),
        None => {
            let etas = m.eta_schedule();
            match weak_coupling_pole(&blocks, &etas, m.max_spread) {
                Ok(report) => {
                    let eta = report.eta;
                    (Some(report), eta)
                }
                Err(e @ Error::NoPlateau { best_spread, .. }) => {
                    let failure = PlateauFailure { error: e.to_string(), etas, max_spread: m.max_spread, best_spread };
                    write_atomic(out, "master_failure.json", &json_bytes(&failure)?)?;
                    return Err(e.into());
                }
                Err(e) => return Err(e.into()),
            }
        }
    };
    let generator = dispersion_dissipation(&blocks, eta)?;

    let mut rows = Vec::new();
    let van_hove = if m.couplings.is_empty() {
        None
    } else {
        let sweep = compare_exact_vs_master(&spec, &window, m.basis, &m.couplings, &m.tau_grid(), m.van_hove_eta)?;
        rows.extend(sweep.rows.iter().map(|r| ErrorRow { g: r.g, tau: r.tau, t: r.t, error: r.error }));
        Some(VanHoveSummary {
            eta: sweep.eta,
            couplings: sweep.couplings,
            sup_errors: sweep.sup_errors,
            ratios: sweep.ratios,
        })
    };
    let report = MasterReport {
        basis: m.basis,
        window_sites: window.len(),
        coupling: spec.hopping_scale,
        pole,
        generator,
        van_hove,
    };
    Ok(vec![
        write_atomic(out, "master_errors.csv", &csv_bytes(&rows)?)?,
        write_atomic(out, "master.json", &json_bytes(&report)?)?,
    ])
}

#[derive(Serialize)]
struct OracleReport {
    seed: u64,
    pass: bool,
    checks: Vec<CheckResult>,
}

pub fn oracle_check(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let spec = cfg.spec()?;
    let n = cfg.oracle.samples;
    if n == 0 || n > 100_000 {
        return Err(CliError::Config(format!("oracle samples must lie in 1..=100000, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = oracle::check_algebra(&mut rng, n)?;
    checks.extend(oracle::check_states(&mut rng, n)?);
    checks.push(oracle::check_liouville(&mut rng, &spec, n.min(50))?);
    checks.push(oracle::check_reversal(&mut rng, n)?);
    checks.push(oracle::check_resolvent(&mut rng, &spec, n.min(20))?);
    let pass = checks.iter().all(|c| c.pass);
    let report = OracleReport { seed: cfg.seed, pass, checks };
    let path = write_atomic(out, "oracle.json", &json_bytes(&report)?)?;
    if !pass {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        return Err(CliError::Diagnostic(format!("oracle checks failed: {}", failed.join(", "))));
    }
    Ok(vec![path])
}

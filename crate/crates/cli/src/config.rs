//! Experiment configuration, read from TOML or (by `.json` extension) JSON.

use std::path::Path;

use gns_lattice::dynamics::{HamiltonianSpec, KineticConvention};
use gns_lattice::master::BasisPreset;
use gns_lattice::state::Background;
use gns_lattice::{FockTruncation, GridIndex, SiteState, Window, C64};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub hamiltonian: HamiltonianConfig,
    #[serde(default)]
    pub background: BackgroundSpec,
    /// Second background for `sector-overlap`; the time reverse of
    /// `background` when absent.
    #[serde(default)]
    pub reference: Option<BackgroundSpec>,
    #[serde(default)]
    pub window: WindowConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub overlap: OverlapConfig,
    #[serde(default)]
    pub evolve: EvolveConfig,
    #[serde(default)]
    pub master: MasterConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeConfig {
    pub dimension: usize,
    pub n_max: usize,
    pub dx: f64,
    pub mass: f64,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig { dimension: 1, n_max: 1, dx: 1.0, mass: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HamiltonianConfig {
    pub kinetic: KineticConvention,
    pub hopping_offset: i64,
    /// Coupling `g` multiplying the kinetic density.
    pub g: f64,
    pub hopping_phase: f64,
    pub interaction: f64,
    pub range: f64,
    pub potential: Vec<f64>,
}

impl Default for HamiltonianConfig {
    fn default() -> Self {
        HamiltonianConfig {
            kinetic: KineticConvention::Standard,
            hopping_offset: 1,
            g: 1.0,
            hopping_phase: 0.0,
            interaction: 0.0,
            range: 0.0,
            potential: Vec::new(),
        }
    }
}

/// Complex amplitudes as `[re, im]` pairs.
pub type Amplitudes = Vec<[f64; 2]>;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackgroundSpec {
    /// `|0⟩` everywhere.
    #[default]
    Vacuum,
    /// `|n⟩` everywhere.
    Number { n: usize },
    /// `(|0⟩ + e^{iφ}|1⟩)/√2` everywhere.
    Gas { phase: f64 },
    Uniform { amplitudes: Amplitudes },
    Periodic { period: [usize; 3], pattern: Vec<Amplitudes> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowConfig {
    /// Sites per active axis; the window is the box `[0, length)^d`.
    pub length: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig { length: 3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub t_max: f64,
    pub dt: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig { t_max: 10.0, dt: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OverlapConfig {
    pub max_radius: i64,
}

impl Default for OverlapConfig {
    fn default() -> Self {
        OverlapConfig { max_radius: 30 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveConfig {
    /// Offset of the excited site from the window origin.
    pub excite_site: [i64; 3],
    /// Local state replacing the background there; `|1⟩` when absent.
    pub state: Option<Amplitudes>,
    pub tol: f64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig { excite_site: [0, 0, 0], state: None, tol: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MasterConfig {
    pub basis: BasisPreset,
    /// Explicit η schedule; overrides the geometric one.
    pub etas: Option<Vec<f64>>,
    pub eta_start: f64,
    pub eta_ratio: f64,
    pub eta_count: usize,
    /// Fixed η for the generator; skips the plateau search.
    pub eta: Option<f64>,
    pub max_spread: f64,
    pub van_hove_eta: f64,
    pub couplings: Vec<f64>,
    pub tau_max: f64,
    pub tau_steps: usize,
}

impl Default for MasterConfig {
    fn default() -> Self {
        MasterConfig {
            basis: BasisPreset::Densities,
            etas: None,
            eta_start: 2.0,
            eta_ratio: 0.7,
            eta_count: 16,
            eta: None,
            max_spread: 0.25,
            van_hove_eta: 1e-3,
            couplings: vec![0.2, 0.1, 0.05],
            tau_max: 1.0,
            tau_steps: 40,
        }
    }
}

impl MasterConfig {
    pub fn eta_schedule(&self) -> Vec<f64> {
        match &self.etas {
            Some(e) => e.clone(),
            None => (0..self.eta_count).map(|i| self.eta_start * self.eta_ratio.powi(i as i32)).collect(),
        }
    }

    pub fn tau_grid(&self) -> Vec<f64> {
        (0..=self.tau_steps).map(|i| self.tau_max * i as f64 / self.tau_steps as f64).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub samples: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { samples: 100 }
    }
}

/// Command-line overrides applied after loading.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub g: Option<f64>,
    pub eta: Option<f64>,
    pub window: Option<usize>,
    pub n_max: Option<usize>,
    pub t_max: Option<f64>,
    pub dt: Option<f64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.extension().is_some_and(|e| e == "json"))
    }

    pub fn parse(text: &str, json: bool) -> Result<Self, CliError> {
        if json {
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(g) = o.g {
            self.hamiltonian.g = g;
        }
        if let Some(e) = o.eta {
            self.master.eta = Some(e);
        }
        if let Some(w) = o.window {
            self.window.length = w;
        }
        if let Some(n) = o.n_max {
            self.lattice.n_max = n;
        }
        if let Some(t) = o.t_max {
            self.time.t_max = t;
        }
        if let Some(dt) = o.dt {
            self.time.dt = dt;
        }
    }

    pub fn truncation(&self) -> Result<FockTruncation, CliError> {
        let l = &self.lattice;
        Ok(FockTruncation::with_scales(l.n_max, l.dx, l.mass)?)
    }

    pub fn spec(&self) -> Result<HamiltonianSpec, CliError> {
        let h = &self.hamiltonian;
        let spec = HamiltonianSpec {
            trunc: self.truncation()?,
            dimension: self.lattice.dimension,
            hopping_offset: h.hopping_offset,
            kinetic: h.kinetic,
            hopping_scale: h.g,
            hopping_phase: h.hopping_phase,
            interaction: h.interaction,
            range: h.range,
            potential: h.potential.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn window(&self) -> Result<Window, CliError> {
        let d = self.lattice.dimension;
        if !(1..=3).contains(&d) {
            return Err(CliError::Config(format!("dimension must be 1, 2 or 3, got {d}")));
        }
        let n = self.window.length;
        if n == 0 {
            return Err(CliError::Config("window length must be positive".into()));
        }
        let mut hi = [0i64; 3];
        for h in hi.iter_mut().take(d) {
            *h = n as i64 - 1;
        }
        Ok(Window::new_box(GridIndex::ORIGIN, GridIndex(hi))?)
    }

    pub fn background(&self) -> Result<Background, CliError> {
        build_background(&self.background, &self.truncation()?)
    }

    pub fn reference(&self) -> Result<Option<Background>, CliError> {
        self.reference.as_ref().map(|r| build_background(r, &self.truncation()?)).transpose()
    }

    pub fn times(&self) -> Result<Vec<f64>, CliError> {
        let t = &self.time;
        if !(t.t_max.is_finite() && t.t_max >= 0.0) {
            return Err(CliError::Config(format!("t_max must be finite and non-negative, got {}", t.t_max)));
        }
        if !(t.dt.is_finite() && t.dt > 0.0) {
            return Err(CliError::Config(format!("dt must be positive, got {}", t.dt)));
        }
        let steps = (t.t_max / t.dt + 1e-9).floor() as usize;
        if steps > 100_000 {
            return Err(CliError::Config(format!("{steps} time steps exceeds the limit of 100000")));
        }
        Ok((0..=steps).map(|i| i as f64 * t.dt).collect())
    }

    pub fn validate_master(&self) -> Result<(), CliError> {
        let m = &self.master;
        let etas = m.eta_schedule();
        if m.eta.is_none() && etas.len() < 2 {
            return Err(CliError::Config("eta schedule needs at least two values".into()));
        }
        if etas.iter().chain(m.eta.iter()).chain([m.van_hove_eta].iter()).any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(CliError::Config("every eta must be positive and finite".into()));
        }
        if !(m.max_spread.is_finite() && m.max_spread > 0.0) {
            return Err(CliError::Config("max_spread must be positive".into()));
        }
        if m.couplings.iter().any(|g| !g.is_finite()) {
            return Err(CliError::Config("couplings must be finite".into()));
        }
        if !(m.tau_max.is_finite() && m.tau_max >= 0.0) || m.tau_steps == 0 {
            return Err(CliError::Config("tau_max must be non-negative and tau_steps positive".into()));
        }
        Ok(())
    }
}

fn amplitudes(a: &[[f64; 2]]) -> SiteState {
    SiteState::from_slice(&a.iter().map(|[re, im]| C64::new(*re, *im)).collect::<Vec<_>>())
}

fn sized(state: SiteState, trunc: &FockTruncation) -> Result<SiteState, CliError> {
    if state.dim() != trunc.site_dim() {
        return Err(CliError::Config(format!(
            "site state has {} amplitudes but n_max = {} needs {}",
            state.dim(),
            trunc.n_max,
            trunc.site_dim()
        )));
    }
    Ok(state)
}

pub fn build_background(spec: &BackgroundSpec, trunc: &FockTruncation) -> Result<Background, CliError> {
    let bg = match spec {
        BackgroundSpec::Vacuum => Background::uniform(SiteState::number(trunc, 0)?)?,
        BackgroundSpec::Number { n } => Background::uniform(SiteState::number(trunc, *n)?)?,
        BackgroundSpec::Gas { phase } => {
            if trunc.n_max < 1 {
                return Err(CliError::Config("gas background needs n_max >= 1".into()));
            }
            if !phase.is_finite() {
                return Err(CliError::Config("gas phase must be finite".into()));
            }
            let mut amps = vec![C64::new(0.0, 0.0); trunc.site_dim()];
            amps[0] = C64::new(1.0, 0.0);
            amps[1] = C64::from_polar(1.0, *phase);
            Background::uniform(SiteState::from_slice(&amps))?
        }
        BackgroundSpec::Uniform { amplitudes: a } => Background::uniform(sized(amplitudes(a), trunc)?)?,
        BackgroundSpec::Periodic { period, pattern } => {
            let states = pattern.iter().map(|a| sized(amplitudes(a), trunc)).collect::<Result<Vec<_>, _>>()?;
            Background::periodic(*period, states)?
        }
    };
    Ok(bg)
}

//! TOML run configuration.
//!
//! Every key is optional; missing keys take the values of the shipped
//! default profile (`profiles/default.toml`). Unknown keys are rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lepsim::{
    BathSpectrum, FdSettings, Frame, NegfSettings, QuantumState, Simulation, SolverKind, SystemParams, TimeGrid,
    TransferNormalization, DEFAULT_DIVERGENCE_FACTOR, DEFAULT_TOL_GAP,
};
use serde::{Deserialize, Serialize};

pub const DEFAULT_PROFILE: &str = include_str!("../profiles/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "camelCase")]
pub struct RunConfig {
    pub solver: String,
    /// `"ground"`, `"excited"` or rotating-frame spin components `[Sx, Sy, Sz]`.
    pub initial: Initial,
    pub system: SystemSection,
    pub bath: BathSection,
    pub time: TimeSection,
    pub generalized: GeneralizedSection,
    pub nonmarkov: NonMarkovSection,
    pub negf: NegfSection,
    pub analysis: AnalysisSection,
    pub sweep: SweepSection,
    /// Not echoed: the destination never affects the written bytes.
    #[serde(skip_serializing)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Initial {
    Named(String),
    Spin([f64; 3]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "camelCase")]
pub struct SystemSection {
    pub eps1: f64,
    pub eps2: f64,
    pub mu_e0: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "camelCase")]
pub struct BathSection {
    pub coupling_rate: f64,
    pub temperature: f64,
    pub omega_max: f64,
    pub n_omega: usize,
    pub diag_coupling11: f64,
    pub diag_coupling22: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "camelCase")]
pub struct TimeSection {
    pub t_end: f64,
    pub dt: f64,
    /// Internal steps per grid interval for the single-time solvers.
    pub substeps: usize,
    /// Every `decimation`-th grid point is written and analysed.
    pub decimation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "camelCase")]
pub struct GeneralizedSection {
    /// Regularizer of the transfer-rate integrals; omitted means ten
    /// frequency-grid spacings.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_reg: Option<f64>,
    /// `"markov-consistent"` or `"literal"`.
    pub normalization: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "camelCase")]
pub struct NonMarkovSection {
    /// Memory cutoff; omitted keeps the full history.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_mem: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "camelCase")]
pub struct NegfSection {
    pub hartree: bool,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub magnus_step: f64,
}

/// Filter-diagonalization settings. `window` and `growthTolerance` default
/// to the solver's analysis profile when omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "camelCase")]
pub struct AnalysisSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    pub basis_size: usize,
    pub amplitude_floor: f64,
    pub sv_cutoff: f64,
    pub decay_limit: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth_tolerance: Option<f64>,
    pub tol_gap: f64,
    pub divergence_factor: f64,
}

/// Either an explicit `values` list or `points` equally spaced values on
/// `[min, max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "camelCase")]
pub struct SweepSection {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "camelCase")]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            solver: SolverKind::Bloch.name().to_owned(),
            initial: Initial::Named("ground".to_owned()),
            system: SystemSection::default(),
            bath: BathSection::default(),
            time: TimeSection::default(),
            generalized: GeneralizedSection::default(),
            nonmarkov: NonMarkovSection::default(),
            negf: NegfSection::default(),
            analysis: AnalysisSection::default(),
            sweep: SweepSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl Default for SystemSection {
    fn default() -> Self {
        let p = SystemParams::paper_default();
        Self { eps1: p.eps1, eps2: p.eps2, mu_e0: p.mu_e0, delta: p.delta }
    }
}

impl Default for BathSection {
    fn default() -> Self {
        let b = BathSpectrum::default();
        Self {
            coupling_rate: b.coupling_rate,
            temperature: b.temperature,
            omega_max: b.omega_max,
            n_omega: b.n_omega,
            diag_coupling11: b.diag_coupling11,
            diag_coupling22: b.diag_coupling22,
        }
    }
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { t_end: 200.0, dt: 1.0, substeps: 10, decimation: 1 }
    }
}

impl Default for GeneralizedSection {
    fn default() -> Self {
        Self { delta_reg: None, normalization: "markov-consistent".to_owned() }
    }
}

impl Default for NonMarkovSection {
    fn default() -> Self {
        Self { t_mem: None }
    }
}

impl Default for NegfSection {
    fn default() -> Self {
        let s = NegfSettings::default();
        Self { hartree: s.hartree, tolerance: s.tolerance, max_iterations: s.max_iterations, magnus_step: s.magnus_step }
    }
}

impl Default for AnalysisSection {
    fn default() -> Self {
        let fd = FdSettings::default();
        Self {
            window: None,
            basis_size: fd.basis_size,
            amplitude_floor: fd.amplitude_floor,
            sv_cutoff: fd.sv_cutoff,
            decay_limit: fd.decay_limit,
            growth_tolerance: None,
            tol_gap: DEFAULT_TOL_GAP,
            divergence_factor: DEFAULT_DIVERGENCE_FACTOR,
        }
    }
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { min: 0.001, max: 0.05, points: 50, values: None }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

impl RunConfig {
    /// Parses and validates a configuration document.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in config {}", path.display()))
    }

    /// Canonical TOML of the effective configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Checks every module precondition reachable from this configuration.
    pub fn validate(&self) -> Result<()> {
        let sim = self.simulation()?;
        sim.bath.validate(&sim.system)?;
        if sim.substeps == 0 {
            bail!("invalid parameter `time.substeps`: must be positive");
        }
        if self.time.decimation == 0 || (sim.grid.len - 1) % self.time.decimation != 0 {
            bail!("invalid parameter `time.decimation`: must be positive and divide the {} grid intervals", sim.grid.len - 1);
        }
        self.fd_settings()?.validate(self.time.dt * self.time.decimation as f64)?;
        if let Some(t) = self.nonmarkov.t_mem {
            if !(t > 0.0) {
                bail!("invalid parameter `nonmarkov.tMem`: must be positive");
            }
        }
        let n = &self.negf;
        if !(n.tolerance > 0.0 && n.magnus_step > 0.0) || n.max_iterations == 0 {
            bail!("invalid parameter `negf`: tolerance, maxIterations and magnusStep must be positive");
        }
        if !(self.analysis.tol_gap > 0.0 && self.analysis.divergence_factor > 0.0) {
            bail!("invalid parameter `analysis`: tolGap and divergenceFactor must be positive");
        }
        let s = &self.sweep;
        match &s.values {
            Some(v) => {
                if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    bail!("invalid parameter `sweep.values`: must be a nonempty list of nonnegative numbers");
                }
                if v.windows(2).any(|w| w[1] <= w[0]) {
                    bail!("invalid parameter `sweep.values`: must be strictly increasing");
                }
            }
            None => {
                if !(s.min >= 0.0 && s.max > s.min) || s.points < 2 {
                    bail!("invalid parameter `sweep`: need 0 <= min < max and at least two points");
                }
            }
        }
        Ok(())
    }

    pub fn solver(&self) -> Result<SolverKind> {
        Ok(self.solver.parse::<SolverKind>()?)
    }

    fn initial_state(&self) -> Result<QuantumState> {
        let s = match &self.initial {
            Initial::Named(n) if n == "ground" => QuantumState::ground(),
            Initial::Named(n) if n == "excited" => QuantumState::excited(),
            Initial::Named(n) => bail!("invalid parameter `initial`: expected \"ground\", \"excited\" or [Sx, Sy, Sz], got {n:?}"),
            Initial::Spin(v) => QuantumState::from_spin(*v, Frame::Rotating),
        };
        s.validate()?;
        Ok(s)
    }

    fn normalization(&self) -> Result<TransferNormalization> {
        match self.generalized.normalization.as_str() {
            "markov-consistent" => Ok(TransferNormalization::MarkovConsistent),
            "literal" => Ok(TransferNormalization::Literal),
            other => bail!("invalid parameter `generalized.normalization`: expected \"markov-consistent\" or \"literal\", got {other:?}"),
        }
    }

    /// The simulation described by this configuration.
    pub fn simulation(&self) -> Result<Simulation> {
        self.solver()?;
        let s = &self.system;
        let b = &self.bath;
        let n = &self.negf;
        Ok(Simulation {
            system: SystemParams::new(s.eps1, s.eps2, s.mu_e0, s.delta)?,
            bath: BathSpectrum {
                coupling_rate: b.coupling_rate,
                temperature: b.temperature,
                omega_max: b.omega_max,
                n_omega: b.n_omega,
                diag_coupling11: b.diag_coupling11,
                diag_coupling22: b.diag_coupling22,
            },
            initial: self.initial_state()?,
            grid: TimeGrid::span(self.time.t_end, self.time.dt)?,
            substeps: self.time.substeps,
            delta_reg: self.generalized.delta_reg,
            normalization: self.normalization()?,
            t_mem: self.nonmarkov.t_mem,
            negf: NegfSettings { hartree: n.hartree, tolerance: n.tolerance, max_iterations: n.max_iterations, magnus_step: n.magnus_step },
        })
    }

    /// Analysis settings with the solver profile filling omitted keys.
    pub fn fd_settings(&self) -> Result<FdSettings> {
        let profile = self.solver()?.analysis_profile();
        let a = &self.analysis;
        Ok(FdSettings {
            window: a.window.map_or(profile.window, |w| (w[0], w[1])),
            basis_size: a.basis_size,
            amplitude_floor: a.amplitude_floor,
            sv_cutoff: a.sv_cutoff,
            decay_limit: a.decay_limit,
            growth_tolerance: a.growth_tolerance.unwrap_or(profile.growth_tolerance),
        })
    }

    pub fn mu_values(&self) -> Vec<f64> {
        match &self.sweep.values {
            Some(v) => v.clone(),
            None => lepsim::linspace(self.sweep.min, self.sweep.max, self.sweep.points),
        }
    }

    /// Copy with the omitted analysis keys filled in, so that the echoed
    /// configuration does not depend on the defaulting rules.
    pub fn effective(&self) -> Result<Self> {
        let fd = self.fd_settings()?;
        let mut out = self.clone();
        out.analysis.window = Some([fd.window.0, fd.window.1]);
        out.analysis.growth_tolerance = Some(fd.growth_tolerance);
        Ok(out)
    }
}

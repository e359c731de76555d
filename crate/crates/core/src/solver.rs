//! Uniform entry point over the four propagation schemes.

use std::fmt;
use std::str::FromStr;

use crate::eigenmode::{analyze_sweep, filter_diagonalize_real, run_sweep, FdSettings, SweepAnalysis, SweepPoint};
use crate::error::{invalid, Error, Result};
use crate::generalized::{propagate_generalized, renormalized_rates, TransferNormalization};
use crate::liouvillian::population_block;
use crate::markov::{compute_rates, propagate_spin, spin_to_states};
use crate::model::{to_rotating, BathSpectrum, Frame, QuantumState, SystemParams, TimeGrid, TimeSeries};
use crate::negf::{propagate_kb, NegfSettings};
use crate::nonmarkov::{build_kernels, propagate_volterra};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Bloch,
    Generalized,
    NonMarkov,
    Negf,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [SolverKind::Bloch, SolverKind::Generalized, SolverKind::NonMarkov, SolverKind::Negf];

    /// Filter-diagonalization settings used for this solver's trajectories.
    ///
    /// The two-time solver's stationary state keeps oscillating with slightly
    /// positive `Im ω` and a spectrum spread over the full band, so its
    /// profile widens the window and relaxes the growth bound.
    pub fn analysis_profile(self) -> FdSettings {
        match self {
            SolverKind::Negf => FdSettings { window: (-3.0, 3.0), growth_tolerance: 1e-3, ..FdSettings::default() },
            _ => FdSettings::default(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Bloch => "bloch",
            SolverKind::Generalized => "generalized",
            SolverKind::NonMarkov => "nonmarkov",
            SolverKind::Negf => "negf",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| invalid("solver", format!("unknown solver {s:?}")))
    }
}

/// Everything needed to produce one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub system: SystemParams,
    pub bath: BathSpectrum,
    pub initial: QuantumState,
    /// Output grid. The two-time solver propagates on this grid directly.
    pub grid: TimeGrid,
    /// Internal steps per output interval for the single-time solvers.
    pub substeps: usize,
    pub delta_reg: Option<f64>,
    pub normalization: TransferNormalization,
    /// Memory cutoff; `None` keeps the full history.
    pub t_mem: Option<f64>,
    pub negf: NegfSettings,
}

impl Simulation {
    /// Ground state on `[0, 200]` with unit output step.
    pub fn paper_default() -> Self {
        Self {
            system: SystemParams::paper_default(),
            bath: BathSpectrum::default(),
            initial: QuantumState::ground(),
            grid: TimeGrid::span(200.0, 1.0).expect("valid grid"),
            substeps: 10,
            delta_reg: None,
            normalization: TransferNormalization::default(),
            t_mem: None,
            negf: NegfSettings::default(),
        }
    }

    pub fn with_mu_e0(&self, mu_e0: f64) -> Self {
        Self { system: self.system.with_mu_e0(mu_e0), ..self.clone() }
    }

    /// Rotating-frame density matrices on the output grid.
    pub fn run(&self, kind: SolverKind) -> Result<TimeSeries<QuantumState>> {
        let p = &self.system;
        self.bath.validate(p)?;
        if self.substeps == 0 {
            return Err(invalid("substeps", "must be positive"));
        }
        let t0 = self.grid.t0;
        let spin0 = self.initial.in_frame(Frame::Rotating, p.omega0, t0).spin();
        let rates = compute_rates(&self.bath, p)?;
        match kind {
            SolverKind::Bloch => Ok(spin_to_states(&propagate_spin(p, &rates, spin0, &self.grid, self.substeps)?)),
            SolverKind::Generalized => {
                let pop = population_block(&rates);
                let rbar = renormalized_rates(&self.bath, p, &rates, &pop, self.delta_reg, self.normalization)?;
                Ok(spin_to_states(&propagate_generalized(p, &rbar, spin0, &self.grid, self.substeps)?))
            }
            SolverKind::NonMarkov => {
                let h = self.grid.dt / self.substeps as f64;
                let horizon = self.grid.t_end() - t0;
                let kernels = build_kernels(&self.bath, p, &rates, &population_block(&rates), h, horizon, self.t_mem)?;
                Ok(to_rotating(&propagate_volterra(p, &kernels, self.initial, &self.grid, self.substeps)?, p))
            }
            SolverKind::Negf => Ok(to_rotating(&propagate_kb(p, &self.bath, self.initial, &self.grid, &self.negf)?.states, p)),
        }
    }

    /// `Sz(t) = ρ22 - ρ11` on the output grid.
    pub fn sz(&self, kind: SolverKind) -> Result<TimeSeries<f64>> {
        Ok(self.run(kind)?.map(QuantumState::sz))
    }

    /// Modes of `Sz(t)` at each drive amplitude, evaluated on the current
    /// rayon pool and returned in input order.
    pub fn sweep_points(&self, kind: SolverKind, mu_values: &[f64], fd: &FdSettings) -> Result<Vec<SweepPoint>> {
        fd.validate(self.grid.dt)?;
        run_sweep(mu_values, |mu| filter_diagonalize_real(&self.with_mu_e0(mu).sz(kind)?, fd))
    }

    /// Sweep followed by branch tracking and LEP location.
    pub fn sweep(&self, kind: SolverKind, mu_values: &[f64], fd: &FdSettings, tol_gap: f64, divergence_factor: f64) -> Result<SweepAnalysis> {
        Ok(analyze_sweep(&self.sweep_points(kind, mu_values, fd)?, tol_gap, divergence_factor))
    }
}

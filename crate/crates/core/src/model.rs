//! System and bath parameters, the drive, bath spectral functions and the
//! bath correlation kernels shared by every solver.
//!
//! Units: ħ = k_B = 1. Energies are measured in units of the level spacing
//! ω21 for the shipped defaults, so ω21 = 1.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Two-level system with a harmonic drive `μE(t) = muE0 cos(omega0 t)`.
///
/// The dipole moment is fixed to μ = 1, so `mu_e0` is the product μE₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub eps1: f64,
    pub eps2: f64,
    pub mu_e0: f64,
    pub omega0: f64,
    pub delta: f64,
}

impl SystemParams {
    /// Builds a validated parameter set; the drive frequency is derived
    /// from the detuning as `omega0 = (eps2 - eps1) + delta`.
    pub fn new(eps1: f64, eps2: f64, mu_e0: f64, delta: f64) -> Result<Self> {
        let p = Self { eps1, eps2, mu_e0, omega0: (eps2 - eps1) + delta, delta };
        p.validate()?;
        Ok(p)
    }

    /// ε1 = 0, ε2 = 1, Δ = 0.00102, μE₀ = 0.001.
    pub fn paper_default() -> Self {
        Self::new(0.0, 1.0, 0.001, 0.00102).expect("default parameters are valid")
    }

    pub fn omega21(&self) -> f64 {
        self.eps2 - self.eps1
    }

    pub fn with_mu_e0(&self, mu_e0: f64) -> Self {
        Self { mu_e0, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.eps1, self.eps2, self.mu_e0, self.omega0, self.delta];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(invalid("system", "all parameters must be finite"));
        }
        if self.eps2 <= self.eps1 {
            return Err(invalid("eps2", format!("must exceed eps1 ({} <= {})", self.eps2, self.eps1)));
        }
        if self.mu_e0 < 0.0 {
            return Err(invalid("muE0", format!("must be nonnegative, got {}", self.mu_e0)));
        }
        if self.omega0 != self.omega21() + self.delta {
            return Err(invalid("omega0", "must equal (eps2 - eps1) + delta"));
        }
        Ok(())
    }
}

/// Drive coupling `μE(t)`.
pub fn drive_field(p: &SystemParams, t: f64) -> f64 {
    p.mu_e0 * (p.omega0 * t).cos()
}

/// Bose-Einstein occupation `1 / (exp(ω/T) - 1)`.
///
/// Returns 0 at zero temperature and `+inf` at ω = 0 for T > 0; products
/// with the spectral density use the ω → 0⁺ limit instead (see
/// [`BathSpectrum::occupation_weight`]).
pub fn bose_occupation(omega: f64, temperature: f64) -> Result<f64> {
    if omega < 0.0 {
        return Err(Error::NegativeFrequency { quantity: "occupation", omega });
    }
    if temperature < 0.0 {
        return Err(invalid("temperature", "must be nonnegative"));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    if omega == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / (omega / temperature).exp_m1())
}

/// Lesser or greater projection of a contour function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Lesser,
    Greater,
}

impl Branch {
    pub fn flip(self) -> Self {
        match self {
            Branch::Lesser => Branch::Greater,
            Branch::Greater => Branch::Lesser,
        }
    }
}

/// Nonzero blocks of the bath-induced interaction under RWA coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    /// Π₁₂,₁₂, the transition block.
    Transition,
    /// Π₁₁,₁₁
    Level1,
    /// Π₂₂,₂₂
    Level2,
}

/// Bosonic bath with spectral density
/// `J(ω) = (ω/ω21)² exp(2(1 - ω/ω21))` and rates `Γ(ω) = couplingRate · J(ω)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpectrum {
    pub coupling_rate: f64,
    pub temperature: f64,
    pub omega_max: f64,
    pub n_omega: usize,
    pub diag_coupling11: f64,
    pub diag_coupling22: f64,
}

impl Default for BathSpectrum {
    fn default() -> Self {
        Self {
            coupling_rate: 0.1,
            temperature: 0.0,
            omega_max: 10.0,
            n_omega: 10001,
            diag_coupling11: 0.0,
            diag_coupling22: 0.0,
        }
    }
}

impl BathSpectrum {
    pub fn validate(&self, p: &SystemParams) -> Result<()> {
        if !(self.coupling_rate >= 0.0) {
            return Err(invalid("couplingRate", "must be nonnegative"));
        }
        if !(self.temperature >= 0.0) {
            return Err(invalid("temperature", "must be nonnegative"));
        }
        if self.n_omega < 2 {
            return Err(invalid("nOmega", "must be at least 2"));
        }
        if !(self.omega_max > p.omega21()) {
            return Err(invalid("omegaMax", format!("must exceed omega21 = {}", p.omega21())));
        }
        if !(self.diag_coupling11 >= 0.0 && self.diag_coupling22 >= 0.0) {
            return Err(invalid("diagCoupling", "must be nonnegative"));
        }
        Ok(())
    }

    pub fn d_omega(&self) -> f64 {
        self.omega_max / (self.n_omega - 1) as f64
    }

    /// Frequency grid `[0, omegaMax]` with `nOmega` points.
    pub fn omega_grid(&self) -> Vec<f64> {
        let dw = self.d_omega();
        (0..self.n_omega).map(|k| k as f64 * dw).collect()
    }

    /// Composite trapezoid weights on [`Self::omega_grid`].
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let dw = self.d_omega();
        let mut w = vec![dw; self.n_omega];
        w[0] *= 0.5;
        w[self.n_omega - 1] *= 0.5;
        w
    }

    fn block_scale(&self, block: Block) -> f64 {
        match block {
            Block::Transition => self.coupling_rate,
            Block::Level1 => self.diag_coupling11,
            Block::Level2 => self.diag_coupling22,
        }
    }

    /// `Γ_block(ω)`: the block's coupling scale times `J(ω)`.
    pub fn gamma_block(&self, p: &SystemParams, block: Block, omega: f64) -> Result<f64> {
        Ok(self.block_scale(block) * bath_spectral(self, p, omega)?)
    }

    /// `Γ(ω) · N(ω)` and `Γ(ω) · (1 + N(ω))` for one block, using the
    /// ω → 0⁺ limit (where `Γ N → 0` because `J ∝ ω²`).
    pub fn occupation_weight(&self, p: &SystemParams, block: Block, omega: f64, branch: Branch) -> Result<f64> {
        let g = self.gamma_block(p, block, omega)?;
        if omega == 0.0 {
            return Ok(match branch {
                Branch::Lesser => 0.0,
                Branch::Greater => g,
            });
        }
        let n = bose_occupation(omega, self.temperature)?;
        Ok(match branch {
            Branch::Lesser => g * n,
            Branch::Greater => g * (1.0 + n),
        })
    }

    /// `Π^≷_block(ω)`; zero for ω ≤ 0.
    pub fn pi_freq(&self, p: &SystemParams, block: Block, branch: Branch, omega: f64) -> Complex64 {
        if omega <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let w = self
            .occupation_weight(p, block, omega, branch)
            .expect("positive frequency is always in the domain");
        -I * w
    }

    /// `Π^≷_block(t) = ∫ dω/2π Π(ω) e^{-iωt}` by direct trapezoid summation on
    /// the `[0, omegaMax]` grid, sampled on `grid`.
    ///
    /// The transform grid is periodic in time with period `2π/dω`; a grid
    /// extending past half of that period is rejected.
    pub fn pi_kernel_time(&self, p: &SystemParams, block: Block, branch: Branch, grid: &TimeGrid) -> Result<TimeSeries<Complex64>> {
        let dw = self.d_omega();
        let t_extent = grid.t0.abs().max(grid.t_end().abs());
        if t_extent * dw > std::f64::consts::PI {
            return Err(Error::GridResolution(format!(
                "time grid reaches |t| = {t_extent}, beyond the alias-free range pi/dOmega = {}",
                std::f64::consts::PI / dw
            )));
        }
        let weights = self.trapezoid_weights();
        let spectrum: Vec<Complex64> = self
            .omega_grid()
            .iter()
            .zip(&weights)
            .map(|(&w, &q)| self.pi_freq(p, block, branch, w) * q / (2.0 * std::f64::consts::PI))
            .collect();
        let values = grid.times().map(|t| fourier_sum(&spectrum, dw, t)).collect();
        Ok(TimeSeries::new(grid.t0, grid.dt, values))
    }
}

/// `Σ_k c_k e^{-i k dω t}`, with the phase advanced by recurrence and
/// resynchronized every 256 terms.
fn fourier_sum(coeffs: &[Complex64], dw: f64, t: f64) -> Complex64 {
    let step = Complex64::from_polar(1.0, -dw * t);
    let mut acc = Complex64::new(0.0, 0.0);
    for (chunk_idx, chunk) in coeffs.chunks(256).enumerate() {
        let mut phase = Complex64::from_polar(1.0, -dw * t * (chunk_idx * 256) as f64);
        for &c in chunk {
            acc += c * phase;
            phase *= step;
        }
    }
    acc
}

/// `J(ω) = (ω/ω21)² exp(2(1 - ω/ω21))`; zero above `omegaMax`.
pub fn bath_spectral(b: &BathSpectrum, p: &SystemParams, omega: f64) -> Result<f64> {
    if omega < 0.0 {
        return Err(Error::NegativeFrequency { quantity: "spectral density", omega });
    }
    if omega > b.omega_max {
        return Ok(0.0);
    }
    let x = omega / p.omega21();
    Ok(x * x * (2.0 * (1.0 - x)).exp())
}

/// `Γ₁₂,₁₂(ω) = couplingRate · J(ω)`.
pub fn gamma_rate(b: &BathSpectrum, p: &SystemParams, omega: f64) -> Result<f64> {
    b.gamma_block(p, Block::Transition, omega)
}

/// `Π^≷₁₂,₁₂(ω)`.
pub fn pi_projection_freq(b: &BathSpectrum, p: &SystemParams, omega: f64, branch: Branch) -> Complex64 {
    b.pi_freq(p, Block::Transition, branch, omega)
}

/// `Π^≷₁₂,₁₂(t)` on `grid`.
pub fn pi_kernel_time(b: &BathSpectrum, p: &SystemParams, branch: Branch, grid: &TimeGrid) -> Result<TimeSeries<Complex64>> {
    b.pi_kernel_time(p, Block::Transition, branch, grid)
}

/// Uniform time grid `t0, t0 + dt, ..., t0 + (len - 1) dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub len: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, len: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", "must be positive and finite"));
        }
        if len < 2 {
            return Err(invalid("tGrid", "needs at least two points"));
        }
        Ok(Self { t0, dt, len })
    }

    /// Grid covering `[0, t_end]` with step `dt`; `t_end` must be a
    /// multiple of `dt` to within rounding.
    pub fn span(t_end: f64, dt: f64) -> Result<Self> {
        let steps = t_end / dt;
        let n = steps.round();
        if (steps - n).abs() > 1e-9 * n.max(1.0) {
            return Err(invalid("tEnd", format!("{t_end} is not a multiple of dt = {dt}")));
        }
        Self::new(0.0, dt, n as usize + 1)
    }

    pub fn t(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.len - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |n| self.t(n))
    }

    /// Grid with the same span and `substeps` times finer spacing.
    pub fn refined(&self, substeps: usize) -> Self {
        Self { t0: self.t0, dt: self.dt / substeps as f64, len: (self.len - 1) * substeps + 1 }
    }
}

/// Uniformly sampled series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<T>,
}

impl<T> TimeSeries<T> {
    pub fn new(t0: f64, dt: f64, values: Vec<T>) -> Self {
        Self { t0, dt, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid { t0: self.t0, dt: self.dt, len: self.values.len() }
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> TimeSeries<U> {
        TimeSeries { t0: self.t0, dt: self.dt, values: self.values.iter().map(f).collect() }
    }

    /// Keeps every `stride`-th sample.
    pub fn decimate(&self, stride: usize) -> Self
    where
        T: Clone,
    {
        TimeSeries {
            t0: self.t0,
            dt: self.dt * stride as f64,
            values: self.values.iter().step_by(stride).cloned().collect(),
        }
    }
}

/// Which frame the coherence `rho12` refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Lab,
    /// Rotating with the drive: `rho12_rot = e^{-i omega0 t} rho12_lab`.
    Rotating,
}

/// Density matrix of the single-electron subspace; `rho21 = conj(rho12)`.
/// `rho_ij = <d_j^† d_i>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumState {
    pub rho11: f64,
    pub rho22: f64,
    pub rho12: Complex64,
    pub frame: Frame,
}

impl QuantumState {
    pub fn ground() -> Self {
        Self { rho11: 1.0, rho22: 0.0, rho12: Complex64::new(0.0, 0.0), frame: Frame::Lab }
    }

    pub fn excited() -> Self {
        Self { rho11: 0.0, rho22: 1.0, rho12: Complex64::new(0.0, 0.0), frame: Frame::Lab }
    }

    /// State with the given spin components `(Sx, Sy, Sz)`.
    pub fn from_spin(s: [f64; 3], frame: Frame) -> Self {
        Self {
            rho11: 0.5 * (1.0 - s[2]),
            rho22: 0.5 * (1.0 + s[2]),
            rho12: Complex64::new(0.5 * s[0], 0.5 * s[1]),
            frame,
        }
    }

    pub fn sz(&self) -> f64 {
        self.rho22 - self.rho11
    }

    /// `(Sx, Sy, Sz)` with `Sx = rho12 + rho21` and `Sy = i(rho21 - rho12)`.
    pub fn spin(&self) -> [f64; 3] {
        [2.0 * self.rho12.re, 2.0 * self.rho12.im, self.sz()]
    }

    pub fn trace(&self) -> f64 {
        self.rho11 + self.rho22
    }

    /// Re-expresses the coherence in `frame` at time `t`.
    pub fn in_frame(&self, frame: Frame, omega0: f64, t: f64) -> Self {
        let rho12 = match (self.frame, frame) {
            (Frame::Lab, Frame::Rotating) => self.rho12 * Complex64::from_polar(1.0, -omega0 * t),
            (Frame::Rotating, Frame::Lab) => self.rho12 * Complex64::from_polar(1.0, omega0 * t),
            _ => self.rho12,
        };
        Self { rho12, frame, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho11.is_finite() && self.rho22.is_finite() && self.rho12.norm().is_finite()) {
            return Err(invalid("initial state", "entries must be finite"));
        }
        if (self.trace() - 1.0).abs() > 1e-12 {
            return Err(invalid("initial state", format!("trace must be 1, got {}", self.trace())));
        }
        if self.rho11 < 0.0 || self.rho22 < 0.0 || self.rho12.norm_sqr() > self.rho11 * self.rho22 + 1e-12 {
            return Err(invalid("initial state", "not a positive semidefinite density matrix"));
        }
        Ok(())
    }
}

/// Maps a trajectory to the rotating frame of `p`'s drive.
pub fn to_rotating(series: &TimeSeries<QuantumState>, p: &SystemParams) -> TimeSeries<QuantumState> {
    let mut out = series.clone();
    for (n, s) in out.values.iter_mut().enumerate() {
        *s = s.in_frame(Frame::Rotating, p.omega0, series.t(n));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn drive_values() {
        let p = SystemParams::paper_default();
        assert_eq!(drive_field(&p, 0.0), 0.001);
        assert!(drive_field(&p, std::f64::consts::FRAC_PI_2 / p.omega0).abs() < 1e-18);
        assert_eq!(drive_field(&p.with_mu_e0(0.0), 3.7), 0.0);
    }

    #[test]
    fn occupation() {
        assert_eq!(bose_occupation(1.0, 0.0).unwrap(), 0.0);
        // 1/(e - 1)
        assert!(close(bose_occupation(1.0, 1.0).unwrap(), 0.581_976_706_869_326_4, 1e-15));
        let n = bose_occupation(1.0, 0.5).unwrap();
        assert!(close(n / (1.0 + n), (-2.0f64).exp(), 1e-15));
        assert!(bose_occupation(-1.0, 1.0).is_err());
    }

    #[test]
    fn spectral_density() {
        let p = SystemParams::paper_default();
        let b = BathSpectrum::default();
        assert!((bath_spectral(&b, &p, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(bath_spectral(&b, &p, 0.0).unwrap(), 0.0);
        assert!(close(bath_spectral(&b, &p, 2.0).unwrap(), 0.541_341_132_946_450_9, 1e-15));
        assert!(bath_spectral(&b, &p, -0.1).is_err());
        assert!(bath_spectral(&b, &p, 10.0).unwrap() < 2e-6);
    }

    #[test]
    fn rates_and_projections() {
        let p = SystemParams::paper_default();
        let b = BathSpectrum::default();
        assert!(close(gamma_rate(&b, &p, 1.0).unwrap(), 0.1, 1e-15));
        assert_eq!(gamma_rate(&b, &p, 0.0).unwrap(), 0.0);
        let off = BathSpectrum { coupling_rate: 0.0, ..b };
        assert_eq!(gamma_rate(&off, &p, 1.3).unwrap(), 0.0);
        assert_eq!(pi_projection_freq(&b, &p, 1.0, Branch::Lesser), Complex64::new(0.0, 0.0));
        let g = pi_projection_freq(&b, &p, 1.0, Branch::Greater);
        assert!((g - Complex64::new(0.0, -0.1)).norm() < 1e-15);
        assert_eq!(pi_projection_freq(&b, &p, -1.0, Branch::Greater), Complex64::new(0.0, 0.0));
        assert_eq!(pi_projection_freq(&b, &p, -1.0, Branch::Lesser), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn detailed_balance() {
        let p = SystemParams::paper_default();
        let b = BathSpectrum { temperature: 0.7, ..Default::default() };
        for &w in &[0.01, 0.3, 1.0, 2.5, 7.0] {
            let r = pi_projection_freq(&b, &p, w, Branch::Lesser) / pi_projection_freq(&b, &p, w, Branch::Greater);
            assert!((r.re - (-w / 0.7f64).exp()).abs() < 1e-14 * r.re.max(1e-300), "w = {w}");
            assert!(r.im.abs() < 1e-16);
        }
    }

    #[test]
    fn zero_lag_kernel_matches_closed_form() {
        // ∫_0^W x² e^{2-2x} dx = e² [1/4 - e^{-2W}(W²/2 + W/2 + 1/4)]
        let p = SystemParams::paper_default();
        let b = BathSpectrum::default();
        let w = b.omega_max;
        let integral = 2f64.exp() * (0.25 - (-2.0 * w).exp() * (w * w / 2.0 + w / 2.0 + 0.25));
        let expected = Complex64::new(0.0, -0.1 * integral / (2.0 * std::f64::consts::PI));
        let grid = TimeGrid::new(0.0, 0.1, 2).unwrap();
        let k = pi_kernel_time(&b, &p, Branch::Greater, &grid).unwrap();
        assert!((k.values[0] - expected).norm() < 1e-9, "{} vs {}", k.values[0], expected);
    }

    #[test]
    fn kernel_trivial_cases() {
        let p = SystemParams::paper_default();
        let grid = TimeGrid::new(0.0, 0.1, 50).unwrap();
        let b = BathSpectrum::default();
        let lesser = pi_kernel_time(&b, &p, Branch::Lesser, &grid).unwrap();
        assert!(lesser.values.iter().all(|v| v.norm() == 0.0));
        let off = BathSpectrum { coupling_rate: 0.0, ..b };
        let g = pi_kernel_time(&off, &p, Branch::Greater, &grid).unwrap();
        assert!(g.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn kernel_conjugation() {
        let p = SystemParams::paper_default();
        let b = BathSpectrum { temperature: 0.3, ..Default::default() };
        let grid = TimeGrid::new(-5.0, 0.25, 41).unwrap();
        for branch in [Branch::Lesser, Branch::Greater] {
            let k = b.pi_kernel_time(&p, Block::Transition, branch, &grid).unwrap();
            let n = k.len();
            for i in 0..n {
                let lhs = k.values[n - 1 - i];
                let rhs = -k.values[i].conj();
                assert!((lhs - rhs).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn kernel_parseval() {
        let p = SystemParams::paper_default();
        let b = BathSpectrum::default();
        let dt = 0.05;
        let grid = TimeGrid::new(-200.0, dt, 8001).unwrap();
        let k = pi_kernel_time(&b, &p, Branch::Greater, &grid).unwrap();
        let time_side: f64 = k.values.iter().map(|v| v.norm_sqr() * dt).sum();
        // ∫ Γ(ω)² dω / 2π with Γ = 0.1 J, evaluated in closed form:
        // ∫_0^∞ x⁴ e^{4-4x} dx = e⁴ · 4!/4⁵
        let freq_side = 0.01 * 4f64.exp() * 24.0 / 1024.0 / (2.0 * std::f64::consts::PI);
        assert!((time_side - freq_side).abs() < 1e-6 * freq_side, "{time_side} vs {freq_side}");
    }

    #[test]
    fn kernel_rejects_aliased_grid() {
        let p = SystemParams::paper_default();
        let b = BathSpectrum::default();
        let grid = TimeGrid::new(0.0, 1.0, 5000).unwrap();
        assert!(matches!(pi_kernel_time(&b, &p, Branch::Greater, &grid), Err(Error::GridResolution(_))));
    }

    #[test]
    fn params_validation() {
        assert!(SystemParams::new(1.0, 0.5, 0.001, 0.0).is_err());
        assert!(SystemParams::new(0.0, 1.0, -0.1, 0.0).is_err());
        let p = SystemParams::paper_default();
        assert_eq!(p.omega0, 1.0 + 0.00102);
        let b = BathSpectrum { omega_max: 0.5, ..Default::default() };
        assert!(b.validate(&p).is_err());
        let b = BathSpectrum { n_omega: 1, ..Default::default() };
        assert!(b.validate(&p).is_err());
    }

    #[test]
    fn frames_round_trip() {
        let s = QuantumState { rho11: 0.7, rho22: 0.3, rho12: Complex64::new(0.1, -0.2), frame: Frame::Lab };
        let r = s.in_frame(Frame::Rotating, 1.3, 4.2).in_frame(Frame::Lab, 1.3, 4.2);
        assert!((r.rho12 - s.rho12).norm() < 1e-15);
        let q = QuantumState::from_spin(s.spin(), Frame::Lab);
        assert!((q.rho12 - s.rho12).norm() < 1e-16 && (q.rho11 - s.rho11).abs() < 1e-16);
    }
}

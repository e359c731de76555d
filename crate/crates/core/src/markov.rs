//! Standard Markov Bloch master equation: rates, rotating-frame spin
//! propagation and lab-frame density-matrix propagation.

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::liouvillian::{assemble_bloch4, assemble_spin3, SpinGenerator3};
use crate::model::{drive_field, Block, BathSpectrum, Branch, Frame, QuantumState, SystemParams, TimeGrid, TimeSeries};

/// Population transfer rates `W21 = W(2←1)`, `W12 = W(1←2)` and the
/// dephasing rate `Wd`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovRates {
    pub w21: f64,
    pub w12: f64,
    pub wd: f64,
}

impl MarkovRates {
    /// `1/T1 = W21 + W12`.
    pub fn relaxation(&self) -> f64 {
        self.w21 + self.w12
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w21 >= 0.0 && self.w12 >= 0.0 && self.wd >= 0.0) {
            return Err(invalid("rates", format!("must be nonnegative, got {self:?}")));
        }
        Ok(())
    }
}

/// `W21 = Γ(ω21) N(ω21)`, `W12 = Γ(ω21)(1 + N(ω21))`,
/// `Wd = (W21 + W12)/2 + (Γ11(0) + Γ22(0))/2 · (1 + 2N(0))`.
///
/// `Γaa(0)` is the configured diagonal coupling; `Γ(ω)N(ω)` vanishes as
/// ω → 0⁺, so the zero-frequency bracket reduces to the bare coupling.
pub fn compute_rates(b: &BathSpectrum, p: &SystemParams) -> Result<MarkovRates> {
    let w = p.omega21();
    let w21 = b.occupation_weight(p, Block::Transition, w, Branch::Lesser)?;
    let w12 = b.occupation_weight(p, Block::Transition, w, Branch::Greater)?;
    let wd = 0.5 * (w21 + w12) + 0.5 * (b.diag_coupling11 + b.diag_coupling22);
    Ok(MarkovRates { w21, w12, wd })
}

fn warn_if_underresolved(h: f64, scale: f64, what: &str) {
    if h * scale > 1.0 / 20.0 {
        log::warn!("step {h} resolves {what} = {scale} with fewer than 20 steps per characteristic time");
    }
}

fn rk4_step<const N: usize, T>(y: &[T; N], t: f64, h: f64, f: impl Fn(f64, &[T; N]) -> [T; N]) -> [T; N]
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let axpy = |a: &[T; N], b: &[T; N], s: f64| -> [T; N] { std::array::from_fn(|i| a[i] + b[i] * s) };
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &axpy(y, &k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, &axpy(y, &k2, 0.5 * h));
    let k4 = f(t + h, &axpy(y, &k3, h));
    std::array::from_fn(|i| y[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0))
}

/// Classical RK4 on the affine spin equation, `substeps` internal steps per
/// output interval. Returns `(S̃x, S̃y, Sz)` on `grid`.
pub fn propagate_spin(p: &SystemParams, rates: &MarkovRates, state0: [f64; 3], grid: &TimeGrid, substeps: usize) -> Result<TimeSeries<[f64; 3]>> {
    rates.validate()?;
    if substeps == 0 {
        return Err(invalid("substeps", "must be positive"));
    }
    let gen: SpinGenerator3 = assemble_spin3(p, rates);
    propagate_affine(&gen, state0, grid, substeps, p.mu_e0.max(p.delta.abs()))
}

pub(crate) fn propagate_affine(gen: &SpinGenerator3, state0: [f64; 3], grid: &TimeGrid, substeps: usize, drive_scale: f64) -> Result<TimeSeries<[f64; 3]>> {
    let r = gen.rates();
    let h = grid.dt / substeps as f64;
    warn_if_underresolved(h, r.relaxation().max(r.wd).max(drive_scale), "the fastest spin rate");
    let mut values = Vec::with_capacity(grid.len);
    let mut s = state0;
    values.push(s);
    for n in 1..grid.len {
        for k in 0..substeps {
            let t = grid.t(n - 1) + k as f64 * h;
            s = rk4_step(&s, t, h, |_, x| gen.rhs(x));
        }
        values.push(s);
    }
    Ok(TimeSeries::new(grid.t0, grid.dt, values))
}

/// RK4 on the lab-frame 4×4 Bloch equations with the full cosine drive.
pub fn propagate_lab(p: &SystemParams, rates: &MarkovRates, state0: QuantumState, grid: &TimeGrid, substeps: usize) -> Result<TimeSeries<QuantumState>> {
    rates.validate()?;
    state0.validate()?;
    if substeps == 0 {
        return Err(invalid("substeps", "must be positive"));
    }
    let h = grid.dt / substeps as f64;
    warn_if_underresolved(h, p.omega0 / (2.0 * std::f64::consts::PI), "the drive frequency");
    let s0 = state0.in_frame(Frame::Lab, p.omega0, grid.t0);
    let c = |x: f64| Complex64::new(x, 0.0);
    let mut x = [c(s0.rho11), c(s0.rho22), s0.rho12, s0.rho12.conj()];
    let to_state = |x: &[Complex64; 4]| QuantumState { rho11: x[0].re, rho22: x[1].re, rho12: x[2], frame: Frame::Lab };
    let mut values = Vec::with_capacity(grid.len);
    values.push(to_state(&x));
    for n in 1..grid.len {
        for k in 0..substeps {
            let t = grid.t(n - 1) + k as f64 * h;
            x = rk4_step(&x, t, h, |t, y| assemble_bloch4(p, rates, drive_field(p, t)).apply(y));
        }
        values.push(to_state(&x));
    }
    Ok(TimeSeries::new(grid.t0, grid.dt, values))
}

/// Spin trajectory as rotating-frame states.
pub fn spin_to_states(series: &TimeSeries<[f64; 3]>) -> TimeSeries<QuantumState> {
    series.map(|s| QuantumState::from_spin(*s, Frame::Rotating))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::to_rotating;

    fn paper() -> (SystemParams, MarkovRates) {
        let p = SystemParams::paper_default();
        (p, compute_rates(&BathSpectrum::default(), &p).unwrap())
    }

    #[test]
    fn paper_rates() {
        let (_, r) = paper();
        assert!(r.w21.abs() < 1e-12 && (r.w12 - 0.1).abs() < 1e-12 && (r.wd - 0.05).abs() < 1e-12);
    }

    #[test]
    fn zero_coupling_rates() {
        let p = SystemParams::paper_default();
        let b = BathSpectrum { coupling_rate: 0.0, temperature: 0.4, ..Default::default() };
        assert_eq!(compute_rates(&b, &p).unwrap(), MarkovRates { w21: 0.0, w12: 0.0, wd: 0.0 });
    }

    #[test]
    fn thermal_rates() {
        let p = SystemParams::paper_default();
        let r = compute_rates(&BathSpectrum { temperature: 1.0, ..Default::default() }, &p).unwrap();
        let n = 0.581_976_706_869_326_4;
        assert!((r.w21 - 0.1 * n).abs() < 1e-15);
        assert!((r.w12 - 0.1 * (1.0 + n)).abs() < 1e-15);
        assert!((r.w21 / r.w12 - (-1.0f64).exp()).abs() < 1e-15);
        assert!(r.wd >= 0.5 * r.relaxation());
    }

    #[test]
    fn decay_closed_form() {
        let (p, r) = paper();
        let p = p.with_mu_e0(0.0);
        let grid = TimeGrid::span(200.0, 0.01).unwrap();
        let s = propagate_spin(&p, &r, [0.0, 0.0, 1.0], &grid, 1).unwrap();
        for (n, v) in s.values.iter().enumerate() {
            let t = grid.t(n);
            assert!((v[2] - (-1.0 + 2.0 * (-0.1 * t).exp())).abs() < 1e-8);
        }
        assert!((s.values.last().unwrap()[2] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn rabi_closed_form() {
        let p = SystemParams::new(0.0, 1.0, 0.05, 0.0).unwrap();
        let r = MarkovRates { w21: 0.0, w12: 0.0, wd: 0.0 };
        let grid = TimeGrid::span(200.0, 0.01).unwrap();
        let s = propagate_spin(&p, &r, [0.0, 0.0, -1.0], &grid, 1).unwrap();
        for (n, v) in s.values.iter().enumerate() {
            assert!((v[2] + (0.05 * grid.t(n)).cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn halving_step_converges() {
        let (p, r) = paper();
        let p = p.with_mu_e0(0.03);
        let grid = TimeGrid::span(200.0, 1.0).unwrap();
        let a = propagate_spin(&p, &r, [0.0, 0.0, -1.0], &grid, 10).unwrap();
        let b = propagate_spin(&p, &r, [0.0, 0.0, -1.0], &grid, 20).unwrap();
        let d = a.values.iter().zip(&b.values).map(|(x, y)| (x[2] - y[2]).abs()).fold(0.0, f64::max);
        assert!(d < 1e-8, "{d}");
    }

    #[test]
    fn lab_frame_invariants_and_rwa() {
        let (p, r) = paper();
        let p = p.with_mu_e0(0.02);
        let grid = TimeGrid::span(200.0, 1.0).unwrap();
        let lab = propagate_lab(&p, &r, QuantumState::ground(), &grid, 50).unwrap();
        for s in &lab.values {
            assert!((s.trace() - 1.0).abs() < 1e-12);
            assert!(s.rho11 >= -1e-10 && s.rho11 <= 1.0 + 1e-10);
            assert!(s.rho12.norm_sqr() <= s.rho11 * s.rho22 + 1e-10);
        }
        let spin = propagate_spin(&p, &r, [0.0, 0.0, -1.0], &grid, 10).unwrap();
        let rot = to_rotating(&lab, &p);
        // Counter-rotating corrections are O(muE0 / omega0).
        let bound = 2.0 * p.mu_e0 / p.omega0;
        for (a, b) in rot.values.iter().zip(&spin.values) {
            let s = a.spin();
            for k in 0..3 {
                assert!((s[k] - b[k]).abs() < bound, "{s:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn lab_matches_spin_without_drive() {
        let (p, r) = paper();
        let p = p.with_mu_e0(0.0);
        let grid = TimeGrid::span(50.0, 0.5).unwrap();
        let s0 = QuantumState::from_spin([0.6, -0.2, 0.3], Frame::Rotating);
        let lab = propagate_lab(&p, &r, s0, &grid, 40).unwrap();
        let spin = propagate_spin(&p, &r, s0.spin(), &grid, 40).unwrap();
        let rot = to_rotating(&lab, &p);
        for (a, b) in rot.values.iter().zip(&spin.values) {
            let s = a.spin();
            for k in 0..3 {
                assert!((s[k] - b[k]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn relaxes_to_equilibrium_without_drive() {
        let (p, r) = paper();
        let p = p.with_mu_e0(0.0);
        let grid = TimeGrid::span(400.0, 1.0).unwrap();
        let s = propagate_spin(&p, &r, [0.3, 0.1, 0.5], &grid, 4).unwrap();
        assert!((s.values.last().unwrap()[2] + 1.0).abs() < 1e-12);
    }
}

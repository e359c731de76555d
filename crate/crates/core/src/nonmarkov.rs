//! Time-nonlocal Bloch equations with memory kernels built from the bath
//! correlation functions.
//!
//! ```text
//! dρ11/dt = 2 μE(t) Im ρ12 + 2 Im ∫ dt' [ K<(t-t') ρ11(t') - K>(t-t') (1 - ρ11(t')) ]
//! dρ12/dt = i ω21 ρ12 - i μE(t) (2ρ11 - 1) - i ∫ dt' Kc(t-t') ρ12(t')
//! ```
//!
//! with `K<(τ) = Π<₁₂(τ)`, `K>(τ) = Π>₁₂(τ) e^{(iω21 - Wd)τ}` and
//! `Kc(τ) = [Π>₁₁(τ) + Π<₂₂(τ) + Π<₁₁(-τ) + Π>₂₂(-τ)] e^{(iω21 - Wd)τ}
//!        + Σ_i e^{-iλ_i τ} [P_i,11 Π>₁₂(-τ) + P_i,22 Π<₁₂(-τ)]`,
//! where `P_i,aa` are the diagonal elements of the population-block
//! eigenprojectors. The history starts at the initial time.
//!
//! The equations are integrated in the lab frame with the full cosine drive.
//! The coherence is advanced as `σ = e^{-iω21 t} ρ12`, an exact change of
//! variables that removes the free oscillation from the quadrature.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::liouvillian::PopulationBlock2;
use crate::markov::MarkovRates;
use crate::model::{drive_field, BathSpectrum, Block, Branch, Frame, QuantumState, SystemParams, TimeGrid, TimeSeries};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Bath correlation functions `Π^≷(τ)` on the lag grid `τ = n h`.
#[derive(Debug, Clone, PartialEq)]
pub struct BathKernels {
    pub h: f64,
    pub transition: [Vec<Complex64>; 2],
    pub level1: [Vec<Complex64>; 2],
    pub level2: [Vec<Complex64>; 2],
}

impl BathKernels {
    /// Samples the bath's correlation functions for lags `0..len`.
    pub fn from_bath(b: &BathSpectrum, p: &SystemParams, h: f64, len: usize) -> Result<Self> {
        let grid = TimeGrid::new(0.0, h, len.max(2))?;
        let pair = |block: Block| -> Result<[Vec<Complex64>; 2]> {
            let scale = match block {
                Block::Transition => b.coupling_rate,
                Block::Level1 => b.diag_coupling11,
                Block::Level2 => b.diag_coupling22,
            };
            if scale == 0.0 {
                return Ok([vec![Complex64::new(0.0, 0.0); len], vec![Complex64::new(0.0, 0.0); len]]);
            }
            let mut l = b.pi_kernel_time(p, block, Branch::Lesser, &grid)?.values;
            let mut g = b.pi_kernel_time(p, block, Branch::Greater, &grid)?.values;
            l.truncate(len);
            g.truncate(len);
            Ok([l, g])
        };
        Ok(Self { h, transition: pair(Block::Transition)?, level1: pair(Block::Level1)?, level2: pair(Block::Level2)? })
    }

    pub fn len(&self) -> usize {
        self.transition[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn idx(branch: Branch) -> usize {
    match branch {
        Branch::Lesser => 0,
        Branch::Greater => 1,
    }
}

/// Tabulated memory kernels on the lag grid `τ = n h`, `n < len`.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryKernels {
    pub h: f64,
    /// `K<(τ)`, multiplies `ρ11(t')`.
    pub pop_lesser: Vec<Complex64>,
    /// `K>(τ)`, multiplies `1 - ρ11(t')`.
    pub pop_greater: Vec<Complex64>,
    /// `Kc(τ)`, multiplies `ρ12(t')`.
    pub coherence: Vec<Complex64>,
    /// Memory cutoff `t_mem = (len - 1) h`.
    pub t_mem: f64,
}

impl MemoryKernels {
    /// Assembles the kernels from sampled bath correlation functions.
    pub fn assemble(bath: &BathKernels, p: &SystemParams, rates: &MarkovRates, pop: &PopulationBlock2) -> Self {
        let w21 = p.omega21();
        let h = bath.h;
        let neg = |v: Complex64| -v.conj();
        let n = bath.len();
        let mut pop_lesser = Vec::with_capacity(n);
        let mut pop_greater = Vec::with_capacity(n);
        let mut coherence = Vec::with_capacity(n);
        let (tl, tg) = (&bath.transition[idx(Branch::Lesser)], &bath.transition[idx(Branch::Greater)]);
        let (l1l, l1g) = (&bath.level1[0], &bath.level1[1]);
        let (l2l, l2g) = (&bath.level2[0], &bath.level2[1]);
        for k in 0..n {
            let tau = k as f64 * h;
            let damped = Complex64::new(-rates.wd, w21).scale(tau).exp();
            pop_lesser.push(tl[k]);
            pop_greater.push(tg[k] * damped);
            let mut kc = (l1g[k] + l2l[k] + neg(l1l[k]) + neg(l2g[k])) * damped;
            for i in 0..2 {
                let phase = (-I * pop.lambda[i] * tau).exp();
                kc += phase * (pop.projector_diag(0, i) * neg(tg[k]) + pop.projector_diag(1, i) * neg(tl[k]));
            }
            coherence.push(kc);
        }
        Self { h, pop_lesser, pop_greater, coherence, t_mem: (n.max(1) - 1) as f64 * h }
    }

    pub fn len(&self) -> usize {
        self.coherence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coherence.is_empty()
    }

    /// Largest `|K(t_mem)| / max_τ |K(τ)|` over the three kernels.
    pub fn tail_ratio(&self) -> f64 {
        [&self.pop_lesser, &self.pop_greater, &self.coherence]
            .iter()
            .map(|k| {
                let peak = k.iter().map(|v| v.norm()).fold(0.0, f64::max);
                let tail = k.last().map_or(0.0, |v| v.norm());
                if peak == 0.0 {
                    0.0
                } else {
                    tail / peak
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Builds the memory kernels for a propagation with internal step `h` up to
/// `horizon`. A cutoff `t_mem` shorter than the horizon truncates the
/// history and is rejected unless every kernel has decayed below 1e-8 of its
/// peak by `t_mem`.
pub fn build_kernels(
    b: &BathSpectrum,
    p: &SystemParams,
    rates: &MarkovRates,
    pop: &PopulationBlock2,
    h: f64,
    horizon: f64,
    t_mem: Option<f64>,
) -> Result<MemoryKernels> {
    let span = t_mem.map_or(horizon, |m| m.min(horizon));
    if !(span >= 0.0) {
        return Err(invalid("tMem", "must be nonnegative"));
    }
    let len = (span / h).round() as usize + 1;
    let bath = BathKernels::from_bath(b, p, h, len)?;
    let kernels = MemoryKernels::assemble(&bath, p, rates, pop);
    if span < horizon {
        let ratio = kernels.tail_ratio();
        if ratio > 1e-8 {
            return Err(Error::KernelCutoff { ratio });
        }
    }
    Ok(kernels)
}

/// Second-order predictor-corrector for the Volterra system. History
/// integrals use the trapezoid rule over `[max(0, t - t_mem), t]`; the new
/// end point is resolved by fixed-point iteration of the implicit trapezoid
/// step. Output is sampled on `grid` from `substeps` internal steps per
/// output interval; the kernels must be tabulated at that internal step.
pub fn propagate_volterra(p: &SystemParams, kernels: &MemoryKernels, state0: QuantumState, grid: &TimeGrid, substeps: usize) -> Result<TimeSeries<QuantumState>> {
    state0.validate()?;
    if substeps == 0 {
        return Err(invalid("substeps", "must be positive"));
    }
    let h = grid.dt / substeps as f64;
    if (kernels.h - h).abs() > 1e-12 * h {
        return Err(invalid("kernels", format!("tabulated at step {} but propagation uses {h}", kernels.h)));
    }
    if h > 0.1 + 1e-12 {
        return Err(invalid("dt", format!("internal step {h} exceeds 0.1 and cannot resolve the lab-frame phase")));
    }
    if kernels.is_empty() {
        return Err(invalid("kernels", "empty"));
    }
    let w21 = p.omega21();
    let fine = grid.refined(substeps);
    let n_steps = fine.len;
    let lmax = kernels.len() - 1;

    let s0 = state0.in_frame(Frame::Lab, p.omega0, grid.t0);
    let mut r = Vec::with_capacity(n_steps);
    let mut s = Vec::with_capacity(n_steps);
    r.push(s0.rho11);
    s.push(s0.rho12 * Complex64::from_polar(1.0, -w21 * grid.t0));

    // Trapezoid history over k in [lo, n], excluding the k = n end point.
    let partial = |r: &[f64], s: &[Complex64], n: usize| -> (Complex64, Complex64) {
        if n == 0 {
            return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        }
        let lo = n.saturating_sub(lmax);
        let mut hr = Complex64::new(0.0, 0.0);
        let mut hs = Complex64::new(0.0, 0.0);
        for k in lo..n {
            let lag = n - k;
            let w = if k == lo { 0.5 * h } else { h };
            let phase = Complex64::from_polar(1.0, -w21 * lag as f64 * h);
            hr += (kernels.pop_lesser[lag] * r[k] - kernels.pop_greater[lag] * (1.0 - r[k])) * w;
            hs += kernels.coherence[lag] * phase * s[k] * w;
        }
        (hr, hs)
    };
    let endpoint = |rn: f64, sn: Complex64, n: usize| -> (Complex64, Complex64) {
        if n == 0 {
            return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        }
        let w = 0.5 * h;
        ((kernels.pop_lesser[0] * rn - kernels.pop_greater[0] * (1.0 - rn)) * w, kernels.coherence[0] * sn * w)
    };
    let rhs = |n: usize, rn: f64, sn: Complex64, hr: Complex64, hs: Complex64| -> (f64, Complex64) {
        let t = fine.t(n);
        let e = drive_field(p, t);
        let rho12 = sn * Complex64::from_polar(1.0, w21 * t);
        let dr = 2.0 * e * rho12.im + 2.0 * hr.im;
        let ds = -I * e * (2.0 * rn - 1.0) * Complex64::from_polar(1.0, -w21 * t) - I * hs;
        (dr, ds)
    };

    let (hr0, hs0) = partial(&r, &s, 0);
    let (mut fr, mut fs) = rhs(0, r[0], s[0], hr0, hs0);
    let mut warned = false;
    for n in 0..n_steps - 1 {
        let (pr, ps) = partial(&r, &s, n + 1);
        let mut rn = r[n] + h * fr;
        let mut sn = s[n] + fs * h;
        let mut f_new = (fr, fs);
        for _ in 0..50 {
            let (er, es) = endpoint(rn, sn, n + 1);
            f_new = rhs(n + 1, rn, sn, pr + er, ps + es);
            let rn_next = r[n] + 0.5 * h * (fr + f_new.0);
            let sn_next = s[n] + (fs + f_new.1) * (0.5 * h);
            let change = (rn_next - rn).abs().max((sn_next - sn).norm());
            rn = rn_next;
            sn = sn_next;
            if change < 1e-15 {
                break;
            }
        }
        if !(rn.abs() <= 1.0 + 1e-3) {
            return Err(Error::Unstable { t: fine.t(n + 1), rho11: rn });
        }
        if !warned && (rn < -1e-3 || sn.norm_sqr() > rn * (1.0 - rn) + 1e-3) {
            log::debug!("positivity violated beyond 1e-3 at t = {}", fine.t(n + 1));
            warned = true;
        }
        r.push(rn);
        s.push(sn);
        fr = f_new.0;
        fs = f_new.1;
    }

    let values = (0..grid.len)
        .map(|n| {
            let k = n * substeps;
            let t = fine.t(k);
            QuantumState { rho11: r[k], rho22: 1.0 - r[k], rho12: s[k] * Complex64::from_polar(1.0, w21 * t), frame: Frame::Lab }
        })
        .collect();
    Ok(TimeSeries::new(grid.t0, grid.dt, values))
}

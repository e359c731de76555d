//! Bloch equations with dissipation-renormalized rates W̄.
//!
//! The transfer rates are Lorentzian-weighted averages of `Π^≷₁₂,₁₂(ω)`
//! around ω21 with the bare dephasing width; the dephasing rate collects the
//! diagonal-block terms and the population-eigenmode-weighted transition
//! terms. Integrals use the composite trapezoid rule on the bath grid.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::liouvillian::PopulationBlock2;
use crate::markov::{propagate_spin, MarkovRates};
use crate::model::{BathSpectrum, Block, Branch, SystemParams, TimeGrid, TimeSeries};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Normalization of the transfer-rate integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransferNormalization {
    /// `W̄ = -i ∫ dω/2π Π(ω) Im[1/(ω - ω21 + iWd)]` as written. In the
    /// narrow-linewidth limit this tends to W/2.
    Literal,
    /// The literal integral times two, so that W̄ → W in the narrow-linewidth
    /// limit, matching the `2 Im` prefactor of the time-nonlocal equations.
    #[default]
    MarkovConsistent,
}

impl TransferNormalization {
    fn factor(self) -> f64 {
        match self {
            TransferNormalization::Literal => 1.0,
            TransferNormalization::MarkovConsistent => 2.0,
        }
    }
}

/// Complex rate integrals; the propagator uses their real parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenormalizedRates {
    pub w21bar: Complex64,
    pub w12bar: Complex64,
    pub wdbar: Complex64,
    pub delta_reg: f64,
    pub normalization: TransferNormalization,
}

impl RenormalizedRates {
    /// Real parts as ordinary rates.
    pub fn physical(&self) -> MarkovRates {
        MarkovRates { w21: self.w21bar.re, w12: self.w12bar.re, wd: self.wdbar.re }
    }
}

/// Regularizer used when none is given: ten frequency-grid spacings.
pub fn default_delta_reg(b: &BathSpectrum) -> f64 {
    10.0 * b.d_omega()
}

/// Evaluates the renormalized rates. `rates` are the bare Markov rates
/// (they set the Lorentzian widths); `pop` supplies the population-block
/// eigenprojectors.
pub fn renormalized_rates(
    b: &BathSpectrum,
    p: &SystemParams,
    rates: &MarkovRates,
    pop: &PopulationBlock2,
    delta_reg: Option<f64>,
    normalization: TransferNormalization,
) -> Result<RenormalizedRates> {
    b.validate(p)?;
    let dw = b.d_omega();
    let delta = delta_reg.unwrap_or_else(|| default_delta_reg(b));
    if !(delta >= dw) {
        return Err(invalid("deltaReg", format!("must be at least the grid spacing {dw}, got {delta}")));
    }
    let zero = Complex64::new(0.0, 0.0);
    if rates.wd == 0.0 {
        return Ok(RenormalizedRates { w21bar: zero, w12bar: zero, wdbar: zero, delta_reg: delta, normalization });
    }
    if rates.wd / dw < 20.0 {
        return Err(Error::QuadratureResolution(format!(
            "dephasing width {} is sampled by fewer than 20 points (dOmega = {dw})",
            rates.wd
        )));
    }

    let w21 = p.omega21();
    let relax = rates.relaxation();
    let two_pi = 2.0 * std::f64::consts::PI;
    let p1 = [pop.projector_diag(0, 0), pop.projector_diag(1, 0)];
    let p2 = [pop.projector_diag(0, 1), pop.projector_diag(1, 1)];

    let mut up = zero;
    let mut down = zero;
    let mut deph = zero;
    for (w, q) in b.omega_grid().into_iter().zip(b.trapezoid_weights()) {
        let pi = |block, branch| b.pi_freq(p, block, branch, w);
        let (tl, tg) = (pi(Block::Transition, Branch::Lesser), pi(Block::Transition, Branch::Greater));
        let lorentz = (1.0 / Complex64::new(w - w21, rates.wd)).im;
        up += tl * lorentz * q;
        down += tg * lorentz * q;

        let diag_in = pi(Block::Level1, Branch::Lesser) + pi(Block::Level2, Branch::Greater);
        let diag_out = pi(Block::Level1, Branch::Greater) + pi(Block::Level2, Branch::Lesser);
        let mut term = zero;
        if diag_in != zero {
            term += diag_in / Complex64::new(w, rates.wd);
        }
        if diag_out != zero {
            term -= diag_out / Complex64::new(w, -rates.wd);
        }
        term += (p1[0] * tg + p1[1] * tl) / Complex64::new(w - w21, delta);
        term += (p2[0] * tg + p2[1] * tl) / Complex64::new(w - w21, relax);
        deph += term * q;
    }
    let f = normalization.factor();
    Ok(RenormalizedRates {
        w21bar: -I * up / two_pi * f,
        w12bar: -I * down / two_pi * f,
        wdbar: -deph / two_pi,
        delta_reg: delta,
        normalization,
    })
}

/// Spin propagation with `W → Re W̄`.
pub fn propagate_generalized(p: &SystemParams, rbar: &RenormalizedRates, state0: [f64; 3], grid: &TimeGrid, substeps: usize) -> Result<TimeSeries<[f64; 3]>> {
    propagate_spin(p, &rbar.physical(), state0, grid, substeps)
}

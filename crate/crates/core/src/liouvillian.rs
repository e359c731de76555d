//! Generators of the Markov dynamics and their eigendecompositions.
//!
//! Every generator is stored as the real-time matrix `M` of `dx/dt = M x`.
//! Eigenvalues are reported in the `e^{-iλt}` convention, `λ = i m` for an
//! eigenvalue `m` of `M`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::markov::MarkovRates;
use crate::model::SystemParams;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Condition number of the eigenvector matrix above which a generator is
/// reported as near-defective.
pub const NEAR_DEFECTIVE_CONDITION: f64 = 1e10;

/// Anything that can be expressed as a dense complex real-time generator.
pub trait Generator {
    fn to_cmat(&self) -> CMat;
}

/// Lab-frame Bloch generator acting on `(rho11, rho22, rho12, rho21)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochGenerator4 {
    pub matrix: [[Complex64; 4]; 4],
}

impl Generator for BlochGenerator4 {
    fn to_cmat(&self) -> CMat {
        linalg::cmat_from_rows(&self.matrix)
    }
}

impl BlochGenerator4 {
    pub fn apply(&self, x: &[Complex64; 4]) -> [Complex64; 4] {
        let mut y = [Complex64::new(0.0, 0.0); 4];
        for (yi, row) in y.iter_mut().zip(&self.matrix) {
            *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        y
    }
}

/// Bloch generator at drive value `et = μE(t)`.
pub fn assemble_bloch4(p: &SystemParams, rates: &MarkovRates, et: f64) -> BlochGenerator4 {
    let z = Complex64::new(0.0, 0.0);
    let r = |x: f64| Complex64::new(x, 0.0);
    let e = I * et;
    let w21 = p.omega21();
    BlochGenerator4 {
        matrix: [
            [r(-rates.w21), r(rates.w12), -e, e],
            [r(rates.w21), r(-rates.w12), e, -e],
            [-e, e, I * w21 - rates.wd, z],
            [e, -e, z, -I * w21 - rates.wd],
        ],
    }
}

/// Rotating-frame spin generator on `(S̃x, S̃y, Sz)` with affine source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinGenerator3 {
    pub matrix: [[f64; 3]; 3],
    /// `(0, 0, Sz⁰/T1)`; equal to `(0, 0, W21 - W12)`.
    pub source: [f64; 3],
    rates: MarkovRates,
}

impl SpinGenerator3 {
    pub fn rates(&self) -> MarkovRates {
        self.rates
    }

    /// `Sz⁰ = (W21 - W12) / (W21 + W12)`.
    pub fn sz0(&self) -> Result<f64> {
        let s = self.rates.w21 + self.rates.w12;
        if s == 0.0 {
            return Err(Error::UndefinedEquilibrium);
        }
        Ok((self.rates.w21 - self.rates.w12) / s)
    }

    /// Right-hand side `M s + source`.
    pub fn rhs(&self, s: &[f64; 3]) -> [f64; 3] {
        let m = &self.matrix;
        let mut out = self.source;
        for i in 0..3 {
            out[i] += m[i][0] * s[0] + m[i][1] * s[1] + m[i][2] * s[2];
        }
        out
    }
}

impl Generator for SpinGenerator3 {
    fn to_cmat(&self) -> CMat {
        CMat::from_fn(3, 3, |i, j| Complex64::new(self.matrix[i][j], 0.0))
    }
}

pub fn assemble_spin3(p: &SystemParams, rates: &MarkovRates) -> SpinGenerator3 {
    let g1 = rates.w21 + rates.w12;
    let g2 = rates.wd;
    let a = p.mu_e0;
    let d = p.delta;
    SpinGenerator3 {
        matrix: [[-g2, d, 0.0], [-d, -g2, a], [0.0, -a, -g1]],
        source: [0.0, 0.0, rates.w21 - rates.w12],
        rates: *rates,
    }
}

/// Drive-free population dynamics on `(rho11, rho22)` with its
/// eigendecomposition. `lambda[0] = 0` is the stationary mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationBlock2 {
    pub matrix: [[f64; 2]; 2],
    pub lambda: [Complex64; 2],
    pub vr: [[Complex64; 2]; 2],
    pub vr_inv: [[Complex64; 2]; 2],
}

impl PopulationBlock2 {
    /// `V^R_{aa,i} [V^R]^{-1}_{i,aa}` for population index `a` and mode `i`.
    pub fn projector_diag(&self, a: usize, i: usize) -> Complex64 {
        self.vr[a][i] * self.vr_inv[i][a]
    }
}

impl Generator for PopulationBlock2 {
    fn to_cmat(&self) -> CMat {
        CMat::from_fn(2, 2, |i, j| Complex64::new(self.matrix[i][j], 0.0))
    }
}

/// Population block built analytically so that `lambda[0] = 0` exactly and
/// `lambda[1] = -i (W21 + W12)`.
pub fn population_block(rates: &MarkovRates) -> PopulationBlock2 {
    let (up, down) = (rates.w21, rates.w12);
    let matrix = [[-up, down], [up, -down]];
    let c = |x: f64| Complex64::new(x, 0.0);
    let s = up + down;
    if s == 0.0 {
        let id = [[c(1.0), c(0.0)], [c(0.0), c(1.0)]];
        return PopulationBlock2 { matrix, lambda: [c(0.0); 2], vr: id, vr_inv: id };
    }
    let n1 = down.hypot(up);
    let v1 = [down / n1, up / n1];
    let v2 = [std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2];
    let vr = [[v1[0], v2[0]], [v1[1], v2[1]]];
    let det = vr[0][0] * vr[1][1] - vr[0][1] * vr[1][0];
    let vr_inv = [[vr[1][1] / det, -vr[0][1] / det], [-vr[1][0] / det, vr[0][0] / det]];
    PopulationBlock2 {
        matrix,
        lambda: [c(0.0), Complex64::new(0.0, -s)],
        vr: vr.map(|r| r.map(c)),
        vr_inv: vr_inv.map(|r| r.map(c)),
    }
}

/// Eigenvalues `λ` (e^{-iλt} convention), unit-norm right eigenvectors and
/// their explicit inverse.
#[derive(Debug, Clone)]
pub struct Eigendecomposition {
    pub lambda: Vec<Complex64>,
    pub vr: CMat,
    pub vr_inv: CMat,
    /// 2-norm condition number of `vr`.
    pub condition: f64,
}

impl Eigendecomposition {
    pub fn near_defective(&self) -> bool {
        self.condition > NEAR_DEFECTIVE_CONDITION
    }

    /// `V diag(-iλ) V⁻¹`, the real-time generator.
    pub fn reconstruct(&self) -> CMat {
        let n = self.lambda.len();
        let mut scaled = self.vr.clone();
        for j in 0..n {
            let m = -I * self.lambda[j];
            for i in 0..n {
                scaled[(i, j)] *= m;
            }
        }
        &scaled * &self.vr_inv
    }
}

/// Near-defective generators (eigenvector condition number above
/// [`NEAR_DEFECTIVE_CONDITION`]) are logged and returned, not rejected.
pub fn eigendecompose<G: Generator + ?Sized>(generator: &G) -> Result<Eigendecomposition> {
    let m = generator.to_cmat();
    let (values, vr) = linalg::eig(&m)?;
    let condition = linalg::condition_number(&vr)?;
    if condition > NEAR_DEFECTIVE_CONDITION {
        log::warn!("near-defective generator: eigenvector condition number {condition:.3e}");
    }
    let vr_inv = linalg::inverse(&vr);
    Ok(Eigendecomposition { lambda: values.into_iter().map(|v| I * v).collect(), vr, vr_inv, condition })
}

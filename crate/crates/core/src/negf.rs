//! Two-time Kadanoff-Baym propagation of the lesser and greater Green's
//! functions with a Hartree-Fock self-energy.
//!
//! Conventions: `G<_ij(t1,t2) = i<d_j†(t2) d_i(t1)>`,
//! `G>_ij(t1,t2) = -i<d_i(t1) d_j†(t2)>`, so `ρ(t) = -i G<(t,t)` and
//! `G>(t,t) - G<(t,t) = -i`. The bath couples only through the transition
//! block and, optionally, the diagonal blocks, which makes the Fock
//! self-energy diagonal:
//!
//! ```text
//! Σ≷_11 = i[Π≷_11(τ) + Π≶_11(-τ)] G≷_11 + i Π≶_12(-τ) G≷_22
//! Σ≷_22 = i[Π≷_22(τ) + Π≶_22(-τ)] G≷_22 + i Π≷_12(τ) G≷_11
//! ```
//!
//! with `τ = t1 - t2`. The Hartree term collapses to
//! `Σ^H_12 = -κ ρ12`, `Σ^H_21 = -κ ρ21` where `-κ = Π^r_12(ω = 0)`,
//! `κ = ∫ dω/2π Γ(ω)/ω`.
//!
//! Rows `G(t_{n+1}, t_m)` are advanced along the first time argument with an
//! exponential trapezoid rule; the propagator over each step is built from
//! fourth-order Magnus substeps with the exact cosine drive. The equal-time
//! point follows from `dG</dt = -i[h, G<] - i(I + I†)`. The upper triangle
//! is filled by skew-hermiticity, so that invariant holds exactly.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::model::{drive_field, BathSpectrum, Block, Branch, Frame, QuantumState, SystemParams, TimeGrid, TimeSeries};
use crate::nonmarkov::BathKernels;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Row-major 2×2 complex block `[a00, a01, a10, a11]`.
pub type Mat2 = [Complex64; 4];

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]]
}

fn adj(a: &Mat2) -> Mat2 {
    [a[0].conj(), a[2].conj(), a[1].conj(), a[3].conj()]
}

fn add(a: &Mat2, b: &Mat2) -> Mat2 {
    std::array::from_fn(|i| a[i] + b[i])
}

fn sub(a: &Mat2, b: &Mat2) -> Mat2 {
    std::array::from_fn(|i| a[i] - b[i])
}

fn scale(a: &Mat2, s: Complex64) -> Mat2 {
    std::array::from_fn(|i| a[i] * s)
}

fn max_diff(a: &Mat2, b: &Mat2) -> f64 {
    (0..4).map(|i| (a[i] - b[i]).norm()).fold(0.0, f64::max)
}

const IDENTITY: Mat2 = [Complex64::new(1.0, 0.0), ZERO, ZERO, Complex64::new(1.0, 0.0)];

/// `exp(-i M)` for hermitian `M`.
fn exp_herm(m: &Mat2) -> Mat2 {
    let a = 0.5 * (m[0].re + m[3].re);
    let bz = 0.5 * (m[0].re - m[3].re);
    let b = (bz * bz + m[1].norm_sqr()).sqrt();
    let phase = Complex64::from_polar(1.0, -a);
    let (c, sinc) = if b > 0.0 { (b.cos(), b.sin() / b) } else { (1.0, 1.0) };
    let traceless = [Complex64::new(bz, 0.0), m[1], m[2], Complex64::new(-bz, 0.0)];
    let u = [
        Complex64::new(c, 0.0) - I * sinc * traceless[0],
        -I * sinc * traceless[1],
        -I * sinc * traceless[2],
        Complex64::new(c, 0.0) - I * sinc * traceless[3],
    ];
    scale(&u, phase)
}

fn density_matrix(s: &QuantumState) -> Mat2 {
    [Complex64::new(s.rho11, 0.0), s.rho12, s.rho12.conj(), Complex64::new(s.rho22, 0.0)]
}

/// Two-time lesser and greater functions on an `n × n` grid, stored row-major
/// over `(t1, t2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoTimeGF {
    pub n: usize,
    pub dt: f64,
    pub t0: f64,
    less: Vec<Mat2>,
    gtr: Vec<Mat2>,
}

impl TwoTimeGF {
    fn zeros(n: usize, dt: f64, t0: f64) -> Self {
        Self { n, dt, t0, less: vec![[ZERO; 4]; n * n], gtr: vec![[ZERO; 4]; n * n] }
    }

    pub fn get(&self, branch: Branch, i: usize, j: usize) -> Mat2 {
        match branch {
            Branch::Lesser => self.less[i * self.n + j],
            Branch::Greater => self.gtr[i * self.n + j],
        }
    }

    fn set_pair(&mut self, i: usize, j: usize, less: Mat2, gtr: Mat2) {
        let n = self.n;
        self.less[i * n + j] = less;
        self.gtr[i * n + j] = gtr;
        if i != j {
            self.less[j * n + i] = scale(&adj(&less), Complex64::new(-1.0, 0.0));
            self.gtr[j * n + i] = scale(&adj(&gtr), Complex64::new(-1.0, 0.0));
        }
    }

    /// `ρ(t_i) = -i G<(t_i, t_i)` in the lab frame.
    pub fn density(&self, i: usize) -> QuantumState {
        let g = self.get(Branch::Lesser, i, i);
        let rho = scale(&g, -I);
        QuantumState { rho11: rho[0].re, rho22: rho[3].re, rho12: rho[1], frame: Frame::Lab }
    }

    /// Largest violation of `G≷(t1,t2) = -[G≷(t2,t1)]†` over the grid.
    pub fn skew_hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..=i {
                for b in [Branch::Lesser, Branch::Greater] {
                    let x = self.get(b, i, j);
                    let y = scale(&adj(&self.get(b, j, i)), Complex64::new(-1.0, 0.0));
                    worst = worst.max(max_diff(&x, &y));
                }
            }
        }
        worst
    }

    /// Largest violation of `G>(t,t) - G<(t,t) = -i`.
    pub fn equal_time_error(&self) -> f64 {
        (0..self.n)
            .map(|i| max_diff(&sub(&self.get(Branch::Greater, i, i), &self.get(Branch::Lesser, i, i)), &scale(&IDENTITY, -I)))
            .fold(0.0, f64::max)
    }

    /// Writes `G<` then `G>`, each row-major over `(t1, t2)` with row-major
    /// 2×2 blocks of `(re, im)` pairs as little-endian `f64`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for grid in [&self.less, &self.gtr] {
            for block in grid {
                for z in block {
                    w.write_all(&z.re.to_le_bytes())?;
                    w.write_all(&z.im.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }
}

/// Lag-tabulated Fock coefficients and the Hartree constant.
#[derive(Debug, Clone, PartialEq)]
pub struct NegfKernels {
    pub dt: f64,
    /// `[a11, b11, a22, b22]` per lag for the lesser branch, so that
    /// `Σ<_11 = a11 G<_11 + b11 G<_22` and `Σ<_22 = a22 G<_22 + b22 G<_11`.
    pub less: Vec<[Complex64; 4]>,
    /// Same layout for the greater branch.
    pub gtr: Vec<[Complex64; 4]>,
    /// `κ = ∫ dω/2π Γ(ω)/ω` of the transition block.
    pub kappa: f64,
}

impl NegfKernels {
    pub fn from_bath(b: &BathSpectrum, p: &SystemParams, dt: f64, len: usize) -> Result<Self> {
        let bath = BathKernels::from_bath(b, p, dt, len)?;
        Ok(Self::assemble(&bath, hartree_kappa(b, p)?))
    }

    pub fn assemble(bath: &BathKernels, kappa: f64) -> Self {
        let neg = |v: Complex64| -v.conj();
        let (l, g) = (0, 1);
        let build = |this: usize, other: usize| -> Vec<[Complex64; 4]> {
            (0..bath.len())
                .map(|k| {
                    [
                        I * (bath.level1[this][k] + neg(bath.level1[other][k])),
                        I * neg(bath.transition[other][k]),
                        I * (bath.level2[this][k] + neg(bath.level2[other][k])),
                        I * bath.transition[this][k],
                    ]
                })
                .collect()
        };
        Self { dt: bath.h, less: build(l, g), gtr: build(g, l), kappa }
    }

    pub fn len(&self) -> usize {
        self.less.len()
    }

    pub fn is_empty(&self) -> bool {
        self.less.is_empty()
    }

    /// Diagonal Fock self-energy `(Σ_11, Σ_22)` at nonnegative lag index.
    pub fn fock(&self, branch: Branch, lag: usize, g: &Mat2) -> [Complex64; 2] {
        let c = match branch {
            Branch::Lesser => &self.less[lag],
            Branch::Greater => &self.gtr[lag],
        };
        [c[0] * g[0] + c[1] * g[3], c[2] * g[3] + c[3] * g[0]]
    }

    /// Hartree self-energy for the density matrix `rho`.
    pub fn hartree(&self, rho: &Mat2) -> Mat2 {
        [ZERO, -self.kappa * rho[1], -self.kappa * rho[2], ZERO]
    }
}

/// `κ = ∫ dω/2π Γ(ω)/ω` on the bath grid (the integrand vanishes at ω = 0).
pub fn hartree_kappa(b: &BathSpectrum, p: &SystemParams) -> Result<f64> {
    b.validate(p)?;
    let mut acc = 0.0;
    for (w, q) in b.omega_grid().into_iter().zip(b.trapezoid_weights()) {
        if w > 0.0 {
            acc += q * b.gamma_block(p, Block::Transition, w)? / w;
        }
    }
    Ok(acc / (2.0 * std::f64::consts::PI))
}

/// Hartree-Fock self-energy over a filled two-time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfEnergyHF {
    pub n: usize,
    /// Time-local Hartree block per time point.
    pub hartree: Vec<Mat2>,
    /// Diagonal Fock lesser `(Σ_11, Σ_22)`, row-major over `(t1, t2)`.
    pub fock_less: Vec<[Complex64; 2]>,
    pub fock_gtr: Vec<[Complex64; 2]>,
}

/// Evaluates the Hartree-Fock self-energy on every grid pair. Pairs with
/// `t1 < t2` use `Σ≷(t1,t2) = -[Σ≷(t2,t1)]*` for the diagonal entries.
pub fn hf_selfenergy(g: &TwoTimeGF, kernels: &NegfKernels) -> Result<SelfEnergyHF> {
    if kernels.len() < g.n {
        return Err(invalid("kernels", format!("{} lags cannot cover a grid of {}", kernels.len(), g.n)));
    }
    let n = g.n;
    let mut fock_less = vec![[ZERO; 2]; n * n];
    let mut fock_gtr = vec![[ZERO; 2]; n * n];
    for i in 0..n {
        for j in 0..=i {
            let l = kernels.fock(Branch::Lesser, i - j, &g.get(Branch::Lesser, i, j));
            let r = kernels.fock(Branch::Greater, i - j, &g.get(Branch::Greater, i, j));
            fock_less[i * n + j] = l;
            fock_gtr[i * n + j] = r;
            fock_less[j * n + i] = [-l[0].conj(), -l[1].conj()];
            fock_gtr[j * n + i] = [-r[0].conj(), -r[1].conj()];
        }
    }
    let hartree = (0..n).map(|i| kernels.hartree(&density_matrix(&g.density(i)))).collect();
    Ok(SelfEnergyHF { n, hartree, fock_less, fock_gtr })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegfSettings {
    /// Include the Hartree term.
    pub hartree: bool,
    /// Per-step fixed-point tolerance on the new row.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Largest Magnus substep used to build the one-step propagator.
    pub magnus_step: f64,
}

impl Default for NegfSettings {
    fn default() -> Self {
        Self { hartree: true, tolerance: 1e-10, max_iterations: 50, magnus_step: 0.01 }
    }
}

#[derive(Debug, Clone)]
pub struct KbOutput {
    /// Lab-frame density matrices on the grid.
    pub states: TimeSeries<QuantumState>,
    pub gf: TwoTimeGF,
    /// Largest number of fixed-point iterations used by any step.
    pub max_iterations_used: usize,
}

struct Propagator<'a> {
    p: &'a SystemParams,
    kernels: &'a NegfKernels,
    hartree: bool,
    substeps: usize,
}

impl Propagator<'_> {
    fn h(&self, t: f64, rho: &Mat2) -> Mat2 {
        let e = drive_field(self.p, t);
        let mut h = [Complex64::new(self.p.eps1, 0.0), Complex64::new(-e, 0.0), Complex64::new(-e, 0.0), Complex64::new(self.p.eps2, 0.0)];
        if self.hartree {
            h = add(&h, &self.kernels.hartree(rho));
        }
        h
    }

    /// Time-ordered exponential over `[t, t + dt]`. Inside the step the
    /// density matrix is interpolated linearly in the frame co-rotating at
    /// ω21, so the free precession of the coherence is carried exactly.
    fn step(&self, t: f64, dt: f64, rho0: &Mat2, rho1: &Mat2) -> Mat2 {
        let d = dt / self.substeps as f64;
        let c = 3f64.sqrt() / 6.0;
        let w21 = self.p.omega21();
        let rho_at = |s: f64| {
            let r12 = Complex64::from_polar(1.0, w21 * s * dt) * (rho0[1] * (1.0 - s) + rho1[1] * Complex64::from_polar(1.0, -w21 * dt) * s);
            let r11 = rho0[0] * (1.0 - s) + rho1[0] * s;
            let r22 = rho0[3] * (1.0 - s) + rho1[3] * s;
            [r11, r12, r12.conj(), r22]
        };
        let mut u = IDENTITY;
        for k in 0..self.substeps {
            let (s1, s2) = ((k as f64 + 0.5 - c) / self.substeps as f64, (k as f64 + 0.5 + c) / self.substeps as f64);
            let h1 = self.h(t + s1 * dt, &rho_at(s1));
            let h2 = self.h(t + s2 * dt, &rho_at(s2));
            let comm = sub(&mul(&h2, &h1), &mul(&h1, &h2));
            let m = add(&scale(&add(&h1, &h2), Complex64::new(0.5 * d, 0.0)), &scale(&comm, -I * (3f64.sqrt() / 12.0) * d * d));
            u = mul(&exp_herm(&m), &u);
        }
        u
    }
}

/// Trapezoid weight for node `k` of an integral over nodes `0..=last`.
fn trap(k: usize, last: usize, dt: f64) -> f64 {
    if last == 0 {
        0.0
    } else if k == 0 || k == last {
        0.5 * dt
    } else {
        dt
    }
}

/// Collision integrals `I≷(t_r, t_m)` for `m ≤ r`, given the diagonal
/// self-energies `Σ≷(t_r, t_k)` for `k ≤ r`:
/// `I≷ = ∫_0^{t_r} (Σ> - Σ<) G≷(·, t_m) - ∫_0^{t_m} Σ≷ (G> - G<)(·, t_m)`.
fn collision_row(g: &TwoTimeGF, r: usize, sig_less: &[[Complex64; 2]], sig_gtr: &[[Complex64; 2]]) -> [Vec<Mat2>; 2] {
    let n = g.n;
    let len = r + 1;
    let mut out_less = vec![[ZERO; 4]; len];
    let mut out_gtr = vec![[ZERO; 4]; len];
    for k in 0..len {
        let w = trap(k, r, g.dt);
        if w != 0.0 {
            let d = [(sig_gtr[k][0] - sig_less[k][0]) * w, (sig_gtr[k][1] - sig_less[k][1]) * w];
            let rl = &g.less[k * n..k * n + len];
            let rg = &g.gtr[k * n..k * n + len];
            for ((o, x), (q, y)) in out_less.iter_mut().zip(rl).zip(out_gtr.iter_mut().zip(rg)) {
                o[0] += d[0] * x[0];
                o[1] += d[0] * x[1];
                o[2] += d[1] * x[2];
                o[3] += d[1] * x[3];
                q[0] += d[0] * y[0];
                q[1] += d[0] * y[1];
                q[2] += d[1] * y[2];
                q[3] += d[1] * y[3];
            }
        }
        // Second integral: column m ≥ k, nodes 0..=m.
        let sl = sig_less[k];
        let sg = sig_gtr[k];
        for m in k.max(1)..len {
            let w = if k == 0 || k == m { 0.5 * g.dt } else { g.dt };
            let x = g.less[k * n + m];
            let y = g.gtr[k * n + m];
            let a = [y[0] - x[0], y[1] - x[1], y[2] - x[2], y[3] - x[3]];
            let (l0, l1, g0, g1) = (sl[0] * w, sl[1] * w, sg[0] * w, sg[1] * w);
            let o = &mut out_less[m];
            o[0] -= l0 * a[0];
            o[1] -= l0 * a[1];
            o[2] -= l1 * a[2];
            o[3] -= l1 * a[3];
            let q = &mut out_gtr[m];
            q[0] -= g0 * a[0];
            q[1] -= g0 * a[1];
            q[2] -= g1 * a[2];
            q[3] -= g1 * a[3];
        }
    }
    [out_less, out_gtr]
}

/// Kadanoff-Baym propagation on `grid` starting from an uncorrelated
/// system-bath state with density matrix `state0`.
pub fn propagate_kb(p: &SystemParams, b: &BathSpectrum, state0: QuantumState, grid: &TimeGrid, s: &NegfSettings) -> Result<KbOutput> {
    let kernels = NegfKernels::from_bath(b, p, grid.dt, grid.len)?;
    propagate_kb_with(p, &kernels, state0, grid, s)
}

/// As [`propagate_kb`] with precomputed kernels tabulated at the grid step.
pub fn propagate_kb_with(p: &SystemParams, kernels: &NegfKernels, state0: QuantumState, grid: &TimeGrid, s: &NegfSettings) -> Result<KbOutput> {
    p.validate()?;
    state0.validate()?;
    if (kernels.dt - grid.dt).abs() > 1e-12 * grid.dt || kernels.len() < grid.len {
        return Err(invalid("kernels", "must be tabulated at the grid step over the full horizon"));
    }
    if !(s.tolerance > 0.0) || s.max_iterations == 0 || !(s.magnus_step > 0.0) {
        return Err(invalid("negf", format!("bad settings {s:?}")));
    }
    let n_pts = grid.len;
    let dt = grid.dt;
    let prop = Propagator { p, kernels, hartree: s.hartree, substeps: (dt / s.magnus_step).ceil().max(1.0) as usize };

    let mut g = TwoTimeGF::zeros(n_pts, dt, grid.t0);
    let rho0 = density_matrix(&state0.in_frame(Frame::Lab, p.omega0, grid.t0));
    let less0 = scale(&rho0, I);
    g.set_pair(0, 0, less0, sub(&less0, &scale(&IDENTITY, I)));
    let mut rho = vec![rho0];
    let mut coll: [Vec<Mat2>; 2] = [vec![[ZERO; 4]], vec![[ZERO; 4]]];
    let mut worst_iter = 0;

    let herm_part = |x: &Mat2| add(x, &adj(x));
    for n in 0..n_pts - 1 {
        let t = grid.t(n);
        let r = n + 1;
        let less_n: Vec<Mat2> = (0..=n).map(|m| g.less[n * n_pts + m]).collect();
        let gtr_n: Vec<Mat2> = (0..=n).map(|m| g.gtr[n * n_pts + m]).collect();
        let advance = |u: &Mat2, row: &[Mat2], ic: &[Mat2], inew: Option<&[Mat2]>, m: usize| -> Mat2 {
            let ug = mul(u, &row[m]);
            let ui = mul(u, &ic[m]);
            match inew {
                None => sub(&ug, &scale(&ui, I * dt)),
                Some(inew) => sub(&ug, &scale(&add(&ui, &inew[m]), I * 0.5 * dt)),
            }
        };
        let diag = |u: &Mat2, j_old: &Mat2, j_new: Option<&Mat2>| -> Mat2 {
            let evolved = mul(&mul(u, &less_n[n]), &adj(u));
            let jo = mul(&mul(u, j_old), &adj(u));
            match j_new {
                None => sub(&evolved, &scale(&jo, I * dt)),
                Some(jn) => sub(&evolved, &scale(&add(&jo, jn), I * 0.5 * dt)),
            }
        };

        // Predictor.
        let mut u = prop.step(t, dt, &rho[n], &rho[n]);
        let j_old = herm_part(&coll[0][n]);
        let mut new_less: Vec<Mat2> = (0..=n).map(|m| advance(&u, &less_n, &coll[0], None, m)).collect();
        let mut new_gtr: Vec<Mat2> = (0..=n).map(|m| advance(&u, &gtr_n, &coll[1], None, m)).collect();
        new_less.push(diag(&u, &j_old, None));
        new_gtr.push(sub(&new_less[r], &scale(&IDENTITY, I)));

        let mut converged = false;
        let mut residual = f64::INFINITY;
        let mut iterations = 0;
        let mut next_coll = [Vec::new(), Vec::new()];
        while iterations < s.max_iterations {
            iterations += 1;
            for m in 0..=r {
                g.set_pair(r, m, new_less[m], new_gtr[m]);
            }
            let sig_less: Vec<[Complex64; 2]> = (0..=r).map(|k| kernels.fock(Branch::Lesser, r - k, &new_less[k])).collect();
            let sig_gtr: Vec<[Complex64; 2]> = (0..=r).map(|k| kernels.fock(Branch::Greater, r - k, &new_gtr[k])).collect();
            next_coll = collision_row(&g, r, &sig_less, &sig_gtr);

            let rho_new = scale(&new_less[r], -I);
            u = prop.step(t, dt, &rho[n], &rho_new);
            let mut cand_less: Vec<Mat2> = (0..=n).map(|m| advance(&u, &less_n, &coll[0], Some(&next_coll[0]), m)).collect();
            let mut cand_gtr: Vec<Mat2> = (0..=n).map(|m| advance(&u, &gtr_n, &coll[1], Some(&next_coll[1]), m)).collect();
            cand_less.push(diag(&u, &j_old, Some(&herm_part(&next_coll[0][r]))));
            cand_gtr.push(sub(&cand_less[r], &scale(&IDENTITY, I)));

            residual = new_less.iter().zip(&cand_less).chain(new_gtr.iter().zip(&cand_gtr)).map(|(a, b)| max_diff(a, b)).fold(0.0, f64::max);
            new_less = cand_less;
            new_gtr = cand_gtr;
            if residual < s.tolerance {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::SelfConsistency { step: r, residual, iterations });
        }
        worst_iter = worst_iter.max(iterations);
        for m in 0..=r {
            g.set_pair(r, m, new_less[m], new_gtr[m]);
        }
        rho.push(scale(&new_less[r], -I));
        coll = next_coll;
    }

    let states = TimeSeries::new(grid.t0, dt, (0..n_pts).map(|i| g.density(i)).collect());
    Ok(KbOutput { states, gf: g, max_iterations_used: worst_iter })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_bath() -> BathSpectrum {
        BathSpectrum { coupling_rate: 0.0, ..Default::default() }
    }

    /// RK4 on `i dψ/dt = H(t) ψ`.
    fn unitary_oracle(p: &SystemParams, psi0: [Complex64; 2], t_end: f64, h: f64, every: usize) -> Vec<[Complex64; 2]> {
        let f = |t: f64, psi: [Complex64; 2]| {
            let e = drive_field(p, t);
            [-I * (p.eps1 * psi[0] - e * psi[1]), -I * (-e * psi[0] + p.eps2 * psi[1])]
        };
        let add = |a: [Complex64; 2], b: [Complex64; 2], s: f64| [a[0] + b[0] * s, a[1] + b[1] * s];
        let mut psi = psi0;
        let n = (t_end / h).round() as usize;
        let mut out = vec![psi];
        for k in 0..n {
            let t = k as f64 * h;
            let k1 = f(t, psi);
            let k2 = f(t + h / 2.0, add(psi, k1, h / 2.0));
            let k3 = f(t + h / 2.0, add(psi, k2, h / 2.0));
            let k4 = f(t + h, add(psi, k3, h));
            for i in 0..2 {
                psi[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
            }
            if (k + 1) % every == 0 {
                out.push(psi);
            }
        }
        out
    }

    #[test]
    fn exp_herm_is_unitary_and_exact_for_diagonal() {
        let m = [Complex64::new(0.3, 0.0), Complex64::new(0.1, -0.2), Complex64::new(0.1, 0.2), Complex64::new(-0.5, 0.0)];
        let u = exp_herm(&m);
        assert!(max_diff(&mul(&u, &adj(&u)), &IDENTITY) < 1e-15);
        let d = exp_herm(&[Complex64::new(0.7, 0.0), ZERO, ZERO, Complex64::new(-0.2, 0.0)]);
        assert!((d[0] - Complex64::from_polar(1.0, -0.7)).norm() < 1e-15);
        assert!((d[3] - Complex64::from_polar(1.0, 0.2)).norm() < 1e-15);
    }

    #[test]
    fn zero_coupling_without_drive_is_stationary() {
        let p = SystemParams::paper_default().with_mu_e0(0.0);
        let s0 = QuantumState::from_spin([0.3, 0.0, 0.2], Frame::Lab);
        let out = propagate_kb(&p, &zero_bath(), s0, &TimeGrid::span(50.0, 1.0).unwrap(), &NegfSettings::default()).unwrap();
        for s in &out.states.values {
            assert!((s.rho11 - s0.rho11).abs() < 1e-12);
            assert!((s.rho12.norm() - s0.rho12.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_coupling_matches_unitary_evolution() {
        let p = SystemParams::paper_default().with_mu_e0(0.05);
        let out = propagate_kb(&p, &zero_bath(), QuantumState::ground(), &TimeGrid::span(200.0, 1.0).unwrap(), &NegfSettings::default()).unwrap();
        let oracle = unitary_oracle(&p, [Complex64::new(1.0, 0.0), ZERO], 200.0, 1e-3, 1000);
        for (s, psi) in out.states.values.iter().zip(&oracle) {
            assert!((s.rho11 - psi[0].norm_sqr()).abs() < 1e-6);
            assert!((s.rho12 - psi[0] * psi[1].conj()).norm() < 1e-6);
        }
    }

    #[test]
    fn zero_coupling_gives_zero_self_energy() {
        let p = SystemParams::paper_default();
        let k = NegfKernels::from_bath(&zero_bath(), &p, 1.0, 20).unwrap();
        let out = propagate_kb_with(&p, &k, QuantumState::ground(), &TimeGrid::span(19.0, 1.0).unwrap(), &NegfSettings::default()).unwrap();
        let se = hf_selfenergy(&out.gf, &k).unwrap();
        assert!(se.fock_less.iter().chain(&se.fock_gtr).all(|v| v[0] == ZERO && v[1] == ZERO));
        assert!(se.hartree.iter().all(|h| h.iter().all(|z| *z == ZERO)));
    }

    fn default_run(t_end: f64, dt: f64) -> (SystemParams, NegfKernels, KbOutput) {
        let p = SystemParams::paper_default();
        let b = BathSpectrum::default();
        let grid = TimeGrid::span(t_end, dt).unwrap();
        let k = NegfKernels::from_bath(&b, &p, dt, grid.len).unwrap();
        let out = propagate_kb_with(&p, &k, QuantumState::ground(), &grid, &NegfSettings::default()).unwrap();
        (p, k, out)
    }

    #[test]
    fn invariants_hold_at_defaults() {
        let (_, k, out) = default_run(60.0, 1.0);
        assert!(out.gf.skew_hermiticity_error() < 1e-9);
        assert!(out.gf.equal_time_error() < 1e-12);
        for s in &out.states.values {
            assert!((s.trace() - 1.0).abs() < 1e-6);
            let det = s.rho11 * s.rho22 - s.rho12.norm_sqr();
            assert!(s.rho11 > -1e-6 && s.rho22 > -1e-6 && det > -1e-6, "{s:?}");
        }
        let se = hf_selfenergy(&out.gf, &k).unwrap();
        let n = se.n;
        for i in 0..n {
            for j in 0..n {
                for a in 0..2 {
                    assert!((se.fock_less[i * n + j][a] + se.fock_less[j * n + i][a].conj()).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_temperature_lesser_fock_has_only_reversed_term() {
        let p = SystemParams::paper_default();
        let k = NegfKernels::from_bath(&BathSpectrum::default(), &p, 1.0, 30).unwrap();
        for c in &k.less {
            // Direct Π<(τ) factors vanish; Π>(-τ) survives in the 11 entry.
            assert_eq!(c[3], ZERO);
            assert_eq!(c[0], ZERO);
            assert_eq!(c[2], ZERO);
        }
        assert!(k.less.iter().any(|c| c[1] != ZERO));
    }

    /// Index form of the Fock term with a four-index Π tensor whose only
    /// nonzero blocks are (12,12), (11,11) and (22,22).
    fn brute_force_fock(bath: &BathKernels, branch: usize, lag: usize, g: &Mat2) -> [Complex64; 2] {
        let pi = |a: usize, b: usize, c: usize, d: usize, br: usize, reversed: bool| -> Complex64 {
            let src = match (a, b, c, d) {
                (0, 1, 0, 1) => &bath.transition,
                (0, 0, 0, 0) => &bath.level1,
                (1, 1, 1, 1) => &bath.level2,
                _ => return ZERO,
            };
            let v = src[br][lag];
            if reversed {
                -v.conj()
            } else {
                v
            }
        };
        let other = 1 - branch;
        let mut out = [ZERO; 2];
        for (slot, i) in [0usize, 1].into_iter().enumerate() {
            let j = i;
            let mut acc = ZERO;
            for n1 in 0..2 {
                for n2 in 0..2 {
                    let coef = pi(n1, i, n2, j, branch, false) + pi(j, n2, i, n1, other, true);
                    acc += I * coef * g[n1 * 2 + n2];
                }
            }
            out[slot] = acc;
        }
        out
    }

    #[test]
    fn fock_matches_index_summation() {
        let p = SystemParams::paper_default();
        let b = BathSpectrum { temperature: 0.7, diag_coupling11: 0.03, diag_coupling22: 0.02, ..Default::default() };
        let bath = BathKernels::from_bath(&b, &p, 0.5, 40).unwrap();
        let k = NegfKernels::assemble(&bath, 0.0);
        let g = [Complex64::new(0.1, 0.4), Complex64::new(-0.3, 0.2), Complex64::new(0.25, -0.1), Complex64::new(0.05, 0.6)];
        for lag in [0, 1, 7, 39] {
            for (bi, br) in [Branch::Lesser, Branch::Greater].into_iter().enumerate() {
                let a = k.fock(br, lag, &g);
                let e = brute_force_fock(&bath, bi, lag, &g);
                assert!((a[0] - e[0]).norm() < 1e-15 && (a[1] - e[1]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn hartree_constant_matches_principal_value_integral() {
        // Π^r(0) = ∫ dω/2π (Π> - Π<)(ω) · i / (0 - ω + iη) → -κ as η → 0.
        let p = SystemParams::paper_default();
        let b = BathSpectrum::default();
        let kappa = hartree_kappa(&b, &p).unwrap();
        let eta = 1e-9;
        let mut acc = ZERO;
        for (w, q) in b.omega_grid().into_iter().zip(b.trapezoid_weights()) {
            let d = b.pi_freq(&p, Block::Transition, Branch::Greater, w) - b.pi_freq(&p, Block::Transition, Branch::Lesser, w);
            acc += d * I / Complex64::new(-w, eta) * q;
        }
        let pi_r = acc / (2.0 * std::f64::consts::PI);
        assert!((pi_r + kappa).norm() < 1e-8);
        assert!((kappa - 2.940011880064e-02).abs() < 1e-7);
    }

    #[test]
    fn binary_dump_layout() {
        let p = SystemParams::paper_default().with_mu_e0(0.0);
        let out = propagate_kb(&p, &zero_bath(), QuantumState::ground(), &TimeGrid::span(2.0, 1.0).unwrap(), &NegfSettings::default()).unwrap();
        let mut buf = Vec::new();
        out.gf.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 2 * 9 * 4 * 16);
        // G<(0,0)_00 = i ρ11 = i.
        assert_eq!(f64::from_le_bytes(buf[8..16].try_into().unwrap()), 1.0);
    }
}

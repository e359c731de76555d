//! Harmonic inversion by filter diagonalization, branch tracking across a
//! drive-amplitude sweep, and exceptional-point location.
//!
//! Signals are modelled as `c(t) = Σ_k d_k e^{-i ω_k t}`; `Im ω < 0` decays.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMat};
use crate::model::TimeSeries;

/// One complex eigenmode of a signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub omega: Complex64,
    pub d: Complex64,
}

/// Modes sorted by decreasing `|d|`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModeSet {
    pub modes: Vec<Mode>,
}

/// Default gap tolerance of [`locate_lep`].
pub const DEFAULT_TOL_GAP: f64 = 1e-4;
/// Default divergence factor of [`locate_lep`].
pub const DEFAULT_DIVERGENCE_FACTOR: f64 = 10.0;

/// Modes with `|Re ω|` at most this are treated as self-conjugate.
pub const SELF_CONJUGATE_TOL: f64 = 1e-7;

/// Index of the stationary component: the mode nearest `ω = 0`.
fn stationary_index(modes: &[Mode]) -> Option<usize> {
    (0..modes.len()).min_by(|&a, &b| modes[a].omega.norm().total_cmp(&modes[b].omega.norm()))
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// One representative per conjugate pair `(ω, -ω*)`: modes with
    /// `Re ω > 0` plus self-conjugate modes.
    pub fn collapsed(&self) -> Vec<Mode> {
        self.modes.iter().copied().filter(|m| m.omega.re >= -SELF_CONJUGATE_TOL).collect()
    }

    /// Number of distinct modes of a real signal.
    pub fn count(&self) -> usize {
        self.collapsed().len()
    }

    /// `Σ_k d_k e^{-i ω_k t}`.
    pub fn evaluate(&self, t: f64) -> Complex64 {
        self.modes.iter().map(|m| m.d * (-Complex64::i() * m.omega * t).exp()).sum()
    }
}

/// Filter-diagonalization settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSettings {
    /// Real-frequency window `[ωmin, ωmax]`.
    pub window: (f64, f64),
    pub basis_size: usize,
    pub amplitude_floor: f64,
    /// Singular values of U⁽⁰⁾ below `sv_cutoff · σmax` are discarded.
    pub sv_cutoff: f64,
    /// Lower stability bound: modes with `|u| < e^{-decay_limit}` are dropped.
    pub decay_limit: f64,
    /// Upper stability bound: modes with `|u| > 1 + growth_tolerance` are dropped.
    pub growth_tolerance: f64,
}

impl Default for FdSettings {
    fn default() -> Self {
        Self { window: (-0.2, 0.2), basis_size: 32, amplitude_floor: 1e-6, sv_cutoff: 1e-12, decay_limit: 5.0, growth_tolerance: 1e-6 }
    }
}

impl FdSettings {
    pub fn validate(&self, dt: f64) -> Result<()> {
        let (lo, hi) = self.window;
        if !(lo < hi) {
            return Err(invalid("window", format!("lower bound {lo} must be below upper bound {hi}")));
        }
        if lo.abs().max(hi.abs()) * dt >= std::f64::consts::PI {
            return Err(invalid("window", format!("[{lo}, {hi}] exceeds the Nyquist band of dt = {dt}")));
        }
        if self.basis_size == 0 {
            return Err(invalid("basisSize", "must be positive"));
        }
        if !(self.amplitude_floor >= 0.0 && self.sv_cutoff > 0.0 && self.decay_limit > 0.0 && self.growth_tolerance >= 0.0) {
            return Err(invalid("analysis", "thresholds must be positive"));
        }
        Ok(())
    }
}

/// Extracts the modes of `signal` whose real frequency lies in the window.
///
/// The signal-correlation matrices `U⁽ᵖ⁾ = Zᵀ H⁽ᵖ⁾ Z` are built from the
/// Hankel matrices `H⁽ᵖ⁾_{nm} = c_{n+m+p}` and the windowed Fourier basis
/// `Z_{nj} = e^{i φ_j n}`; the pencil `U⁽¹⁾ b = u U⁽⁰⁾ b` is reduced by a
/// truncated SVD of `U⁽⁰⁾`.
pub fn filter_diagonalize(signal: &TimeSeries<Complex64>, s: &FdSettings) -> Result<ModeSet> {
    s.validate(signal.dt)?;
    let c = &signal.values;
    let n = c.len();
    let k = s.basis_size;
    if n < 2 * k + 1 {
        return Err(invalid("signal", format!("length {n} is shorter than 2 * basisSize + 1 = {}", 2 * k + 1)));
    }
    let dt = signal.dt;
    let m = (n - 2) / 2 + 1;
    let (lo, hi) = s.window;
    let phis: Vec<f64> = (0..k)
        .map(|j| if k == 1 { 0.5 * (lo + hi) * dt } else { (lo + (hi - lo) * j as f64 / (k - 1) as f64) * dt })
        .collect();
    let z = CMat::from_fn(m, k, |row, j| Complex64::from_polar(1.0, phis[j] * row as f64));
    let hankel = |shift: usize| CMat::from_fn(m, m, |a, b| c[a + b + shift]);
    let zt = z.transpose().to_owned();
    let u0 = &zt * (&hankel(0) * &z);
    let u1 = &zt * (&hankel(1) * &z);
    let c0: Vec<Complex64> = (0..k).map(|j| (0..m).map(|row| z[(row, j)] * c[row]).sum()).collect();

    let (w, sv, v) = linalg::svd(&u0)?;
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(ModeSet::default());
    }
    let r = sv.iter().take_while(|&&x| x > s.sv_cutoff * smax).count();
    if r == 0 {
        return Err(Error::IllConditionedBasis);
    }
    let wr = w.subcols(0, r);
    let vr = v.subcols(0, r);
    let mut a = wr.adjoint() * (&u1 * vr);
    for i in 0..r {
        for j in 0..r {
            a[(i, j)] /= sv[i];
        }
    }
    let (u, y) = linalg::eig(&a)?;
    let b = vr * &y;

    let lower = (-s.decay_limit).exp();
    let upper = 1.0 + s.growth_tolerance;
    let mut modes = Vec::with_capacity(r);
    for (idx, &uk) in u.iter().enumerate() {
        let bk: Vec<Complex64> = (0..k).map(|row| b[(row, idx)]).collect();
        let proj: Complex64 = bk.iter().zip(&c0).map(|(x, y)| x * y).sum();
        let mut norm = Complex64::new(0.0, 0.0);
        for i in 0..k {
            let row: Complex64 = (0..k).map(|j| u0[(i, j)] * bk[j]).sum();
            norm += bk[i] * row;
        }
        if norm.norm() == 0.0 {
            continue;
        }
        let d = proj * proj / norm;
        let modulus = uk.norm();
        if d.norm() <= s.amplitude_floor || modulus > upper || modulus < lower {
            continue;
        }
        let omega = Complex64::i() * uk.ln() / dt;
        if omega.re < lo || omega.re > hi {
            continue;
        }
        // Referred to the signal's time origin.
        let d = d * (Complex64::i() * omega * signal.t0).exp();
        modes.push(Mode { omega, d });
    }
    modes.sort_by(|x, y| y.d.norm().total_cmp(&x.d.norm()));
    Ok(ModeSet { modes })
}

/// Filter diagonalization of a real signal.
pub fn filter_diagonalize_real(signal: &TimeSeries<f64>, s: &FdSettings) -> Result<ModeSet> {
    filter_diagonalize(&signal.map(|&x| Complex64::new(x, 0.0)), s)
}

/// Modes of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub mu_e0: f64,
    pub modes: ModeSet,
}

/// Tracked pair at one sweep point. Missing branch values are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub mu_e0: f64,
    pub omega1: Complex64,
    pub omega2: Complex64,
    pub d1abs: f64,
    pub gap: f64,
    pub mode_count: usize,
    pub lep_flag: bool,
}

/// Branch-labelled sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedSweep {
    pub records: Vec<SweepRecord>,
    /// `labels[k][i]` is the branch of mode `i` at point `k`.
    pub labels: Vec<Vec<usize>>,
    /// Branch indices of the tracked pair (mode 1 first).
    pub pair: Option<(usize, usize)>,
    pub warnings: Vec<String>,
}

/// Nearest-neighbour matching between consecutive mode sets: all pairs are
/// considered in order of increasing `|Δω|` and accepted greedily.
/// Returns `next -> prev` and whether a swap of two accepted matches would
/// change the total cost by less than 1e-10.
fn match_modes(prev: &[Mode], next: &[Mode]) -> (Vec<Option<usize>>, bool) {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(prev.len() * next.len());
    for (i, a) in prev.iter().enumerate() {
        for (j, b) in next.iter().enumerate() {
            pairs.push(((a.omega - b.omega).norm(), i, j));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_prev = vec![false; prev.len()];
    let mut assign = vec![None; next.len()];
    for (_, i, j) in pairs {
        if !used_prev[i] && assign[j].is_none() {
            used_prev[i] = true;
            assign[j] = Some(i);
        }
    }
    let matched: Vec<(usize, usize)> = assign.iter().enumerate().filter_map(|(j, i)| i.map(|i| (i, j))).collect();
    let mut ambiguous = false;
    for (x, &(i1, j1)) in matched.iter().enumerate() {
        for &(i2, j2) in &matched[x + 1..] {
            let cost = (prev[i1].omega - next[j1].omega).norm() + (prev[i2].omega - next[j2].omega).norm();
            let swapped = (prev[i1].omega - next[j2].omega).norm() + (prev[i2].omega - next[j1].omega).norm();
            if (swapped - cost).abs() < 1e-10 && (next[j1].omega - next[j2].omega).norm() > 0.0 {
                ambiguous = true;
            }
        }
    }
    (assign, ambiguous)
}

/// Labels modes across the sweep and selects the tracked pair.
///
/// The pair is the two branches carrying the largest amplitudes at the
/// sweep point where the largest non-stationary amplitude occurs, i.e. where
/// the expansion coefficients diverge. Mode 1 is the member with the larger
/// amplitude at the first point where both branches exist.
pub fn track_pair(points: &[SweepPoint]) -> TrackedSweep {
    let mut warnings = Vec::new();
    let mut labels: Vec<Vec<usize>> = Vec::with_capacity(points.len());
    let mut n_branches = 0usize;
    for (k, pt) in points.iter().enumerate() {
        let mut row = Vec::with_capacity(pt.modes.len());
        if k == 0 {
            for _ in &pt.modes.modes {
                row.push(n_branches);
                n_branches += 1;
            }
        } else {
            let (assign, ambiguous) = match_modes(&points[k - 1].modes.modes, &pt.modes.modes);
            if ambiguous {
                warnings.push(format!("tracking ambiguity at muE0 = {}", pt.mu_e0));
            }
            for a in assign {
                match a {
                    Some(i) => row.push(labels[k - 1][i]),
                    None => {
                        row.push(n_branches);
                        n_branches += 1;
                    }
                }
            }
        }
        labels.push(row);
    }

    let mode_of = |k: usize, branch: usize| labels[k].iter().position(|&b| b == branch).map(|i| points[k].modes.modes[i]);

    let mut peak: Option<(usize, f64)> = None;
    for (k, pt) in points.iter().enumerate() {
        let dc = stationary_index(&pt.modes.modes);
        for (i, m) in pt.modes.modes.iter().enumerate() {
            if Some(i) != dc && peak.map_or(true, |(_, v)| m.d.norm() > v) {
                peak = Some((k, m.d.norm()));
            }
        }
    }
    let pair = peak.and_then(|(k, _)| {
        let dc = stationary_index(&points[k].modes.modes);
        let mut cand: Vec<(usize, f64)> = points[k]
            .modes
            .modes
            .iter()
            .zip(&labels[k])
            .enumerate()
            .filter(|(i, _)| Some(*i) != dc)
            .map(|(_, (m, &b))| (b, m.d.norm()))
            .collect();
        cand.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        (cand.len() >= 2).then(|| (cand[0].0, cand[1].0))
    });
    let pair = pair.map(|(a, b)| {
        let first = (0..points.len()).find_map(|k| match (mode_of(k, a), mode_of(k, b)) {
            (Some(x), Some(y)) => Some((x, y)),
            _ => None,
        });
        match first {
            Some((x, y)) if y.d.norm() > x.d.norm() => (b, a),
            _ => (a, b),
        }
    });

    let nan = Complex64::new(f64::NAN, f64::NAN);
    let records = points
        .iter()
        .enumerate()
        .map(|(k, pt)| {
            let (m1, m2) = match pair {
                Some((a, b)) => (mode_of(k, a), mode_of(k, b)),
                None => (None, None),
            };
            let omega1 = m1.map_or(nan, |m| m.omega);
            let omega2 = m2.map_or(nan, |m| m.omega);
            SweepRecord {
                mu_e0: pt.mu_e0,
                omega1,
                omega2,
                d1abs: m1.map_or(f64::NAN, |m| m.d.norm()),
                gap: (omega1 - omega2).norm(),
                mode_count: pt.modes.count(),
                lep_flag: false,
            }
        })
        .collect();
    TrackedSweep { records, labels, pair, warnings }
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 { values[n / 2] } else { 0.5 * (values[n / 2 - 1] + values[n / 2]) })
}

/// Closest approach to zero of the squared splitting `D = (ω1 - ω2)²`,
/// linearly interpolated between two sweep points. Returns the parameter of
/// closest approach and `sqrt(min |D|)`, the interpolated gap.
fn interpolated_gap(a: &SweepRecord, b: &SweepRecord) -> Option<(f64, f64)> {
    let da = (a.omega1 - a.omega2).powi(2);
    let db = (b.omega1 - b.omega2).powi(2);
    if !(da.norm().is_finite() && db.norm().is_finite()) {
        return None;
    }
    let dir = db - da;
    let s = if dir.norm_sqr() == 0.0 { 0.0 } else { (-(da.conj() * dir).re / dir.norm_sqr()).clamp(0.0, 1.0) };
    let d = da + dir * s;
    Some((a.mu_e0 + s * (b.mu_e0 - a.mu_e0), d.norm().sqrt()))
}

/// LEP estimate: a local maximum of `d1abs` exceeding `divergence_factor`
/// times its sweep median, at which the tracked gap closes below `tol_gap`.
/// The gap is checked on the squared splitting interpolated over the
/// neighbouring sweep intervals, and the estimate is the interpolated point
/// of closest approach. Returns `None` when no point qualifies.
pub fn locate_lep(sweep: &[SweepRecord], tol_gap: f64, divergence_factor: f64) -> Option<f64> {
    if sweep.len() < 5 {
        log::warn!("locate_lep needs at least 5 sweep points, got {}", sweep.len());
        return None;
    }
    let mut finite: Vec<f64> = sweep.iter().map(|r| r.d1abs).filter(|x| x.is_finite()).collect();
    let med = median(&mut finite)?;
    let mut best: Option<(f64, f64)> = None;
    for k in 0..sweep.len() {
        let v = sweep[k].d1abs;
        if !v.is_finite() || v <= divergence_factor * med {
            continue;
        }
        let left = k == 0 || !(sweep[k - 1].d1abs > v);
        let right = k + 1 == sweep.len() || !(sweep[k + 1].d1abs > v);
        if !(left && right) {
            continue;
        }
        let mut closest: Option<(f64, f64)> = None;
        for (i, j) in [(k.wrapping_sub(1), k), (k, k + 1)] {
            if i >= sweep.len() || j >= sweep.len() {
                continue;
            }
            if let Some((mu, g)) = interpolated_gap(&sweep[i], &sweep[j]) {
                if closest.map_or(true, |(_, cg)| g < cg) {
                    closest = Some((mu, g));
                }
            }
        }
        if let Some((mu, g)) = closest {
            if g < tol_gap && best.map_or(true, |(_, bv)| v > bv) {
                best = Some((mu, v));
            }
        }
    }
    best.map(|(mu, _)| mu)
}

/// Sweep outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAnalysis {
    pub tracked: TrackedSweep,
    pub lep: Option<f64>,
}

/// Tracks, locates, and flags the record nearest the LEP estimate.
pub fn analyze_sweep(points: &[SweepPoint], tol_gap: f64, divergence_factor: f64) -> SweepAnalysis {
    let mut tracked = track_pair(points);
    let lep = locate_lep(&tracked.records, tol_gap, divergence_factor);
    if let Some(mu) = lep {
        if let Some(r) = tracked
            .records
            .iter_mut()
            .min_by(|a, b| (a.mu_e0 - mu).abs().total_cmp(&(b.mu_e0 - mu).abs()))
        {
            r.lep_flag = true;
        }
    }
    for w in &tracked.warnings {
        log::warn!("{w}");
    }
    SweepAnalysis { tracked, lep }
}

/// Evaluates `modes_at` for every drive amplitude on the current rayon pool.
/// Results are returned in input order regardless of scheduling.
pub fn run_sweep<F>(mu_values: &[f64], modes_at: F) -> Result<Vec<SweepPoint>>
where
    F: Fn(f64) -> Result<ModeSet> + Sync,
{
    mu_values
        .par_iter()
        .map(|&mu| modes_at(mu).map(|modes| SweepPoint { mu_e0: mu, modes }))
        .collect()
}

/// `n` equally spaced values on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

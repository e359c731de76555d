//! Subcommand implementations. Each returns the artifacts to write; nothing
//! here touches the filesystem except `analyze`'s input.

use std::path::Path;

use anyhow::{bail, Context, Result};
use lepsim::{analyze_sweep, filter_diagonalize_real, run_sweep, ModeSet, QuantumState, SolverKind, SweepAnalysis, TimeSeries};

use crate::config::RunConfig;
use crate::output::{eigenmode_csv, modes_csv, sweep_csv, trajectory_csv, Artifact, TRAJECTORY_HEADER};

fn artifact(stem: &str, contents: String, cfg: &RunConfig) -> Result<Artifact> {
    Ok(Artifact { file: format!("{stem}.csv"), contents, config_file: format!("{stem}.toml"), config: cfg.effective()?.to_toml() })
}

/// Rotating-frame trajectory on the decimated output grid.
pub fn trajectory(cfg: &RunConfig) -> Result<TimeSeries<QuantumState>> {
    let kind = cfg.solver()?;
    let series = cfg.simulation()?.run(kind).with_context(|| format!("{kind} solver"))?;
    Ok(series.decimate(cfg.time.decimation))
}

pub fn run(cfg: &RunConfig) -> Result<Artifact> {
    artifact("trajectory", trajectory_csv(&trajectory(cfg)?), cfg)
}

/// Sweep over the configured drive amplitudes. Points are evaluated on the
/// current rayon pool; rows come back in `muE0` order.
pub fn sweep_analysis(cfg: &RunConfig) -> Result<SweepAnalysis> {
    let kind = cfg.solver()?;
    let sim = cfg.simulation()?;
    let fd = cfg.fd_settings()?;
    let stride = cfg.time.decimation;
    let points = run_sweep(&cfg.mu_values(), |mu| {
        let sz = sim.with_mu_e0(mu).sz(kind)?.decimate(stride);
        filter_diagonalize_real(&sz, &fd)
    })
    .with_context(|| format!("{kind} sweep"))?;
    Ok(analyze_sweep(&points, cfg.analysis.tol_gap, cfg.analysis.divergence_factor))
}

pub fn sweep(cfg: &RunConfig) -> Result<(Artifact, SweepAnalysis)> {
    let a = sweep_analysis(cfg)?;
    Ok((artifact("sweep", sweep_csv(&a), cfg)?, a))
}

/// Reads `t` and `Sz` from a trajectory CSV, checking the schema and the
/// uniformity of the time column.
pub fn read_sz(path: &Path) -> Result<TimeSeries<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != TRAJECTORY_HEADER {
        bail!("{}: expected header {TRAJECTORY_HEADER:?}, found {header:?}", path.display());
    }
    let mut t = Vec::new();
    let mut sz = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let field = |k: usize| -> Result<f64> {
            rec[k].trim().parse::<f64>().with_context(|| format!("{}: row {}, column {}", path.display(), i + 1, k + 1))
        };
        t.push(field(0)?);
        sz.push(field(1)?);
    }
    if t.len() < 2 {
        bail!("{}: need at least two rows", path.display());
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    if !(dt > 0.0) || t.iter().enumerate().any(|(n, &tn)| (tn - (t[0] + n as f64 * dt)).abs() > 1e-9 * dt.max(t[n].abs())) {
        bail!("{}: time column is not uniformly increasing", path.display());
    }
    Ok(TimeSeries::new(t[0], dt, sz))
}

pub fn analyze(cfg: &RunConfig, input: &Path) -> Result<(Artifact, ModeSet)> {
    let sz = read_sz(input)?;
    let modes = filter_diagonalize_real(&sz, &cfg.fd_settings()?)?;
    Ok((artifact("modes", modes_csv(&modes.collapsed()), cfg)?, modes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
}

const PANELS: [(&str, SolverKind); 3] = [("a_bloch", SolverKind::Bloch), ("b_generalized", SolverKind::Generalized), ("c_nonmarkov", SolverKind::NonMarkov)];

/// Trajectories (fig2), sweeps (fig3) or tracked eigenmodes (fig4) for the
/// profile `base`, one CSV per panel.
pub fn reproduce(base: &RunConfig, figure: Figure) -> Result<Vec<Artifact>> {
    let with = |kind: SolverKind| RunConfig { solver: kind.name().to_owned(), ..base.clone() };
    match figure {
        Figure::Fig2 => {
            let panels = [("fig2a_bloch", SolverKind::Bloch), ("fig2a_generalized", SolverKind::Generalized), ("fig2a_nonmarkov", SolverKind::NonMarkov), ("fig2b_negf", SolverKind::Negf)];
            let trajectories: Vec<Result<String>> = {
                use rayon::prelude::*;
                panels.par_iter().map(|&(_, k)| Ok(trajectory_csv(&trajectory(&with(k))?))).collect()
            };
            panels.iter().zip(trajectories).map(|(&(stem, k), csv)| artifact(stem, csv?, &with(k))).collect()
        }
        Figure::Fig3 | Figure::Fig4 => {
            let (num, emit): (&str, fn(&SweepAnalysis) -> String) = match figure {
                Figure::Fig3 => ("fig3", sweep_csv),
                _ => ("fig4", eigenmode_csv),
            };
            PANELS
                .iter()
                .map(|&(panel, k)| {
                    let cfg = with(k);
                    artifact(&format!("{num}{panel}"), emit(&sweep_analysis(&cfg)?), &cfg)
                })
                .collect()
        }
    }
}

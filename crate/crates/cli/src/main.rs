use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use lepsim_cli::commands::{self, Figure};
use lepsim_cli::output::write_artifacts;
use lepsim_cli::RunConfig;

/// Driven two-level system in a bosonic bath: trajectories, eigenmode
/// sweeps and exceptional-point location.
#[derive(Parser)]
#[command(name = "lepsim", version)]
struct Cli {
    /// TOML configuration; omitted keys take the shipped defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `solver` (bloch, generalized, nonmarkov, negf).
    #[arg(long, global = true)]
    solver: Option<String>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps. Affects wall time only.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate one trajectory and write trajectory.csv.
    Run,
    /// Sweep muE0, track the closest eigenmode pair and locate the LEP.
    Sweep,
    /// Extract the eigenmodes of Sz(t) from a trajectory CSV.
    Analyze { input: PathBuf },
    /// Regenerate the data of one figure.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(s) = &cli.solver {
        cfg.solver = s.clone();
    }
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.clone();
    }
    cfg.validate().context("invalid configuration")?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    let dir = cfg.output.dir.clone();

    pool.install(|| -> Result<()> {
        match &cli.command {
            Command::Run => {
                let a = commands::run(&cfg)?;
                write_artifacts(&dir, "run", std::slice::from_ref(&a))?;
                println!("{}", dir.join(&a.file).display());
            }
            Command::Sweep => {
                let (a, analysis) = commands::sweep(&cfg)?;
                write_artifacts(&dir, "sweep", std::slice::from_ref(&a))?;
                match analysis.lep {
                    Some(mu) => println!("{}: LEP at muE0 = {mu:.6}", dir.join(&a.file).display()),
                    None => println!("{}: no LEP", dir.join(&a.file).display()),
                }
            }
            Command::Analyze { input } => {
                let (a, modes) = commands::analyze(&cfg, input)?;
                write_artifacts(&dir, "analyze", std::slice::from_ref(&a))?;
                println!("{}: {} modes", dir.join(&a.file).display(), modes.count());
            }
            Command::Reproduce { figure } => {
                if cli.solver.is_some() {
                    log::warn!("--solver is ignored by reproduce; every panel fixes its solver");
                }
                let artifacts = commands::reproduce(&cfg, *figure)?;
                let name = format!("reproduce {figure:?}").to_lowercase();
                write_artifacts(&dir, &name, &artifacts)?;
                for a in &artifacts {
                    println!("{}", dir.join(&a.file).display());
                }
            }
        }
        Ok(())
    })
}

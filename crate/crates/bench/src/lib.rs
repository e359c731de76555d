//! Shared fixtures for the benchmarks.

use lepsim::{Simulation, TimeGrid};

/// Default parameters on `[0, t_end]` with unit output step.
pub fn simulation(t_end: f64, mu_e0: f64) -> Simulation {
    Simulation { grid: TimeGrid::span(t_end, 1.0).expect("valid grid"), ..Simulation::paper_default().with_mu_e0(mu_e0) }
}

//! Driven two-level system coupled to a bosonic bath.
//!
//! Four levels of theory propagate the same model: the Markov Bloch
//! equations ([`markov`]), Bloch equations with renormalized rates
//! ([`generalized`]), the time-nonlocal Bloch equations ([`nonmarkov`]) and
//! two-time Kadanoff-Baym propagation with a Hartree-Fock self-energy
//! ([`negf`]). [`eigenmode`] extracts complex eigenmodes of `Sz(t)` by filter
//! diagonalization and locates Liouvillian exceptional points in
//! drive-amplitude sweeps.

pub mod eigenmode;
pub mod error;
pub mod generalized;
pub mod liouvillian;
pub mod linalg;
pub mod markov;
pub mod model;
pub mod negf;
pub mod nonmarkov;
pub mod solver;

pub use eigenmode::{
    analyze_sweep, filter_diagonalize, filter_diagonalize_real, linspace, locate_lep, run_sweep, track_pair, FdSettings, Mode,
    ModeSet, SweepAnalysis, SweepPoint, SweepRecord, TrackedSweep, DEFAULT_DIVERGENCE_FACTOR, DEFAULT_TOL_GAP,
};
pub use error::{Error, Result};
pub use generalized::{default_delta_reg, renormalized_rates, RenormalizedRates, TransferNormalization};
pub use liouvillian::{assemble_bloch4, assemble_spin3, eigendecompose, population_block, BlochGenerator4, PopulationBlock2, SpinGenerator3};
pub use markov::{compute_rates, propagate_spin, MarkovRates};
pub use negf::NegfSettings;
pub use model::{BathSpectrum, Branch, Frame, QuantumState, SystemParams, TimeGrid, TimeSeries};
pub use num_complex::Complex64;
pub use solver::{Simulation, SolverKind};

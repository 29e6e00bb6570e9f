//! Pseudospectral solvers for the local and nonlocal conserved phase
//! separation flows on the periodic torus, plus the measurement tooling
//! for studying the nonlocal-to-local limit: scale sweeps in the
//! trajectory norms, operator and energy consistency studies, and the
//! empirical constant of the gradient Poincare inequality.

pub mod checkpoint;
pub mod convergence;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod grid;
pub mod initial;
pub mod kernel;
pub mod mollifier;
pub mod potential;
pub mod quad;
pub mod report;
pub mod selftest;

pub use convergence::{
    fit_rate, operator_consistency_study, poincare_study, run_sweep, ConsistencyReport,
    PoincareStudy, SweepPlan, SweepReport, SweepRow, TimingMode,
};
pub use dynamics::{run, run_observed, RunReport, Scheme, SolverConfig};
pub use energy::{energy_local, energy_nonlocal, nonlocal_gradient_seminorm, poincare_ratio, EnergyBreakdown};
pub use error::{Error, Result};
pub use grid::{Field, TorusGrid};
pub use initial::{InitialData, InitialKind};
pub use kernel::ScaledKernel;
pub use mollifier::Mollifier;
pub use potential::Potential;

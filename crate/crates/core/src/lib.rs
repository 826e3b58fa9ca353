//! Distributed parameter estimation over LMS adaptive networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: the linear data model `d_k(i) = u_{k,i} w° + v_k(i)` and
//!   reproducible per-trial sample streams.
//! - [`topology`]: graphs, left-stochastic combination matrices, primitivity,
//!   Perron vectors and eigendecompositions.
//! - [`rules`]: combination-weight constructions (uniform, Metropolis,
//!   Hastings, two-node optimal, adaptive Hastings).
//! - [`algorithms`]: one-iteration transitions for stand-alone, block,
//!   incremental and diffusion (CTA/ATC/general) LMS.
//! - [`theory`]: closed-form steady-state EMSE/MSD predictions and the
//!   Kronecker-form oracle they are checked against.
//! - [`simulator`]: the Monte Carlo harness producing learning curves and
//!   theory-vs-simulation verdicts.
//!
//! Combination matrices are stored column-stochastic throughout: entry
//! `(l, k)` is the weight node `k` assigns to neighbour `l`, so column `k`
//! sums to one.

pub mod algorithms;
pub mod error;
pub mod model;
pub mod rules;
pub mod simulator;
pub mod theory;
pub mod topology;

pub use algorithms::{ErrorRecord, Estimates, Strategy, StrategyKind, StrategyState};
pub use error::{Error, Result};
pub use model::{generate_sample, spectral_data, DataSample, NetworkModel, RngStream, SpectralData};
pub use rules::{NoiseEstimatorState, Rule};
pub use simulator::{
    compare_to_theory, measure_convergence_rate, run_experiment, steady_state, CurveSummary, Delta,
    ExperimentSpec, LearningCurve, SteadyState, StrategySpec, Verdict,
};
pub use theory::{TheoryReport, TwoNodeConstants, XiConvention};
pub use topology::{CombinationMatrix, Graph, SpectralA, ValidationReport};

/// `10·log10(x)`.
pub fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Inverse of [`db`].
pub fn from_db(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

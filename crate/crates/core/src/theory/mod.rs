//! Closed-form steady-state predictions.
//!
//! Everything here is a small-step-size approximation: terms of higher order
//! in `μ` are dropped exactly where the closed forms drop them. The
//! [`oracle`] submodule evaluates the unreduced Kronecker expression so the
//! reductions can be checked numerically.

mod appendix;
mod general;
mod modes;
mod n_node;
mod oracle;
mod two_node;

use serde::{Deserialize, Serialize};

pub use appendix::{table5_orderings, verify_appendix_b_optimum, AppendixBReport, GridArgmin, OrderingReport, Relation};
pub use general::{diffusion_theory, general_diffusion_emse_msd, predict};
pub use modes::{
    dominant_mode, mode_for_step, operation_curve, operation_curves_csv, OperationPoint,
};
pub use n_node::{n_node_atc_rank_one, n_node_block_inc, standalone_theory, weighted_noise_power};
pub use oracle::{kronecker_oracle_emse, kronecker_oracle_msd, oracle_matrices, OracleMatrices, MAX_ORACLE_SIZE};
pub use two_node::{
    two_node_atc_network_emse, two_node_case, two_node_cta_network_emse, two_node_table, TwoNodeCase,
    TwoNodeConstants,
};

/// How the per-mode factor `ξ_m` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum XiConvention {
    /// `ξ_m = 1 − 2μλ_m`, as in the closed forms.
    #[default]
    FirstOrder,
    /// `ξ_m = (1 − μλ_m)²`, matching the unreduced expression term by term.
    Exact,
}

impl XiConvention {
    pub fn xi(self, mu: f64, lambda: f64) -> f64 {
        match self {
            XiConvention::FirstOrder => 1.0 - 2.0 * mu * lambda,
            XiConvention::Exact => (1.0 - mu * lambda) * (1.0 - mu * lambda),
        }
    }
}

/// Predicted steady-state performance of one strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub strategy: String,
    pub weights_used: String,
    pub per_node_emse: Vec<f64>,
    pub network_emse: f64,
    pub per_node_msd: Vec<f64>,
    pub network_msd: f64,
    pub dominant_mode: f64,
}

impl TheoryReport {
    /// Network values are the node averages.
    pub fn from_nodes(
        strategy: impl Into<String>,
        weights_used: impl Into<String>,
        per_node_emse: Vec<f64>,
        per_node_msd: Vec<f64>,
        dominant_mode: f64,
    ) -> Self {
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        Self {
            strategy: strategy.into(),
            weights_used: weights_used.into(),
            network_emse: mean(&per_node_emse),
            network_msd: mean(&per_node_msd),
            per_node_emse,
            per_node_msd,
            dominant_mode,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.per_node_emse.len()
    }
}

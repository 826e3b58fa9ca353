//! Combination-weight rules.
//!
//! All builders return column-stochastic matrices (see [`crate::topology`]).
//! Off-diagonal weights are set by the rule; the diagonal absorbs the rest of
//! each column.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{CombinationMatrix, Graph};

/// Rule names as accepted in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Uniform,
    Metropolis,
    Hastings,
    AdaptiveHastings,
    TwoNodeOptimal,
}

impl Rule {
    pub const ALL: [Rule; 5] = [
        Rule::Uniform,
        Rule::Metropolis,
        Rule::Hastings,
        Rule::AdaptiveHastings,
        Rule::TwoNodeOptimal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Uniform => "uniform",
            Rule::Metropolis => "metropolis",
            Rule::Hastings => "hastings",
            Rule::AdaptiveHastings => "adaptive-hastings",
            Rule::TwoNodeOptimal => "two-node-optimal",
        }
    }

    /// Weights for the static rules given the true noise profile. The
    /// adaptive rule starts from uniform weights.
    pub fn build(self, graph: &Graph, noise_vars: &[f64]) -> Result<CombinationMatrix> {
        match self {
            Rule::Uniform | Rule::AdaptiveHastings => Ok(uniform_weights(graph)),
            Rule::Metropolis => Ok(metropolis_weights(graph)),
            Rule::Hastings => hastings_weights(graph, noise_vars),
            Rule::TwoNodeOptimal => {
                if graph.n_nodes() != 2 {
                    return Err(Error::Config(format!(
                        "two-node-optimal needs exactly two nodes, got {}",
                        graph.n_nodes()
                    )));
                }
                two_node_optimal_matrix(noise_vars)
            }
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Rule::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown combination rule `{s}`")))
    }
}

fn fill_diagonal(w: &mut DMatrix<f64>) {
    let n = w.nrows();
    for k in 0..n {
        let off: f64 = (0..n).filter(|&l| l != k).map(|l| w[(l, k)]).sum();
        w[(k, k)] = 1.0 - off;
    }
}

fn wrap(w: DMatrix<f64>, graph: &Graph) -> CombinationMatrix {
    CombinationMatrix::new(w, graph.clone()).expect("rule weights are nonnegative")
}

/// `a_{lk} = 1/|𝒩_k|` on the neighbourhood of `k`.
pub fn uniform_weights(graph: &Graph) -> CombinationMatrix {
    let n = graph.n_nodes();
    let mut w = DMatrix::zeros(n, n);
    for k in 0..n {
        let share = 1.0 / graph.degree(k) as f64;
        for l in graph.neighbors(k) {
            w[(l, k)] = share;
        }
    }
    wrap(w, graph)
}

/// `a_{lk} = 1/max(|𝒩_k|, |𝒩_l|)` off the diagonal. Doubly stochastic.
pub fn metropolis_weights(graph: &Graph) -> CombinationMatrix {
    let n = graph.n_nodes();
    let deg: Vec<f64> = (0..n).map(|k| graph.degree(k) as f64).collect();
    let mut w = DMatrix::zeros(n, n);
    for k in 0..n {
        for l in graph.neighbors(k).filter(|&l| l != k) {
            w[(l, k)] = 1.0 / deg[k].max(deg[l]);
        }
    }
    fill_diagonal(&mut w);
    wrap(w, graph)
}

fn hastings_into(graph: &Graph, vars: &[f64], w: &mut DMatrix<f64>) {
    let n = graph.n_nodes();
    w.fill(0.0);
    for k in 0..n {
        let dk = graph.degree(k) as f64;
        for l in graph.neighbors(k).filter(|&l| l != k) {
            // σ_k² / max(|𝒩_k|σ_k², |𝒩_l|σ_l²) written through the variance
            // ratio so equal variances give the Metropolis weight bit for bit.
            let ratio = vars[l] / vars[k];
            w[(l, k)] = 1.0 / dk.max(graph.degree(l) as f64 * ratio);
        }
    }
    fill_diagonal(w);
}

fn check_vars(graph: &Graph, vars: &[f64]) -> Result<()> {
    if vars.len() != graph.n_nodes() {
        return Err(Error::Dimension(format!(
            "{} noise variances for {} nodes",
            vars.len(),
            graph.n_nodes()
        )));
    }
    if let Some(v) = vars.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::Config(format!("noise variance {v} must be positive")));
    }
    Ok(())
}

/// `a_{lk} = σ_k² / max(|𝒩_k|σ_k², |𝒩_l|σ_l²)` off the diagonal. The Perron
/// vector is `R_v⁻¹𝟙 / 𝟙ᵀR_v⁻¹𝟙`.
pub fn hastings_weights(graph: &Graph, noise_vars: &[f64]) -> Result<CombinationMatrix> {
    check_vars(graph, noise_vars)?;
    let n = graph.n_nodes();
    let mut w = DMatrix::zeros(n, n);
    hastings_into(graph, noise_vars, &mut w);
    Ok(wrap(w, graph))
}

/// Inverse-variance weighting `y° = R_v⁻¹𝟙 / 𝟙ᵀR_v⁻¹𝟙`.
pub fn inverse_variance_profile(noise_vars: &[f64]) -> DVector<f64> {
    let inv = DVector::from_iterator(noise_vars.len(), noise_vars.iter().map(|v| 1.0 / v));
    let s = inv.sum();
    inv / s
}

/// `(α, β)` minimising the two-node ATC network EMSE:
/// `α = σ₁⁻²/(σ₁⁻²+σ₂⁻²)`, `β = 1 − α`.
pub fn two_node_optimal_weights(noise_vars: &[f64]) -> Result<(f64, f64)> {
    if noise_vars.len() != 2 {
        return Err(Error::Dimension(format!("expected 2 noise variances, got {}", noise_vars.len())));
    }
    check_vars(&Graph::complete(2), noise_vars)?;
    let (i1, i2) = (1.0 / noise_vars[0], 1.0 / noise_vars[1]);
    Ok((i1 / (i1 + i2), i2 / (i1 + i2)))
}

/// `[[α, 1−β], [1−α, β]]` at the optimal `(α, β)`.
pub fn two_node_optimal_matrix(noise_vars: &[f64]) -> Result<CombinationMatrix> {
    let (alpha, beta) = two_node_optimal_weights(noise_vars)?;
    CombinationMatrix::two_node(alpha, beta)
}

/// Per-node running estimates `σ̂²_k(i) = (1−ν)σ̂²_k(i−1) + ν|e_k(i)|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseEstimatorState {
    est_vars: Vec<f64>,
    forget: f64,
    updates: Vec<usize>,
}

impl NoiseEstimatorState {
    pub fn new(n_nodes: usize, forget: f64) -> Result<Self> {
        if !(forget > 0.0 && forget <= 1.0) {
            return Err(Error::Config(format!("forgetting factor {forget} outside (0, 1]")));
        }
        Ok(Self { est_vars: vec![0.0; n_nodes], forget, updates: vec![0; n_nodes] })
    }

    pub fn est_vars(&self) -> &[f64] {
        &self.est_vars
    }

    pub fn forget(&self) -> f64 {
        self.forget
    }

    /// Number of iterations with uniform weights before the estimates are
    /// trusted: `⌈1/ν⌉`.
    pub fn warmup(&self) -> usize {
        (1.0 / self.forget).ceil() as usize
    }

    /// Whether every node has seen at least [`warmup`](Self::warmup) samples.
    pub fn is_warm(&self) -> bool {
        self.updates.iter().all(|&u| u >= self.warmup())
    }

    /// Feeds a squared residual to node `k`. The first sample replaces the
    /// estimate outright.
    pub fn observe(&mut self, k: usize, residual_sq: f64) {
        self.est_vars[k] = if self.updates[k] == 0 {
            residual_sq
        } else {
            (1.0 - self.forget) * self.est_vars[k] + self.forget * residual_sq
        };
        self.updates[k] += 1;
    }
}

/// Updates node `k`'s estimate with the residual `d_k − u_k w_prev`.
pub fn update_noise_estimate(
    state: &mut NoiseEstimatorState,
    k: usize,
    d_k: f64,
    u_k: &[f64],
    w_prev: &[f64],
) {
    let e = d_k - crate::model::dot(u_k, w_prev);
    state.observe(k, e * e);
}

/// Where an adaptive combination matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightSource {
    /// Estimates not settled yet; uniform weights used.
    WarmUp,
    /// Hastings weights at the current estimates.
    Estimated,
    /// Some estimate was not positive; uniform weights used.
    Fallback,
}

/// Hastings weights at the current variance estimates, with uniform weights
/// during warm-up or when an estimate is not strictly positive.
pub fn adaptive_hastings_step(
    graph: &Graph,
    state: &NoiseEstimatorState,
) -> (CombinationMatrix, WeightSource) {
    let mut w = DMatrix::zeros(graph.n_nodes(), graph.n_nodes());
    let src = adaptive_hastings_into(graph, state, &mut w);
    (wrap(w, graph), src)
}

/// Allocation-free form of [`adaptive_hastings_step`] for the simulator.
pub fn adaptive_hastings_into(
    graph: &Graph,
    state: &NoiseEstimatorState,
    w: &mut DMatrix<f64>,
) -> WeightSource {
    let src = if !state.is_warm() {
        WeightSource::WarmUp
    } else if state.est_vars.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        WeightSource::Fallback
    } else {
        hastings_into(graph, &state.est_vars, w);
        return WeightSource::Estimated;
    };
    w.copy_from(uniform_weights(graph).weights());
    src
}

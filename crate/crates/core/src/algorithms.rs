//! One-iteration state transitions for every estimation strategy.
//!
//! Distributed strategies keep one estimate per node; the centralized ones
//! (block and incremental) keep a single estimate. All start from zero.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dot, DataSample, NetworkModel};
use crate::rules::{adaptive_hastings_into, NoiseEstimatorState, WeightSource};
use crate::topology::{CombinationMatrix, Graph};

/// Entries beyond this magnitude count as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Standalone,
    Block,
    Incremental,
    Cta,
    Atc,
    GeneralPq,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 6] = [
        StrategyKind::Standalone,
        StrategyKind::Block,
        StrategyKind::Incremental,
        StrategyKind::Cta,
        StrategyKind::Atc,
        StrategyKind::GeneralPq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Standalone => "standalone",
            StrategyKind::Block => "block",
            StrategyKind::Incremental => "incremental",
            StrategyKind::Cta => "cta",
            StrategyKind::Atc => "atc",
            StrategyKind::GeneralPq => "general-pq",
        }
    }

    /// Block and incremental keep a single network-wide estimate.
    pub fn is_centralized(self) -> bool {
        matches!(self, StrategyKind::Block | StrategyKind::Incremental)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy `{s}`")))
    }
}

/// A strategy together with whatever combination weights it needs.
#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    Standalone,
    Block,
    Incremental,
    Cta(CombinationMatrix),
    Atc(CombinationMatrix),
    General { p: CombinationMatrix, q: CombinationMatrix },
    /// ATC with Hastings weights recomputed each iteration from running
    /// noise-variance estimates with forgetting factor `forget`.
    AdaptiveAtc { graph: Graph, forget: f64 },
}

fn check_combiner(cm: &CombinationMatrix, what: &str) -> Result<()> {
    cm.check_support()?;
    let report = cm.validate();
    if !report.left_stochastic {
        return Err(Error::Config(format!(
            "{what} is not left-stochastic (column sums off by {:e})",
            report.max_column_sum_error
        )));
    }
    Ok(())
}

impl Strategy {
    pub fn cta(a: CombinationMatrix) -> Result<Self> {
        check_combiner(&a, "A")?;
        Ok(Strategy::Cta(a))
    }

    pub fn atc(a: CombinationMatrix) -> Result<Self> {
        check_combiner(&a, "A")?;
        Ok(Strategy::Atc(a))
    }

    /// `P` combines before adaptation, `Q` after.
    pub fn general(p: CombinationMatrix, q: CombinationMatrix) -> Result<Self> {
        if p.n_nodes() != q.n_nodes() {
            return Err(Error::Dimension(format!(
                "P has {} nodes but Q has {}",
                p.n_nodes(),
                q.n_nodes()
            )));
        }
        check_combiner(&p, "P")?;
        check_combiner(&q, "Q")?;
        Ok(Strategy::General { p, q })
    }

    pub fn adaptive_atc(graph: Graph, forget: f64) -> Result<Self> {
        if !(forget > 0.0 && forget <= 1.0) {
            return Err(Error::Config(format!("forgetting factor {forget} outside (0, 1]")));
        }
        Ok(Strategy::AdaptiveAtc { graph, forget })
    }

    pub fn kind(&self) -> StrategyKind {
        match self {
            Strategy::Standalone => StrategyKind::Standalone,
            Strategy::Block => StrategyKind::Block,
            Strategy::Incremental => StrategyKind::Incremental,
            Strategy::Cta(_) => StrategyKind::Cta,
            Strategy::Atc(_) | Strategy::AdaptiveAtc { .. } => StrategyKind::Atc,
            Strategy::General { .. } => StrategyKind::GeneralPq,
        }
    }

    /// Number of nodes fixed by the combination weights, if any.
    pub fn n_nodes(&self) -> Option<usize> {
        match self {
            Strategy::Cta(a) | Strategy::Atc(a) => Some(a.n_nodes()),
            Strategy::General { p, .. } => Some(p.n_nodes()),
            Strategy::AdaptiveAtc { graph, .. } => Some(graph.n_nodes()),
            _ => None,
        }
    }
}

/// Row-major `rows × M` estimates; row `k` is `w_{k,i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimates {
    rows: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Estimates {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Self { rows, dim, data: vec![0.0; rows * dim] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn row_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn check_finite(&self, iteration: u64) -> Result<()> {
        if self.data.iter().all(|x| x.is_finite() && x.abs() <= DIVERGENCE_LIMIT) {
            Ok(())
        } else {
            Err(Error::Diverged { iteration: iteration as usize })
        }
    }
}

/// Per-node squared errors for one iteration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorRecord {
    /// `|u_{k,i} w̃_{k,i−1}|²`; for centralized strategies the per-node
    /// components of the stacked a-priori error.
    pub apriori_sq: Vec<f64>,
    /// `‖w° − w_{k,i}‖²`, replicated across nodes for centralized strategies.
    pub deviation_sq: Vec<f64>,
}

impl ErrorRecord {
    pub fn zeros(n_nodes: usize) -> Self {
        Self { apriori_sq: vec![0.0; n_nodes], deviation_sq: vec![0.0; n_nodes] }
    }
}

#[derive(Debug, Clone)]
struct AdaptiveState {
    graph: Graph,
    noise: NoiseEstimatorState,
    weights: DMatrix<f64>,
    source: WeightSource,
}

/// Everything a strategy carries between iterations.
#[derive(Debug, Clone)]
pub struct StrategyState {
    kind: StrategyKind,
    estimates: Estimates,
    phi: Vec<f64>,
    psi: Vec<f64>,
    iteration: u64,
    adaptive: Option<AdaptiveState>,
}

impl StrategyState {
    /// Zero-initialised state for `n_nodes` nodes and dimension `dim`.
    pub fn new(strategy: &Strategy, n_nodes: usize, dim: usize) -> Result<Self> {
        if let Some(n) = strategy.n_nodes() {
            if n != n_nodes {
                return Err(Error::Dimension(format!(
                    "combination weights are for {n} nodes, model has {n_nodes}"
                )));
            }
        }
        let kind = strategy.kind();
        let rows = if kind.is_centralized() { 1 } else { n_nodes };
        let adaptive = match strategy {
            Strategy::AdaptiveAtc { graph, forget } => Some(AdaptiveState {
                graph: graph.clone(),
                noise: NoiseEstimatorState::new(n_nodes, *forget)?,
                weights: DMatrix::zeros(n_nodes, n_nodes),
                source: WeightSource::WarmUp,
            }),
            _ => None,
        };
        Ok(Self {
            kind,
            estimates: Estimates::zeros(rows, dim),
            phi: vec![0.0; n_nodes * dim],
            psi: vec![0.0; n_nodes * dim],
            iteration: 0,
            adaptive,
        })
    }

    pub fn kind(&self) -> StrategyKind {
        self.kind
    }

    pub fn estimates(&self) -> &Estimates {
        &self.estimates
    }

    pub fn estimates_mut(&mut self) -> &mut Estimates {
        &mut self.estimates
    }

    /// Completed iterations.
    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    /// Current adaptive combination weights and their origin.
    pub fn adaptive_weights(&self) -> Option<(&DMatrix<f64>, WeightSource)> {
        self.adaptive.as_ref().map(|a| (&a.weights, a.source))
    }

    /// Current noise-variance estimates of the adaptive rule.
    pub fn noise_estimates(&self) -> Option<&[f64]> {
        self.adaptive.as_ref().map(|a| a.noise.est_vars())
    }

    /// Estimate held by node `k`.
    pub fn node_estimate(&self, k: usize) -> &[f64] {
        if self.kind.is_centralized() {
            self.estimates.row(0)
        } else {
            self.estimates.row(k)
        }
    }

    /// Advances one iteration, writing the errors into `rec`.
    pub fn step_into(
        &mut self,
        strategy: &Strategy,
        sample: &DataSample,
        model: &NetworkModel,
        rec: &mut ErrorRecord,
    ) -> Result<()> {
        let w_true = model.w_true().as_slice();
        match strategy {
            Strategy::Standalone => {
                self.diffuse(None, None, model.step_size(), sample, w_true, rec);
            }
            Strategy::Cta(a) => {
                self.diffuse(Some(a.weights()), None, model.step_size(), sample, w_true, rec);
            }
            Strategy::Atc(a) => {
                self.diffuse(None, Some(a.weights()), model.step_size(), sample, w_true, rec);
            }
            Strategy::General { p, q } => {
                self.diffuse(
                    Some(p.weights()),
                    Some(q.weights()),
                    model.step_size(),
                    sample,
                    w_true,
                    rec,
                );
            }
            Strategy::AdaptiveAtc { .. } => self.adaptive_atc(model.step_size(), sample, w_true, rec),
            Strategy::Block => self.block(model.centralized_step_size(), sample, w_true, rec),
            Strategy::Incremental => {
                self.incremental(model.centralized_step_size(), sample, w_true, rec)
            }
        }
        self.iteration += 1;
        self.estimates.check_finite(self.iteration)
    }

    /// Allocating convenience form of [`step_into`](Self::step_into).
    pub fn step(
        &mut self,
        strategy: &Strategy,
        sample: &DataSample,
        model: &NetworkModel,
    ) -> Result<ErrorRecord> {
        let mut rec = ErrorRecord::zeros(sample.n_nodes());
        self.step_into(strategy, sample, model, &mut rec)?;
        Ok(rec)
    }

    fn record_distributed_apriori(&self, sample: &DataSample, w_true: &[f64], rec: &mut ErrorRecord) {
        for k in 0..sample.n_nodes() {
            let u = sample.regressor(k);
            let e = dot(u, w_true) - dot(u, self.estimates.row(k));
            rec.apriori_sq[k] = e * e;
        }
    }

    fn record_distributed_deviation(&self, w_true: &[f64], rec: &mut ErrorRecord) {
        for (k, slot) in rec.deviation_sq.iter_mut().enumerate() {
            *slot = sq_dist(w_true, self.estimates.row(k));
        }
    }

    /// `φ = Σ p_lk w_l`, `ψ = φ + μ uᵀ(d − uφ)`, `w = Σ q_lk ψ_l`. `None`
    /// stands for the identity and skips that combination.
    fn diffuse(
        &mut self,
        p: Option<&DMatrix<f64>>,
        q: Option<&DMatrix<f64>>,
        mu: f64,
        sample: &DataSample,
        w_true: &[f64],
        rec: &mut ErrorRecord,
    ) {
        let n = sample.n_nodes();
        let m = sample.dim();
        self.record_distributed_apriori(sample, w_true, rec);
        match p {
            None => self.phi.copy_from_slice(self.estimates.as_slice()),
            Some(p) => combine(p, self.estimates.as_slice(), &mut self.phi, n, m),
        }
        for k in 0..n {
            let u = sample.regressor(k);
            let phi = &self.phi[k * m..(k + 1) * m];
            let g = mu * (sample.measurement(k) - dot(u, phi));
            let psi = &mut self.psi[k * m..(k + 1) * m];
            for j in 0..m {
                psi[j] = phi[j] + g * u[j];
            }
        }
        match q {
            None => self.estimates.as_mut_slice().copy_from_slice(&self.psi),
            Some(q) => combine(q, &self.psi, self.estimates.as_mut_slice(), n, m),
        }
        self.record_distributed_deviation(w_true, rec);
    }

    fn adaptive_atc(&mut self, mu: f64, sample: &DataSample, w_true: &[f64], rec: &mut ErrorRecord) {
        let mut ad = self.adaptive.take().expect("adaptive state present");
        for k in 0..sample.n_nodes() {
            let e = sample.measurement(k) - dot(sample.regressor(k), self.estimates.row(k));
            ad.noise.observe(k, e * e);
        }
        ad.source = adaptive_hastings_into(&ad.graph, &ad.noise, &mut ad.weights);
        self.diffuse(None, Some(&ad.weights), mu, sample, w_true, rec);
        self.adaptive = Some(ad);
    }

    fn centralized_apriori(&self, sample: &DataSample, w_true: &[f64], rec: &mut ErrorRecord) {
        let w = self.estimates.row(0);
        for k in 0..sample.n_nodes() {
            let u = sample.regressor(k);
            let e = dot(u, w_true) - dot(u, w);
            rec.apriori_sq[k] = e * e;
        }
    }

    fn centralized_deviation(&self, w_true: &[f64], rec: &mut ErrorRecord) {
        let d = sq_dist(w_true, self.estimates.row(0));
        rec.deviation_sq.fill(d);
    }

    /// `w_i = w_{i−1} + μ' Σ_k u_kᵀ(d_k − u_k w_{i−1})`.
    fn block(&mut self, mu_prime: f64, sample: &DataSample, w_true: &[f64], rec: &mut ErrorRecord) {
        let m = sample.dim();
        self.centralized_apriori(sample, w_true, rec);
        let grad = &mut self.psi[..m];
        grad.fill(0.0);
        let w = self.estimates.row(0);
        for k in 0..sample.n_nodes() {
            let u = sample.regressor(k);
            let e = sample.measurement(k) - dot(u, w);
            for j in 0..m {
                grad[j] += e * u[j];
            }
        }
        let w = self.estimates.row_mut(0);
        for j in 0..m {
            w[j] += mu_prime * grad[j];
        }
        self.centralized_deviation(w_true, rec);
    }

    /// `ψ_0 = w_{i−1}`, `ψ_k = ψ_{k−1} + μ' u_kᵀ(d_k − u_k ψ_{k−1})` for
    /// `k = 1..N` in ascending order, `w_i = ψ_N`.
    fn incremental(&mut self, mu_prime: f64, sample: &DataSample, w_true: &[f64], rec: &mut ErrorRecord) {
        self.centralized_apriori(sample, w_true, rec);
        let psi = self.estimates.row_mut(0);
        for k in 0..sample.n_nodes() {
            let u = sample.regressor(k);
            let g = mu_prime * (sample.measurement(k) - dot(u, psi));
            for j in 0..psi.len() {
                psi[j] += g * u[j];
            }
        }
        self.centralized_deviation(w_true, rec);
    }
}

/// `out_k = Σ_l c_lk x_l` over the nonzero weights, `l` ascending.
fn combine(c: &DMatrix<f64>, x: &[f64], out: &mut [f64], n: usize, m: usize) {
    for k in 0..n {
        let dst = &mut out[k * m..(k + 1) * m];
        dst.fill(0.0);
        for l in 0..n {
            let a = c[(l, k)];
            if a != 0.0 {
                let src = &x[l * m..(l + 1) * m];
                for j in 0..m {
                    dst[j] += a * src[j];
                }
            }
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn expect_kind(state: &StrategyState, kind: StrategyKind) -> Result<()> {
    if state.kind == kind {
        Ok(())
    } else {
        Err(Error::Config(format!("state is {} but {} step requested", state.kind, kind)))
    }
}

pub fn step_standalone(
    state: &mut StrategyState,
    sample: &DataSample,
    model: &NetworkModel,
) -> Result<ErrorRecord> {
    expect_kind(state, StrategyKind::Standalone)?;
    state.step(&Strategy::Standalone, sample, model)
}

pub fn step_block(state: &mut StrategyState, sample: &DataSample, model: &NetworkModel) -> Result<ErrorRecord> {
    expect_kind(state, StrategyKind::Block)?;
    state.step(&Strategy::Block, sample, model)
}

pub fn step_incremental(
    state: &mut StrategyState,
    sample: &DataSample,
    model: &NetworkModel,
) -> Result<ErrorRecord> {
    expect_kind(state, StrategyKind::Incremental)?;
    state.step(&Strategy::Incremental, sample, model)
}

/// One general diffusion iteration with combiners `P` and `Q`. Checks
/// dimensions and graph support on every call; build a [`Strategy`] once to
/// avoid that in loops.
pub fn step_general_diffusion(
    state: &mut StrategyState,
    sample: &DataSample,
    model: &NetworkModel,
    p: &CombinationMatrix,
    q: &CombinationMatrix,
) -> Result<ErrorRecord> {
    expect_kind(state, StrategyKind::GeneralPq)?;
    let strategy = Strategy::general(p.clone(), q.clone())?;
    check_nodes(&strategy, sample)?;
    state.step(&strategy, sample, model)
}

pub fn step_cta(
    state: &mut StrategyState,
    sample: &DataSample,
    model: &NetworkModel,
    a: &CombinationMatrix,
) -> Result<ErrorRecord> {
    expect_kind(state, StrategyKind::Cta)?;
    let strategy = Strategy::cta(a.clone())?;
    check_nodes(&strategy, sample)?;
    state.step(&strategy, sample, model)
}

pub fn step_atc(
    state: &mut StrategyState,
    sample: &DataSample,
    model: &NetworkModel,
    a: &CombinationMatrix,
) -> Result<ErrorRecord> {
    expect_kind(state, StrategyKind::Atc)?;
    let strategy = Strategy::atc(a.clone())?;
    check_nodes(&strategy, sample)?;
    state.step(&strategy, sample, model)
}

fn check_nodes(strategy: &Strategy, sample: &DataSample) -> Result<()> {
    match strategy.n_nodes() {
        Some(n) if n != sample.n_nodes() => Err(Error::Dimension(format!(
            "combination weights are for {n} nodes, sample has {}",
            sample.n_nodes()
        ))),
        _ => Ok(()),
    }
}

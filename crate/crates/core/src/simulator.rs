//! Monte Carlo ensembles, learning curves and theory comparisons.
//!
//! Trials are split into fixed chunks that run on the rayon pool. Each chunk
//! is accumulated in trial order and the chunk sums are merged by a fixed
//! pairwise tree, so curves are bit-identical for any thread count.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{ErrorRecord, Strategy, StrategyKind, StrategyState};
use crate::error::{Error, Result};
use crate::model::{generate_sample_into, DataSample, NetworkModel, RngStream};
use crate::rules::Rule;
use crate::theory::{dominant_mode, TheoryReport};
use crate::topology::Graph;
use crate::db;

/// Trials per work unit.
const CHUNK: usize = 4;
/// Resolution of the per-trial block means kept for standard errors.
const SE_BLOCKS: usize = 200;
/// Largest drift across the steady window still counted as converged.
pub const SLOPE_THRESHOLD_DB: f64 = 0.1;
/// Largest fraction of diverged trials tolerated in an ensemble.
pub const MAX_DIVERGED_FRACTION: f64 = 0.01;

/// Strategy plus the name of the rule producing its weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySpec {
    pub kind: StrategyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<Rule>,
    /// Forgetting factor `ν` of the adaptive rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forget: Option<f64>,
}

impl StrategySpec {
    pub const DEFAULT_FORGET: f64 = 0.1;

    pub fn new(kind: StrategyKind, rule: Option<Rule>) -> Self {
        Self { kind, rule, forget: None }
    }

    pub fn standalone() -> Self {
        Self::new(StrategyKind::Standalone, None)
    }

    pub fn block() -> Self {
        Self::new(StrategyKind::Block, None)
    }

    pub fn incremental() -> Self {
        Self::new(StrategyKind::Incremental, None)
    }

    pub fn cta(rule: Rule) -> Self {
        Self::new(StrategyKind::Cta, Some(rule))
    }

    pub fn atc(rule: Rule) -> Self {
        Self::new(StrategyKind::Atc, Some(rule))
    }

    pub fn adaptive_atc(forget: f64) -> Self {
        Self { kind: StrategyKind::Atc, rule: Some(Rule::AdaptiveHastings), forget: Some(forget) }
    }

    /// `kind` or `kind-rule`, used for file names and tables.
    pub fn label(&self) -> String {
        match self.rule {
            Some(r) => format!("{}-{}", self.kind.name(), r.name()),
            None => self.kind.name().to_string(),
        }
    }

    /// Instantiates the weights for `graph` and the model's noise profile.
    pub fn build(&self, model: &NetworkModel, graph: &Graph) -> Result<Strategy> {
        if graph.n_nodes() != model.n_nodes() {
            return Err(Error::Dimension(format!(
                "graph has {} nodes, model has {}",
                graph.n_nodes(),
                model.n_nodes()
            )));
        }
        let no_rule = |s: Strategy| match self.rule {
            None => Ok(s),
            Some(r) => Err(Error::Config(format!("{} takes no combination rule, got `{r}`", self.kind))),
        };
        if self.forget.is_some() && self.rule != Some(Rule::AdaptiveHastings) {
            return Err(Error::Config("`forget` only applies to the adaptive-hastings rule".into()));
        }
        match self.kind {
            StrategyKind::Standalone => no_rule(Strategy::Standalone),
            StrategyKind::Block => no_rule(Strategy::Block),
            StrategyKind::Incremental => no_rule(Strategy::Incremental),
            StrategyKind::Cta | StrategyKind::Atc => {
                let rule = self
                    .rule
                    .ok_or_else(|| Error::Config(format!("{} needs a combination rule", self.kind)))?;
                if rule == Rule::AdaptiveHastings {
                    if self.kind == StrategyKind::Cta {
                        return Err(Error::Unsupported("adaptive weights are implemented for ATC only".into()));
                    }
                    return Strategy::adaptive_atc(graph.clone(), self.forget.unwrap_or(Self::DEFAULT_FORGET));
                }
                let a = rule.build(graph, model.noise_vars())?;
                if self.kind == StrategyKind::Cta {
                    Strategy::cta(a)
                } else {
                    Strategy::atc(a)
                }
            }
            StrategyKind::GeneralPq => Err(Error::Unsupported(
                "general (P, Q) diffusion has no single-rule form; build Strategy::general directly".into(),
            )),
        }
    }
}

/// One Monte Carlo experiment.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub model: NetworkModel,
    pub graph: Graph,
    pub strategy: StrategySpec,
    pub n_iters: usize,
    pub n_trials: usize,
    pub seed: u64,
    pub steady_window_frac: f64,
}

impl ExperimentSpec {
    pub const DEFAULT_WINDOW: f64 = 0.2;

    pub fn new(model: NetworkModel, graph: Graph, strategy: StrategySpec, n_iters: usize, n_trials: usize, seed: u64) -> Self {
        Self { model, graph, strategy, n_iters, n_trials, seed, steady_window_frac: Self::DEFAULT_WINDOW }
    }

    fn validate(&self) -> Result<f64> {
        if self.n_iters == 0 || self.n_trials == 0 {
            return Err(Error::Config("n_iters and n_trials must be positive".into()));
        }
        if !(self.steady_window_frac > 0.0 && self.steady_window_frac <= 1.0) {
            return Err(Error::Config(format!(
                "steady_window_frac must lie in (0, 1], got {}",
                self.steady_window_frac
            )));
        }
        let mode = dominant_mode(&self.model, self.strategy.kind)?;
        if mode >= 1.0 {
            return Err(Error::Unstable(format!("dominant mode {mode} does not decay")));
        }
        if (self.n_iters as f64) * (1.0 - mode) < 20.0 {
            log::warn!(
                "{}: {} iterations cover only {:.1} time constants of mode {mode:.6}",
                self.strategy.label(),
                self.n_iters,
                self.n_iters as f64 * (1.0 - mode)
            );
        }
        Ok(mode)
    }
}

/// Trial-averaged learning curves of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub strategy: String,
    pub n_trials: usize,
    pub n_diverged: usize,
    /// Network EMSE per iteration.
    pub emse_per_iter: Vec<f64>,
    pub msd_per_iter: Vec<f64>,
    /// `per_node_emse[k][i]`.
    pub per_node_emse: Vec<Vec<f64>>,
    pub per_node_msd: Vec<Vec<f64>>,
    pub steady_window_frac: f64,
    pub steady_emse: f64,
    pub steady_msd: f64,
    /// Per-trial means of the network EMSE over `SE_BLOCKS` equal blocks of
    /// iterations, trial-major.
    trial_block_emse: Vec<f64>,
    trial_block_msd: Vec<f64>,
    n_blocks: usize,
}

impl LearningCurve {
    pub fn n_iters(&self) -> usize {
        self.emse_per_iter.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.per_node_emse.len()
    }

    /// Trials that entered the average.
    pub fn n_used(&self) -> usize {
        self.n_trials - self.n_diverged
    }

    pub fn steady(&self) -> SteadyState {
        steady_state(self, self.steady_window_frac).expect("window validated at construction")
    }

    /// Columns `iteration,emse_db,msd_db,emse_db_node1,..,msd_db_node1,..`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.n_nodes();
        let mut header = vec!["iteration".to_string(), "emse_db".into(), "msd_db".into()];
        header.extend((1..=n).map(|k| format!("emse_db_node{k}")));
        header.extend((1..=n).map(|k| format!("msd_db_node{k}")));
        w.write_record(&header).map_err(csv_err)?;
        let mut row = Vec::with_capacity(header.len());
        for i in 0..self.n_iters() {
            row.clear();
            row.push(i.to_string());
            row.push(fmt_db(self.emse_per_iter[i]));
            row.push(fmt_db(self.msd_per_iter[i]));
            row.extend(self.per_node_emse.iter().map(|c| fmt_db(c[i])));
            row.extend(self.per_node_msd.iter().map(|c| fmt_db(c[i])));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("ascii output"))
    }

    /// Steady values, fitted rate and optional theory deltas.
    pub fn summary(&self, verdict: Option<Verdict>) -> CurveSummary {
        let steady = self.steady();
        CurveSummary {
            strategy: self.strategy.clone(),
            n_trials: self.n_trials,
            n_diverged: self.n_diverged,
            n_iters: self.n_iters(),
            steady_emse_db: db(steady.emse),
            steady_msd_db: db(steady.msd),
            fitted_rate: measure_convergence_rate(self).ok(),
            steady,
            verdict,
        }
    }
}

fn fmt_db(x: f64) -> String {
    format!("{:.9}", db(x.max(f64::MIN_POSITIVE)))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// JSON summary of one learning curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub strategy: String,
    pub n_trials: usize,
    pub n_diverged: usize,
    pub n_iters: usize,
    pub steady_emse_db: f64,
    pub steady_msd_db: f64,
    pub steady: SteadyState,
    pub fitted_rate: Option<f64>,
    pub verdict: Option<Verdict>,
}

/// Sums over a group of trials; merged pairwise.
#[derive(Debug, Clone)]
struct Accum {
    n_nodes: usize,
    n_iters: usize,
    /// Node-major sums: node `k`, iteration `i` at `k·n_iters + i`.
    emse: Vec<f64>,
    msd: Vec<f64>,
    used: usize,
    diverged: Vec<(usize, usize)>,
    block_emse: Vec<f64>,
    block_msd: Vec<f64>,
}

impl Accum {
    fn new(n_nodes: usize, n_iters: usize) -> Self {
        Self {
            n_nodes,
            n_iters,
            emse: vec![0.0; n_nodes * n_iters],
            msd: vec![0.0; n_nodes * n_iters],
            used: 0,
            diverged: Vec::new(),
            block_emse: Vec::new(),
            block_msd: Vec::new(),
        }
    }

    fn merge(mut self, other: Accum) -> Accum {
        for (a, b) in self.emse.iter_mut().zip(&other.emse) {
            *a += b;
        }
        for (a, b) in self.msd.iter_mut().zip(&other.msd) {
            *a += b;
        }
        self.used += other.used;
        self.diverged.extend(other.diverged);
        self.block_emse.extend(other.block_emse);
        self.block_msd.extend(other.block_msd);
        self
    }
}

fn pairwise(mut parts: Vec<Accum>) -> Accum {
    if parts.len() == 1 {
        return parts.pop().unwrap();
    }
    let right = parts.split_off(parts.len() / 2);
    pairwise(parts).merge(pairwise(right))
}

fn block_bounds(n_iters: usize, n_blocks: usize, b: usize) -> (usize, usize) {
    (b * n_iters / n_blocks, (b + 1) * n_iters / n_blocks)
}

struct TrialBuffers {
    emse: Vec<f64>,
    msd: Vec<f64>,
    sample: DataSample,
    rec: ErrorRecord,
}

fn run_trial(spec: &ExperimentSpec, strategy: &Strategy, trial: usize, buf: &mut TrialBuffers) -> Result<()> {
    let (n, m, iters) = (spec.model.n_nodes(), spec.model.dim(), spec.n_iters);
    let mut state = StrategyState::new(strategy, n, m)?;
    let mut rng = RngStream::new(spec.seed, trial as u64);
    for i in 0..iters {
        generate_sample_into(&spec.model, &mut rng, &mut buf.sample);
        state.step_into(strategy, &buf.sample, &spec.model, &mut buf.rec)?;
        for k in 0..n {
            buf.emse[k * iters + i] = buf.rec.apriori_sq[k];
            buf.msd[k * iters + i] = buf.rec.deviation_sq[k];
        }
    }
    Ok(())
}

fn run_chunk(spec: &ExperimentSpec, strategy: &Strategy, trials: std::ops::Range<usize>, n_blocks: usize) -> Result<Accum> {
    let (n, m, iters) = (spec.model.n_nodes(), spec.model.dim(), spec.n_iters);
    let mut acc = Accum::new(n, iters);
    let mut buf = TrialBuffers {
        emse: vec![0.0; n * iters],
        msd: vec![0.0; n * iters],
        sample: DataSample::zeros(n, m),
        rec: ErrorRecord::zeros(n),
    };
    for trial in trials {
        match run_trial(spec, strategy, trial, &mut buf) {
            Ok(()) => {}
            Err(Error::Diverged { iteration }) => {
                acc.diverged.push((trial, iteration));
                continue;
            }
            Err(e) => return Err(e),
        }
        for (a, v) in acc.emse.iter_mut().zip(&buf.emse) {
            *a += v;
        }
        for (a, v) in acc.msd.iter_mut().zip(&buf.msd) {
            *a += v;
        }
        acc.used += 1;
        for b in 0..n_blocks {
            let (lo, hi) = block_bounds(iters, n_blocks, b);
            let mean = |x: &[f64]| {
                let s: f64 = (0..n).map(|k| x[k * iters + lo..k * iters + hi].iter().sum::<f64>()).sum();
                s / ((hi - lo) * n) as f64
            };
            acc.block_emse.push(mean(&buf.emse));
            acc.block_msd.push(mean(&buf.msd));
        }
    }
    Ok(acc)
}

/// Runs `n_trials` independent trials and averages their learning curves.
///
/// Trial `t` draws its data from `RngStream::new(seed, t)`, so every
/// strategy run with the same seed sees the same data.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<LearningCurve> {
    spec.validate()?;
    let strategy = spec.strategy.build(&spec.model, &spec.graph)?;
    run_with_strategy(spec, &strategy, spec.strategy.label())
}

/// [`run_experiment`] with an already instantiated strategy; `spec.strategy`
/// only supplies the stability check.
pub fn run_with_strategy(spec: &ExperimentSpec, strategy: &Strategy, label: String) -> Result<LearningCurve> {
    spec.validate()?;
    if let Some(n) = strategy.n_nodes() {
        if n != spec.model.n_nodes() {
            return Err(Error::Dimension(format!("strategy has {n} nodes, model {}", spec.model.n_nodes())));
        }
    }
    let (n, iters) = (spec.model.n_nodes(), spec.n_iters);
    let n_blocks = SE_BLOCKS.min(iters);
    let chunks: Vec<_> = (0..spec.n_trials.div_ceil(CHUNK))
        .map(|c| c * CHUNK..((c + 1) * CHUNK).min(spec.n_trials))
        .collect();
    let parts = chunks
        .into_par_iter()
        .map(|r| run_chunk(spec, strategy, r, n_blocks))
        .collect::<Result<Vec<_>>>()?;
    let acc = pairwise(parts);
    let n_diverged = acc.diverged.len();
    if n_diverged as f64 > MAX_DIVERGED_FRACTION * spec.n_trials as f64 || acc.used == 0 {
        let (trial, iteration) = acc.diverged[0];
        log::error!("{label}: trial {trial} diverged at iteration {iteration}");
        return Err(Error::EnsembleDiverged { diverged: n_diverged, trials: spec.n_trials });
    }
    if n_diverged > 0 {
        log::warn!("{label}: discarded {n_diverged} diverged trials");
    }
    debug_assert_eq!((acc.n_nodes, acc.n_iters), (n, iters));

    let scale = 1.0 / acc.used as f64;
    let per_node = |sums: &[f64]| -> Vec<Vec<f64>> {
        (0..n).map(|k| sums[k * iters..(k + 1) * iters].iter().map(|v| v * scale).collect()).collect()
    };
    let per_node_emse = per_node(&acc.emse);
    let per_node_msd = per_node(&acc.msd);
    let network = |p: &[Vec<f64>]| -> Vec<f64> {
        (0..iters).map(|i| p.iter().map(|c| c[i]).sum::<f64>() / n as f64).collect()
    };
    let mut curve = LearningCurve {
        strategy: label,
        n_trials: spec.n_trials,
        n_diverged,
        emse_per_iter: network(&per_node_emse),
        msd_per_iter: network(&per_node_msd),
        per_node_emse,
        per_node_msd,
        steady_window_frac: spec.steady_window_frac,
        steady_emse: 0.0,
        steady_msd: 0.0,
        trial_block_emse: acc.block_emse,
        trial_block_msd: acc.block_msd,
        n_blocks,
    };
    let s = steady_state(&curve, spec.steady_window_frac)?;
    curve.steady_emse = s.emse;
    curve.steady_msd = s.msd;
    Ok(curve)
}

/// Steady-state estimate over the final part of a learning curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub emse: f64,
    pub msd: f64,
    pub per_node_emse: Vec<f64>,
    pub per_node_msd: Vec<f64>,
    /// Standard error of `emse` across trials.
    pub emse_se: f64,
    pub msd_se: f64,
    pub window_len: usize,
    /// Fitted EMSE drift across the window, in dB.
    pub drift_db: f64,
    /// Standard error of `drift_db` across trials; NaN below two trials.
    pub drift_se_db: f64,
    /// Drift within [`SLOPE_THRESHOLD_DB`], or within two standard errors.
    pub converged: bool,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Least-squares slope of `y` against its index.
fn slope(y: &[f64]) -> f64 {
    let x: Vec<f64> = (0..y.len()).map(|i| i as f64).collect();
    slope_xy(&x, y)
}

fn slope_xy(x: &[f64], y: &[f64]) -> f64 {
    if y.len() < 2 {
        return 0.0;
    }
    let (xm, ym) = (mean(x), mean(y));
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - xm) * (b - ym);
        sxx += (a - xm) * (a - xm);
    }
    if sxx == 0.0 { 0.0 } else { sxy / sxx }
}

fn mean_se(x: &[f64]) -> f64 {
    let t = x.len();
    if t < 2 {
        return f64::NAN;
    }
    let m = mean(x);
    let var = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (t - 1) as f64;
    (var / t as f64).sqrt()
}

/// Mean of the last `ceil(window_frac · n_iters)` iterations, with a slope
/// test on the EMSE in dB and standard errors from per-trial block means
/// lying inside the window.
pub fn steady_state(curve: &LearningCurve, window_frac: f64) -> Result<SteadyState> {
    let iters = curve.n_iters();
    if !(window_frac > 0.0 && window_frac <= 1.0) || iters == 0 {
        return Err(Error::Config(format!("steady window fraction {window_frac} must lie in (0, 1]")));
    }
    let len = ((window_frac * iters as f64).ceil() as usize).clamp(1, iters);
    let start = iters - len;
    let tail = |c: &[f64]| mean(&c[start..]);
    let emse_db: Vec<f64> = curve.emse_per_iter[start..].iter().map(|v| db(v.max(f64::MIN_POSITIVE))).collect();
    let drift_db = slope(&emse_db) * len as f64;

    let first_block = (0..curve.n_blocks)
        .find(|&b| block_bounds(iters, curve.n_blocks, b).0 >= start)
        .unwrap_or(curve.n_blocks - 1);
    let bounds: Vec<(usize, usize)> =
        (first_block..curve.n_blocks).map(|b| block_bounds(iters, curve.n_blocks, b)).collect();
    let total: usize = bounds.iter().map(|(lo, hi)| hi - lo).sum();
    let per_trial = |blocks: &[f64]| -> Vec<f64> {
        blocks
            .chunks(curve.n_blocks)
            .map(|t| {
                let w = &t[first_block..];
                w.iter().zip(&bounds).map(|(m, (lo, hi))| m * (hi - lo) as f64).sum::<f64>() / total as f64
            })
            .collect()
    };
    let se = |blocks: &[f64]| mean_se(&per_trial(blocks));
    let centres: Vec<f64> = bounds.iter().map(|(lo, hi)| (lo + hi - 1) as f64 / 2.0).collect();
    let trial_drifts: Vec<f64> = curve
        .trial_block_emse
        .chunks(curve.n_blocks)
        .map(|t| slope_xy(&centres, &t[first_block..]) * len as f64)
        .collect();
    let emse = tail(&curve.emse_per_iter);
    let drift_se_db = 10.0 / std::f64::consts::LN_10 * mean_se(&trial_drifts) / emse;
    Ok(SteadyState {
        emse,
        msd: tail(&curve.msd_per_iter),
        per_node_emse: curve.per_node_emse.iter().map(|c| tail(c)).collect(),
        per_node_msd: curve.per_node_msd.iter().map(|c| tail(c)).collect(),
        emse_se: se(&curve.trial_block_emse),
        msd_se: se(&curve.trial_block_msd),
        window_len: len,
        drift_db,
        drift_se_db,
        converged: drift_db.abs() <= SLOPE_THRESHOLD_DB || drift_db.abs() <= 2.0 * drift_se_db,
    })
}

/// Simulated against predicted value of one quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub simulated: f64,
    pub theory: f64,
    /// `10log10(simulated) − 10log10(theory)`.
    pub delta_db: f64,
    pub within: bool,
}

impl Delta {
    pub fn new(simulated: f64, theory: f64, tol_db: f64) -> Self {
        let delta_db = db(simulated) - db(theory);
        Self { simulated, theory, delta_db, within: delta_db.abs() <= tol_db }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub strategy: String,
    pub tol_db: f64,
    pub network_emse: Delta,
    pub network_msd: Delta,
    pub per_node_emse: Vec<Delta>,
    pub per_node_msd: Vec<Delta>,
    pub pass: bool,
}

impl Verdict {
    /// Largest absolute deviation over all compared quantities.
    pub fn worst_db(&self) -> f64 {
        std::iter::once(&self.network_emse)
            .chain([&self.network_msd])
            .chain(&self.per_node_emse)
            .chain(&self.per_node_msd)
            .map(|d| d.delta_db.abs())
            .fold(0.0, f64::max)
    }
}

/// Compares steady network and per-node EMSE/MSD against `report`.
/// A node-count mismatch fails the verdict.
pub fn compare_to_theory(curve: &LearningCurve, report: &TheoryReport, tol_db: f64) -> Verdict {
    let s = curve.steady();
    let nodes = |sim: &[f64], th: &[f64]| -> Vec<Delta> {
        sim.iter().zip(th).map(|(a, b)| Delta::new(*a, *b, tol_db)).collect()
    };
    let network_emse = Delta::new(s.emse, report.network_emse, tol_db);
    let network_msd = Delta::new(s.msd, report.network_msd, tol_db);
    let per_node_emse = nodes(&s.per_node_emse, &report.per_node_emse);
    let per_node_msd = nodes(&s.per_node_msd, &report.per_node_msd);
    let pass = report.n_nodes() == curve.n_nodes()
        && network_emse.within
        && network_msd.within
        && per_node_emse.iter().chain(&per_node_msd).all(|d| d.within);
    Verdict {
        strategy: curve.strategy.clone(),
        tol_db,
        network_emse,
        network_msd,
        per_node_emse,
        per_node_msd,
        pass,
    }
}

/// Per-iteration decay factor of the EMSE transient.
///
/// Fits `log(EMSE(i) − steady)` by least squares over the iterations before
/// the excess first drops below three times the steady value.
pub fn measure_convergence_rate(curve: &LearningCurve) -> Result<f64> {
    fit_decay(&curve.emse_per_iter, curve.steady_emse)
}

fn fit_decay(emse: &[f64], steady: f64) -> Result<f64> {
    let first = *emse.first().ok_or_else(|| Error::NoTransient("empty curve".into()))?;
    if !(first >= 10.0 * steady) || !(steady >= 0.0) {
        return Err(Error::NoTransient(format!(
            "initial EMSE {first:e} is not at least ten times the steady value {steady:e}"
        )));
    }
    let floor = 3.0 * steady;
    let end = emse
        .iter()
        .position(|v| v - steady <= floor)
        .unwrap_or(emse.len());
    if end < 3 {
        return Err(Error::NoTransient(format!("only {end} transient samples")));
    }
    let logs: Vec<f64> = emse[..end].iter().map(|v| (v - steady).ln()).collect();
    Ok(slope(&logs).exp())
}

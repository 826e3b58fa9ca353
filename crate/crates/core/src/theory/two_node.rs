//! Two-node closed forms.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::modes::dominant_mode;
use super::{TheoryReport, XiConvention};
use crate::algorithms::StrategyKind;
use crate::error::{Error, Result};
use crate::model::NetworkModel;
use crate::rules::Rule;

/// Constants shared by the two-node expressions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoNodeConstants {
    /// `μ Tr(R_u) / 4`
    pub c1: f64,
    /// `μ² ‖λ‖² / 2`
    pub c2: f64,
    /// `μ' Tr(R_u) / 4`
    pub c3: f64,
    /// `μ M / 4`
    pub c1p: f64,
    /// `μ² Tr(R_u) / 2`
    pub c2p: f64,
    /// `μ' M / 4`
    pub c3p: f64,
    /// `(σ₁² + σ₂²) / 2`
    pub sigma_arth: f64,
    /// `2σ₁²σ₂² / (σ₁² + σ₂²)`
    pub sigma_harm: f64,
    /// `σ₂² / σ₁²`
    pub gamma: f64,
}

impl TwoNodeConstants {
    pub fn new(model: &NetworkModel) -> Result<Self> {
        require_two(model)?;
        let mu = model.step_size();
        let mu_p = model.centralized_step_size();
        let sp = model.spectral();
        let m = model.dim() as f64;
        let (s1, s2) = (model.noise_vars()[0], model.noise_vars()[1]);
        let sum = s1 + s2;
        Ok(Self {
            c1: mu * sp.trace / 4.0,
            c2: mu * mu * sp.norm_sq / 2.0,
            c3: mu_p * sp.trace / 4.0,
            c1p: mu * m / 4.0,
            c2p: mu * mu * sp.trace / 2.0,
            c3p: mu_p * m / 4.0,
            sigma_arth: sum / 2.0,
            sigma_harm: if sum > 0.0 { 2.0 * s1 * s2 / sum } else { 0.0 },
            gamma: s2 / s1,
        })
    }
}

fn require_two(model: &NetworkModel) -> Result<()> {
    if model.n_nodes() != 2 {
        return Err(Error::Unsupported(format!(
            "two-node formulas need N = 2, model has {} nodes",
            model.n_nodes()
        )));
    }
    Ok(())
}

/// Strategy and weight combinations with two-node closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum TwoNodeCase {
    OptAtc,
    OptCta,
    UnfAtc,
    UnfCta,
    Block,
    Incremental,
    Standalone,
}

impl TwoNodeCase {
    pub const ALL: [TwoNodeCase; 7] = [
        TwoNodeCase::OptAtc,
        TwoNodeCase::OptCta,
        TwoNodeCase::UnfAtc,
        TwoNodeCase::UnfCta,
        TwoNodeCase::Block,
        TwoNodeCase::Incremental,
        TwoNodeCase::Standalone,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TwoNodeCase::OptAtc => "opt-atc",
            TwoNodeCase::OptCta => "opt-cta",
            TwoNodeCase::UnfAtc => "unf-atc",
            TwoNodeCase::UnfCta => "unf-cta",
            TwoNodeCase::Block => "block",
            TwoNodeCase::Incremental => "incremental",
            TwoNodeCase::Standalone => "standalone",
        }
    }

    pub fn kind(self) -> StrategyKind {
        match self {
            TwoNodeCase::OptAtc | TwoNodeCase::UnfAtc => StrategyKind::Atc,
            TwoNodeCase::OptCta | TwoNodeCase::UnfCta => StrategyKind::Cta,
            TwoNodeCase::Block => StrategyKind::Block,
            TwoNodeCase::Incremental => StrategyKind::Incremental,
            TwoNodeCase::Standalone => StrategyKind::Standalone,
        }
    }

    /// Combination rule, for the diffusion cases.
    pub fn rule(self) -> Option<Rule> {
        match self {
            TwoNodeCase::OptAtc | TwoNodeCase::OptCta => Some(Rule::TwoNodeOptimal),
            TwoNodeCase::UnfAtc | TwoNodeCase::UnfCta => Some(Rule::Uniform),
            _ => None,
        }
    }

    /// Inverse of ([`kind`](Self::kind), [`rule`](Self::rule)). Metropolis
    /// weights coincide with uniform ones on two nodes.
    pub fn from_parts(kind: StrategyKind, rule: Option<Rule>) -> Result<Self> {
        use StrategyKind as K;
        match (kind, rule) {
            (K::Standalone, _) => Ok(TwoNodeCase::Standalone),
            (K::Block, _) => Ok(TwoNodeCase::Block),
            (K::Incremental, _) => Ok(TwoNodeCase::Incremental),
            (K::Atc, Some(Rule::TwoNodeOptimal)) => Ok(TwoNodeCase::OptAtc),
            (K::Cta, Some(Rule::TwoNodeOptimal)) => Ok(TwoNodeCase::OptCta),
            (K::Atc, Some(Rule::Uniform | Rule::Metropolis)) => Ok(TwoNodeCase::UnfAtc),
            (K::Cta, Some(Rule::Uniform | Rule::Metropolis)) => Ok(TwoNodeCase::UnfCta),
            _ => Err(Error::Unsupported(format!(
                "no two-node closed form for {kind} with {}",
                rule.map_or("no weights".to_string(), |r| r.to_string())
            ))),
        }
    }
}

impl fmt::Display for TwoNodeCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TwoNodeCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TwoNodeCase::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown two-node strategy `{s}`")))
    }
}

/// Closed-form per-node and network EMSE/MSD for a two-node case.
pub fn two_node_case(model: &NetworkModel, case: TwoNodeCase) -> Result<TheoryReport> {
    let c = TwoNodeConstants::new(model)?;
    let s = model.noise_vars();
    let (sa, sh) = (c.sigma_arth, c.sigma_harm);
    let (emse, msd): (Vec<f64>, Vec<f64>) = match case {
        TwoNodeCase::OptAtc => (vec![c.c1 * sh; 2], vec![c.c1p * sh; 2]),
        TwoNodeCase::OptCta => {
            let extra = |k: usize, c2: f64| if sa > 0.0 { c2 * s[k] * s[k] / sa } else { 0.0 };
            (
                (0..2).map(|k| c.c1 * sh + extra(k, c.c2)).collect(),
                (0..2).map(|k| c.c1p * sh + extra(k, c.c2p)).collect(),
            )
        }
        TwoNodeCase::UnfAtc => (vec![c.c1 * sa; 2], vec![c.c1p * sa; 2]),
        TwoNodeCase::UnfCta => (
            (0..2).map(|k| c.c1 * sa + c.c2 * (2.0 * s[k] - sa)).collect(),
            (0..2).map(|k| c.c1p * sa + c.c2p * (2.0 * s[k] - sa)).collect(),
        ),
        TwoNodeCase::Block | TwoNodeCase::Incremental => {
            (vec![2.0 * c.c3 * sa; 2], vec![2.0 * c.c3p * sa; 2])
        }
        TwoNodeCase::Standalone => (
            s.iter().map(|v| 2.0 * c.c1 * v).collect(),
            s.iter().map(|v| 2.0 * c.c1p * v).collect(),
        ),
    };
    let weights = match case.rule() {
        Some(Rule::TwoNodeOptimal) => {
            let (a, b) = crate::rules::two_node_optimal_weights(s)?;
            format!("two-node-optimal (alpha={a}, beta={b})")
        }
        Some(r) => r.to_string(),
        None => "none".into(),
    };
    Ok(TheoryReport::from_nodes(case.name(), weights, emse, msd, dominant_mode(model, case.kind())?))
}

/// [`two_node_case`] keyed by strategy kind and rule.
pub fn two_node_table(model: &NetworkModel, kind: StrategyKind, rule: Option<Rule>) -> Result<TheoryReport> {
    require_two(model)?;
    two_node_case(model, TwoNodeCase::from_parts(kind, rule)?)
}

struct TwoNodeTerms {
    first: f64,
    cross: f64,
    second: f64,
    eta: f64,
}

fn terms(model: &NetworkModel, alpha: f64, beta: f64) -> TwoNodeTerms {
    let (s1, s2) = (model.noise_vars()[0], model.noise_vars()[1]);
    let eta = alpha + beta - 1.0;
    TwoNodeTerms {
        first: s1 * (1.0 - beta).powi(2) + s2 * (1.0 - alpha).powi(2),
        cross: (alpha - beta) * (s2 * (1.0 - alpha) - s1 * (1.0 - beta)),
        second: (s1 + s2) * ((1.0 - alpha).powi(2) + (1.0 - beta).powi(2)) / 2.0,
        eta,
    }
}

/// Network EMSE of CTA diffusion on two nodes with `A = [[α, 1−β], [1−α, β]]`.
pub fn two_node_cta_network_emse(model: &NetworkModel, alpha: f64, beta: f64, xi: XiConvention) -> f64 {
    let t = terms(model, alpha, beta);
    let mu = model.step_size();
    let scale = (2.0 - alpha - beta).powi(2);
    model
        .spectral()
        .eigenvalues
        .iter()
        .map(|&l| {
            let x = xi.xi(mu, l);
            mu * mu * l * l / scale
                * (t.first / (1.0 - x) + t.cross / (1.0 - x * t.eta) + t.second / (1.0 - x * t.eta * t.eta))
        })
        .sum()
}

/// Network EMSE of ATC diffusion on two nodes. The prefactor is `μ²λ_m²`,
/// as required for consistency with the general expression.
pub fn two_node_atc_network_emse(model: &NetworkModel, alpha: f64, beta: f64, xi: XiConvention) -> f64 {
    let t = terms(model, alpha, beta);
    let mu = model.step_size();
    let scale = (2.0 - alpha - beta).powi(2);
    model
        .spectral()
        .eigenvalues
        .iter()
        .map(|&l| {
            let x = xi.xi(mu, l);
            mu * mu * l * l / scale
                * (t.first / (1.0 - x)
                    + t.eta * t.cross / (1.0 - x * t.eta)
                    + t.eta * t.eta * t.second / (1.0 - x * t.eta * t.eta))
        })
        .sum()
}

//! Built-in experiment configurations.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use netlms_core::theory::TwoNodeCase;
use netlms_core::topology::random_connected_graph;
use netlms_core::{Rule, StrategySpec};

use crate::config::{Analysis, ModelBlock, RunFile, SimulationBlock, StrategyEntry, TopologyBlock, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum Preset {
    #[value(name = "fig3-opcurves")]
    #[serde(rename = "fig3-opcurves")]
    Fig3Opcurves,
    #[value(name = "fig5-two-node")]
    #[serde(rename = "fig5-two-node")]
    Fig5TwoNode,
    #[value(name = "fig6-n20")]
    #[serde(rename = "fig6-n20")]
    Fig6N20,
    #[value(name = "table4-check")]
    #[serde(rename = "table4-check")]
    Table4Check,
    #[value(name = "appendixB-check")]
    #[serde(rename = "appendixB-check")]
    AppendixBCheck,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Fig3Opcurves,
        Preset::Fig5TwoNode,
        Preset::Fig6N20,
        Preset::Table4Check,
        Preset::AppendixBCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig3Opcurves => "fig3-opcurves",
            Preset::Fig5TwoNode => "fig5-two-node",
            Preset::Fig6N20 => "fig6-n20",
            Preset::Table4Check => "table4-check",
            Preset::AppendixBCheck => "appendixB-check",
        }
    }

    /// The run file of this preset. `seed` drives the simulation and, for
    /// `fig6-n20`, the generated topology and noise profile.
    pub fn run_file(self, seed: u64) -> RunFile {
        match self {
            Preset::Fig3Opcurves => two_node(
                self,
                vec![0.01, 0.001],
                0.01,
                Analysis::OperationCurves { mu_min: 0.001, mu_max: 0.05, points: 50 },
                Vec::new(),
                seed,
            ),
            Preset::Fig5TwoNode => {
                let mut f = two_node(self, vec![0.01, 0.002], 0.01, Analysis::Simulate, fig5_strategies(), seed);
                f.simulation.trials = 500;
                f.simulation.iters = 5000;
                f
            }
            Preset::Table4Check => two_node(self, vec![0.01, 0.002], 0.01, Analysis::Table4, Vec::new(), seed),
            Preset::AppendixBCheck => {
                two_node(self, vec![0.01, 0.002], 0.001, Analysis::AppendixB { grid: 200 }, Vec::new(), seed)
            }
            Preset::Fig6N20 => fig6(seed),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| anyhow::anyhow!("unknown preset `{s}`"))
    }
}

/// Opt/unf ATC and CTA, block, incremental and stand-alone, named after
/// their two-node cases.
pub fn fig5_strategies() -> Vec<StrategyEntry> {
    TwoNodeCase::ALL
        .into_iter()
        .map(|c| StrategyEntry::named(c.name(), StrategySpec::new(c.kind(), c.rule())))
        .collect()
}

fn two_node(
    preset: Preset,
    noise_vars: Vec<f64>,
    mu: f64,
    analysis: Analysis,
    strategies: Vec<StrategyEntry>,
    seed: u64,
) -> RunFile {
    RunFile {
        schema_version: SCHEMA_VERSION,
        name: Some(preset.name().into()),
        model: ModelBlock {
            dim: 10,
            w_true: None,
            w_seed: seed,
            noise_vars,
            mu,
            expert_mu_prime: None,
            regressor_cov: None,
        },
        topology: TopologyBlock::Complete,
        strategies,
        simulation: SimulationBlock { seed, ..SimulationBlock::default() },
        analysis,
    }
}

pub const FIG6_NODES: usize = 20;
pub const FIG6_DIM: usize = 3;
pub const FIG6_DEGREE: usize = 8;
pub const FIG6_NOISE_RANGE: (f64, f64) = (1e-3, 1e-1);

/// Log-uniform noise variances in `range`.
pub fn log_uniform_profile(n: usize, range: (f64, f64), rng: &mut impl Rng) -> Vec<f64> {
    let (lo, hi) = (range.0.ln(), range.1.ln());
    (0..n).map(|_| rng.random_range(lo..hi).exp()).collect()
}

fn fig6(seed: u64) -> RunFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = random_connected_graph(FIG6_NODES, FIG6_DEGREE, &mut rng).expect("feasible preset graph");
    let noise_vars = log_uniform_profile(FIG6_NODES, FIG6_NOISE_RANGE, &mut rng);
    RunFile {
        schema_version: SCHEMA_VERSION,
        name: Some(Preset::Fig6N20.name().into()),
        model: ModelBlock {
            dim: FIG6_DIM,
            w_true: None,
            w_seed: seed,
            noise_vars,
            mu: 0.005,
            expert_mu_prime: None,
            regressor_cov: None,
        },
        topology: TopologyBlock::Adjacency { lists: graph.to_adjacency_list() },
        strategies: vec![
            StrategyEntry::named("block", StrategySpec::block()),
            StrategyEntry::named("atc-metropolis", StrategySpec::atc(Rule::Metropolis)),
            StrategyEntry::named("atc-hastings", StrategySpec::atc(Rule::Hastings)),
            StrategyEntry::named("atc-adaptive-hastings", StrategySpec::adaptive_atc(0.1)),
            StrategyEntry::named("standalone", StrategySpec::standalone()),
        ],
        simulation: SimulationBlock { trials: 50, iters: 3000, seed, steady_window: 0.2, tol_db: 1.0 },
        analysis: Analysis::Simulate,
    }
}

//! JSON run files.
//!
//! Variances are linear; results are reported in dB. Every file carries
//! `schema_version`, currently 1.

use std::path::Path;

use anyhow::{bail, Context};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use netlms_core::model::random_w_true;
use netlms_core::topology::random_connected_graph;
use netlms_core::{Graph, NetworkModel, Rule, StrategyKind, StrategySpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub model: ModelBlock,
    #[serde(default)]
    pub topology: TopologyBlock,
    #[serde(default)]
    pub strategies: Vec<StrategyEntry>,
    #[serde(default)]
    pub simulation: SimulationBlock,
    #[serde(default)]
    pub analysis: Analysis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    /// Length `M` of the unknown vector.
    pub dim: usize,
    /// Explicit `w°`; drawn from `w_seed` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_true: Option<Vec<f64>>,
    #[serde(default)]
    pub w_seed: u64,
    /// Noise variances `σ²_{v,k}`, one per node.
    pub noise_vars: Vec<f64>,
    /// Diffusion and stand-alone step size `μ`.
    pub mu: f64,
    /// Replaces the rate-matched `μ' = μ/N` of block and incremental LMS.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expert_mu_prime: Option<f64>,
    /// Row-major `R_u`; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regressor_cov: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TopologyBlock {
    #[default]
    Complete,
    /// Neighbour lists, excluding the node itself.
    Adjacency { lists: Vec<Vec<usize>> },
    /// Random connected graph with the given mean neighbourhood size.
    Random { degree: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyEntry {
    /// Label for tables and `curves_<name>.csv`; defaults to `kind-rule`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: StrategyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<Rule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forget: Option<f64>,
}

impl StrategyEntry {
    pub fn named(name: &str, spec: StrategySpec) -> Self {
        Self { name: Some(name.into()), kind: spec.kind, rule: spec.rule, forget: spec.forget }
    }

    pub fn spec(&self) -> StrategySpec {
        StrategySpec { kind: self.kind, rule: self.rule, forget: self.forget }
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.spec().label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationBlock {
    pub trials: usize,
    pub iters: usize,
    pub seed: u64,
    pub steady_window: f64,
    pub tol_db: f64,
}

impl Default for SimulationBlock {
    fn default() -> Self {
        Self { trials: 100, iters: 2000, seed: 1, steady_window: 0.2, tol_db: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Analysis {
    /// Monte Carlo runs of every strategy compared against theory.
    #[default]
    Simulate,
    /// Closed-form two-node values, no simulation.
    Table4,
    /// Grid search for the optimal two-node weights.
    AppendixB { grid: usize },
    /// Two-node EMSE against dominant mode over a range of step sizes.
    OperationCurves { mu_min: f64, mu_max: f64, points: usize },
}

impl Analysis {
    pub fn name(&self) -> &'static str {
        match self {
            Analysis::Simulate => "simulate",
            Analysis::Table4 => "table4",
            Analysis::AppendixB { .. } => "appendix-b",
            Analysis::OperationCurves { .. } => "operation-curves",
        }
    }
}

/// Sets `a.b.c = value` in a JSON tree. `value` is parsed as JSON and kept
/// as a string if that fails.
pub fn apply_override(root: &mut Value, key: &str, value: &str) -> anyhow::Result<()> {
    let parsed = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.into()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            bail!("empty segment in override key `{key}`");
        }
        let obj = match node {
            Value::Object(map) => map,
            _ => bail!("override `{key}`: `{}` is not an object", parts[..i].join(".")),
        };
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split yields at least one segment")
}

/// Deserializes with the failing field path in the error.
pub fn parse_run_file(value: Value) -> anyhow::Result<RunFile> {
    let file: RunFile = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        anyhow::anyhow!("config error at `{path}`: {}", e.into_inner())
    })?;
    file.check()?;
    Ok(file)
}

pub fn load_json(path: &Path) -> anyhow::Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path_in = e.path().to_string();
        anyhow::anyhow!("{}: invalid JSON at `{path_in}`: {}", path.display(), e.into_inner())
    })
}

impl RunFile {
    fn check(&self) -> anyhow::Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!("config error at `schema_version`: expected {SCHEMA_VERSION}, got {}", self.schema_version);
        }
        let n = self.model.noise_vars.len();
        if n == 0 {
            bail!("config error at `model.noise_vars`: at least one node required");
        }
        if let Some(w) = &self.model.w_true {
            if w.len() != self.model.dim {
                bail!("config error at `model.w_true`: length {} differs from dim {}", w.len(), self.model.dim);
            }
        }
        if matches!(self.analysis, Analysis::Simulate) && self.strategies.is_empty() {
            bail!("config error at `strategies`: simulation needs at least one strategy");
        }
        let mut seen = std::collections::BTreeSet::new();
        for (i, s) in self.strategies.iter().enumerate() {
            let label = s.label();
            if !label.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
                bail!("config error at `strategies[{i}].name`: `{label}` is not a valid file-name label");
            }
            if !seen.insert(label.clone()) {
                bail!("config error at `strategies[{i}]`: duplicate label `{label}`");
            }
        }
        let sim = &self.simulation;
        if sim.trials == 0 || sim.iters == 0 {
            bail!("config error at `simulation`: trials and iters must be positive");
        }
        if !(sim.tol_db > 0.0) {
            bail!("config error at `simulation.tol_db`: must be positive");
        }
        Ok(())
    }

    pub fn build_model(&self) -> anyhow::Result<NetworkModel> {
        let m = &self.model;
        let w = m.w_true.clone().unwrap_or_else(|| random_w_true(m.dim, m.w_seed));
        let cov = match &m.regressor_cov {
            None => DMatrix::identity(m.dim, m.dim),
            Some(rows) => {
                if rows.len() != m.dim || rows.iter().any(|r| r.len() != m.dim) {
                    bail!("config error at `model.regressor_cov`: must be {0}x{0}", m.dim);
                }
                DMatrix::from_fn(m.dim, m.dim, |r, c| rows[r][c])
            }
        };
        let mut model = NetworkModel::new(w, m.noise_vars.clone(), cov, m.mu).context("model")?;
        if let Some(mp) = m.expert_mu_prime {
            log::warn!("using expert override μ' = {mp} instead of μ/N = {}", model.centralized_step_size());
            model = model.with_centralized_step_size(mp)?;
        }
        Ok(model)
    }

    pub fn build_graph(&self) -> anyhow::Result<Graph> {
        let n = self.model.noise_vars.len();
        let g = match &self.topology {
            TopologyBlock::Complete => Graph::complete(n),
            TopologyBlock::Adjacency { lists } => {
                if lists.len() != n {
                    bail!("config error at `topology.lists`: {} lists for {n} nodes", lists.len());
                }
                Graph::from_adjacency_list(lists).context("topology")?
            }
            TopologyBlock::Random { degree, seed } => {
                random_connected_graph(n, *degree, &mut ChaCha8Rng::seed_from_u64(*seed)).context("topology")?
            }
        };
        if !g.is_connected() {
            bail!("config error at `topology`: graph is not connected");
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn minimal() -> Value {
        json!({
            "schema_version": 1,
            "model": { "dim": 3, "noise_vars": [0.01, 0.002], "mu": 0.01 },
            "strategies": [{ "kind": "atc", "rule": "metropolis" }]
        })
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let f = parse_run_file(minimal()).unwrap();
        assert_eq!(f.simulation, SimulationBlock::default());
        assert_eq!(f.topology, TopologyBlock::Complete);
        assert_eq!(f.analysis, Analysis::Simulate);
        assert_eq!(f.strategies[0].label(), "atc-metropolis");
        let m = f.build_model().unwrap();
        assert_eq!((m.n_nodes(), m.dim()), (2, 3));
        assert_eq!(m.centralized_step_size(), 0.005);
    }

    #[test]
    fn errors_carry_field_paths() {
        let mut v = minimal();
        v["strategies"][0]["rule"] = json!("bogus");
        let e = parse_run_file(v).unwrap_err().to_string();
        assert!(e.contains("strategies[0].rule"), "{e}");
        let mut v = minimal();
        v["simulation"] = json!({ "trials": "many" });
        let e = parse_run_file(v).unwrap_err().to_string();
        assert!(e.contains("simulation.trials"), "{e}");
        let e = parse_run_file(json!({})).unwrap_err().to_string();
        assert!(e.contains("schema_version"), "{e}");
        let mut v = minimal();
        v["schema_version"] = json!(2);
        assert!(parse_run_file(v).is_err());
    }

    #[test]
    fn overrides_set_nested_keys() {
        let mut v = minimal();
        apply_override(&mut v, "simulation.trials", "7").unwrap();
        apply_override(&mut v, "name", "demo run").unwrap();
        let f = parse_run_file(v.clone()).unwrap();
        assert_eq!(f.simulation.trials, 7);
        assert_eq!(f.name.as_deref(), Some("demo run"));
        assert!(apply_override(&mut v, "model.dim.x", "1").is_err());
    }

    #[test]
    fn expert_mu_prime_and_topologies() {
        let mut v = minimal();
        v["model"]["expert_mu_prime"] = json!(0.001);
        v["topology"] = json!({ "kind": "adjacency", "lists": [[1], [0]] });
        let f = parse_run_file(v).unwrap();
        assert_eq!(f.build_model().unwrap().centralized_step_size(), 0.001);
        assert_eq!(f.build_graph().unwrap(), Graph::complete(2));
        let mut v = minimal();
        v["topology"] = json!({ "kind": "adjacency", "lists": [[], []] });
        assert!(parse_run_file(v).unwrap().build_graph().is_err());
    }

    #[test]
    fn duplicate_labels_rejected() {
        let mut v = minimal();
        v["strategies"] = json!([{ "kind": "block" }, { "kind": "block" }]);
        assert!(parse_run_file(v).is_err());
    }
}

//! Executes a run file and writes its artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use netlms_core::simulator::run_with_strategy;
use netlms_core::theory::{
    dominant_mode, operation_curve, operation_curves_csv, predict, table5_orderings, two_node_case,
    verify_appendix_b_optimum, AppendixBReport, OrderingReport, TwoNodeCase,
};
use netlms_core::{
    compare_to_theory, db, CurveSummary, Error, ExperimentSpec, Graph, LearningCurve, NetworkModel, Strategy,
    TheoryReport,
};

use crate::config::{apply_override, load_json, parse_run_file, Analysis, RunFile, StrategyEntry};
use crate::presets::Preset;

/// What to run and where to put the results.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub preset: Option<Preset>,
    pub config_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub iters: Option<usize>,
    pub tol_db: Option<f64>,
    /// Extra `dotted.key=value` overrides.
    pub overrides: Vec<String>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkEcho {
    pub n_nodes: usize,
    pub dim: usize,
    pub mu: f64,
    pub mu_prime: f64,
    pub noise_vars: Vec<f64>,
    pub adjacency: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategyResult {
    pub name: String,
    pub theory: Option<TheoryReport>,
    pub simulation: CurveSummary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Table4Row {
    pub case: TwoNodeCase,
    pub node_emse_db: Vec<f64>,
    pub network_emse_db: f64,
    pub network_msd_db: f64,
    pub mode: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub name: Option<String>,
    pub analysis: String,
    pub network: NetworkEcho,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub strategies: Vec<StrategyResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub table4: Vec<Table4Row>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table5: Option<OrderingReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub appendix_b: Option<AppendixBReport>,
    pub pass: bool,
}

impl Summary {
    pub fn strategy(&self, name: &str) -> Option<&StrategyResult> {
        self.strategies.iter().find(|s| s.name == name)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub preset: Option<Preset>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub config: RunFile,
    /// File name to SHA-256 of its contents.
    pub artifacts: BTreeMap<String, String>,
}

pub const MANIFEST_TOOL: &str = "netlms";

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub file: RunFile,
    pub summary: Summary,
    pub curves: Vec<LearningCurve>,
    pub manifest: Manifest,
    /// Human-readable table, also written to disk.
    pub table: String,
}

impl RunOutcome {
    pub fn pass(&self) -> bool {
        self.summary.pass
    }

    pub fn curve(&self, name: &str) -> Option<&LearningCurve> {
        self.curves.iter().find(|c| c.strategy == name)
    }
}

/// Resolves the run file: preset or config (a manifest's embedded config is
/// accepted too), then the overrides.
pub fn resolve(cfg: &RunConfig) -> anyhow::Result<RunFile> {
    let mut value = match (&cfg.preset, &cfg.config_path) {
        (Some(p), None) => serde_json::to_value(p.run_file(cfg.seed.unwrap_or(1)))?,
        (None, Some(path)) => {
            let v = load_json(path)?;
            match v.get("tool") {
                Some(Value::String(t)) if t == MANIFEST_TOOL => {
                    v.get("config").cloned().context("manifest has no `config` entry")?
                }
                _ => v,
            }
        }
        (Some(_), Some(_)) => bail!("give either a preset or a config file, not both"),
        (None, None) => bail!("a preset or a config file is required"),
    };
    let mut pairs: Vec<(String, String)> = Vec::new();
    if let Some(s) = cfg.seed {
        pairs.push(("simulation.seed".into(), s.to_string()));
    }
    if let Some(t) = cfg.trials {
        pairs.push(("simulation.trials".into(), t.to_string()));
    }
    if let Some(i) = cfg.iters {
        pairs.push(("simulation.iters".into(), i.to_string()));
    }
    if let Some(t) = cfg.tol_db {
        pairs.push(("simulation.tol_db".into(), format!("{t:?}")));
    }
    for o in &cfg.overrides {
        let (k, v) = o.split_once('=').with_context(|| format!("override `{o}` is not key=value"))?;
        pairs.push((k.trim().into(), v.trim().into()));
    }
    for (k, v) in &pairs {
        apply_override(&mut value, k, v)?;
    }
    parse_run_file(value)
}

/// Runs and writes `curves_<strategy>.csv`, `summary.json`, the table and
/// `manifest.json` into `cfg.output_dir`.
pub fn run(cfg: &RunConfig) -> anyhow::Result<RunOutcome> {
    let file = resolve(cfg)?;
    let body = || execute(&file);
    let (summary, curves, table, extra) = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build()?.install(body)?,
        None => body()?,
    };

    std::fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    let mut artifacts = BTreeMap::new();
    let mut put = |name: &str, bytes: &[u8]| -> anyhow::Result<()> {
        std::fs::write(cfg.output_dir.join(name), bytes).with_context(|| format!("writing {name}"))?;
        artifacts.insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
        Ok(())
    };
    for c in &curves {
        put(&format!("curves_{}.csv", c.strategy), c.to_csv_string()?.as_bytes())?;
    }
    for (name, text) in &extra {
        put(name, text.as_bytes())?;
    }
    put("summary.json", serde_json::to_string_pretty(&summary)?.as_bytes())?;
    let table_name = if matches!(file.analysis, Analysis::Simulate) { "ordering.txt" } else { "report.txt" };
    put(table_name, table.as_bytes())?;

    let manifest = Manifest {
        tool: MANIFEST_TOOL.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        preset: cfg.preset,
        seed: file.simulation.seed,
        threads: cfg.threads,
        config: file.clone(),
        artifacts,
    };
    std::fs::write(cfg.output_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(RunOutcome { file, summary, curves, manifest, table })
}

type Executed = (Summary, Vec<LearningCurve>, String, Vec<(String, String)>);

fn execute(file: &RunFile) -> anyhow::Result<Executed> {
    let model = file.build_model()?;
    let graph = file.build_graph()?;
    let network = NetworkEcho {
        n_nodes: model.n_nodes(),
        dim: model.dim(),
        mu: model.step_size(),
        mu_prime: model.centralized_step_size(),
        noise_vars: model.noise_vars().to_vec(),
        adjacency: graph.to_adjacency_list(),
    };
    let mut summary = Summary {
        name: file.name.clone(),
        analysis: file.analysis.name().into(),
        network,
        strategies: Vec::new(),
        table4: Vec::new(),
        table5: None,
        appendix_b: None,
        pass: true,
    };
    match &file.analysis {
        Analysis::Simulate => {
            let (curves, table) = simulate(file, &model, &graph, &mut summary)?;
            Ok((summary, curves, table, Vec::new()))
        }
        Analysis::Table4 => {
            let (table, csv) = table4(&model, &mut summary)?;
            Ok((summary, Vec::new(), table, vec![("table4.csv".into(), csv)]))
        }
        Analysis::AppendixB { grid } => {
            let r = verify_appendix_b_optimum(&model, *grid)?;
            let mut csv = String::from("strategy,analytic_alpha,analytic_beta,grid_alpha,grid_beta,distance,within_one_cell\n");
            let mut table = format!(
                "optimal weights alpha = {:.6}, beta = {:.6}; grid {} x {} (cell {:.6})\n",
                r.analytic_alpha,
                r.analytic_beta,
                r.grid,
                r.grid,
                1.0 / r.grid as f64
            );
            for (name, g) in [("cta", &r.cta), ("atc", &r.atc)] {
                writeln!(
                    csv,
                    "{name},{:.9},{:.9},{:.9},{:.9},{:.9},{}",
                    r.analytic_alpha, r.analytic_beta, g.alpha, g.beta, g.distance, g.within_one_cell
                )?;
                writeln!(
                    table,
                    "{name}: grid minimum at ({:.4}, {:.4}), distance {:.5}, {}",
                    g.alpha,
                    g.beta,
                    g.distance,
                    if g.within_one_cell { "within one cell" } else { "OUTSIDE one cell" }
                )?;
            }
            writeln!(
                table,
                "network EMSE at optimum vs uniform: cta {:.3} / {:.3} dB, atc {:.3} / {:.3} dB",
                db(r.cta_at_optimum),
                db(r.cta_at_uniform),
                db(r.atc_at_optimum),
                db(r.atc_at_uniform)
            )?;
            summary.pass = r.consistent;
            summary.appendix_b = Some(r);
            Ok((summary, Vec::new(), table, vec![("appendix_b.csv".into(), csv)]))
        }
        Analysis::OperationCurves { mu_min, mu_max, points } => {
            if *points < 2 || !(mu_min > &0.0 && mu_max > mu_min) {
                bail!("config error at `analysis`: need 0 < mu_min < mu_max and at least two points");
            }
            let grid: Vec<f64> = (0..*points)
                .map(|i| mu_min + (mu_max - mu_min) * i as f64 / (*points - 1) as f64)
                .collect();
            let curves = TwoNodeCase::ALL
                .into_iter()
                .map(|c| operation_curve(&model, c, &grid).map(|p| (c, p)))
                .collect::<netlms_core::Result<Vec<_>>>()?;
            let csv = operation_curves_csv(&curves)?;
            let mut table = String::from("strategy      points  emse_db range           mode range\n");
            for (c, p) in &curves {
                if let (Some(a), Some(b)) = (p.first(), p.last()) {
                    writeln!(
                        table,
                        "{:<13} {:>6}  {:>8.3} .. {:>8.3}  {:.5} .. {:.5}",
                        c.name(),
                        p.len(),
                        db(a.emse),
                        db(b.emse),
                        a.mode,
                        b.mode
                    )?;
                }
            }
            Ok((summary, Vec::new(), table, vec![("operation_curves.csv".into(), csv)]))
        }
    }
}

/// Two-node closed forms where they exist, otherwise the general prediction.
pub fn theory_for(model: &NetworkModel, entry: &StrategyEntry, strategy: &Strategy) -> anyhow::Result<Option<TheoryReport>> {
    if model.n_nodes() == 2 {
        if let Ok(case) = TwoNodeCase::from_parts(entry.kind, entry.rule) {
            return Ok(Some(two_node_case(model, case)?));
        }
    }
    match predict(model, strategy) {
        Ok(r) => Ok(Some(r)),
        Err(e @ (Error::TheoryUnavailable(_) | Error::Unsupported(_))) => {
            log::warn!("{}: no theory prediction ({e})", entry.label());
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

fn simulate(
    file: &RunFile,
    model: &NetworkModel,
    graph: &Graph,
    summary: &mut Summary,
) -> anyhow::Result<(Vec<LearningCurve>, String)> {
    let sim = &file.simulation;
    let mut prepared = Vec::new();
    for (i, entry) in file.strategies.iter().enumerate() {
        let spec = entry.spec();
        let strategy = spec
            .build(model, graph)
            .with_context(|| format!("strategies[{i}] ({})", entry.label()))?;
        dominant_mode(model, spec.kind).with_context(|| format!("strategies[{i}] ({}) rejected", entry.label()))?;
        let theory = theory_for(model, entry, &strategy)
            .with_context(|| format!("strategies[{i}] ({}) rejected", entry.label()))?;
        prepared.push((entry, spec, strategy, theory));
    }
    let mut curves = Vec::new();
    for (entry, spec, strategy, theory) in prepared {
        let label = entry.label();
        log::info!("simulating {label}: {} trials x {} iterations", sim.trials, sim.iters);
        let mut es = ExperimentSpec::new(model.clone(), graph.clone(), spec, sim.iters, sim.trials, sim.seed);
        es.steady_window_frac = sim.steady_window;
        let curve = run_with_strategy(&es, &strategy, label.clone())?;
        let verdict = theory.as_ref().map(|t| compare_to_theory(&curve, t, sim.tol_db));
        if let Some(v) = &verdict {
            summary.pass &= v.pass;
        }
        summary.strategies.push(StrategyResult { name: label, theory, simulation: curve.summary(verdict) });
        curves.push(curve);
    }
    Ok((curves, ordering_table(summary, sim.tol_db)?))
}

/// Strategies ranked by simulated steady network EMSE.
pub fn ordering_table(summary: &Summary, tol_db: f64) -> anyhow::Result<String> {
    let mut rows: Vec<&StrategyResult> = summary.strategies.iter().collect();
    rows.sort_by(|a, b| a.simulation.steady.emse.total_cmp(&b.simulation.steady.emse));
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(8).max(8);
    let mut t = String::new();
    writeln!(
        t,
        "rank  {:<width$}  sim EMSE dB   +/- dB  theory dB  delta dB  verdict (tol {tol_db} dB)",
        "strategy"
    )?;
    for (i, r) in rows.iter().enumerate() {
        let s = &r.simulation;
        let se_db = 10.0 / std::f64::consts::LN_10 * s.steady.emse_se / s.steady.emse;
        let (th, delta, verdict) = match (&r.theory, &s.verdict) {
            (Some(th), Some(v)) => (
                format!("{:>9.3}", db(th.network_emse)),
                format!("{:>+8.3}", v.network_emse.delta_db),
                if v.pass { "ok".to_string() } else { format!("FAIL (worst {:.3} dB)", v.worst_db()) },
            ),
            _ => ("        -".into(), "       -".into(), "no theory".into()),
        };
        writeln!(
            t,
            "{:>4}  {:<width$}  {:>11.3}  {:>7.3}  {th}  {delta}  {verdict}{}",
            i + 1,
            r.name,
            s.steady_emse_db,
            se_db,
            if s.steady.converged { "" } else { " (not converged)" }
        )?;
    }
    Ok(t)
}

fn table4(model: &NetworkModel, summary: &mut Summary) -> anyhow::Result<(String, String)> {
    let mut csv = String::from("strategy,node1_emse_db,node2_emse_db,network_emse,network_emse_db,network_msd_db,mode\n");
    let mut t = String::from("strategy      node1 dB  node2 dB  network EMSE  network dB  MSD dB    mode\n");
    for case in TwoNodeCase::ALL {
        let r = two_node_case(model, case)?;
        let nodes: Vec<f64> = r.per_node_emse.iter().map(|v| db(*v)).collect();
        writeln!(
            csv,
            "{},{:.6},{:.6},{:.6e},{:.6},{:.6},{:.8}",
            case.name(),
            nodes[0],
            nodes[1],
            r.network_emse,
            db(r.network_emse),
            db(r.network_msd),
            r.dominant_mode
        )?;
        writeln!(
            t,
            "{:<13} {:>8.3}  {:>8.3}  {:>12.4e}  {:>10.3}  {:>7.3}  {:.4}",
            case.name(),
            nodes[0],
            nodes[1],
            r.network_emse,
            db(r.network_emse),
            db(r.network_msd),
            r.dominant_mode
        )?;
        summary.table4.push(Table4Row {
            case,
            node_emse_db: nodes,
            network_emse_db: db(r.network_emse),
            network_msd_db: db(r.network_msd),
            mode: r.dominant_mode,
        });
    }
    let order = table5_orderings(model)?;
    let chain: Vec<&str> = order.ranking.iter().map(|c| c.name()).collect();
    writeln!(t, "\nranking (best first): {}", chain.join(" < "))?;
    writeln!(
        t,
        "opt-cta better than block iff c2/c1 < (s_a - s_h)/(2 s_a - s_h): {:.5} vs {:.5} -> {}",
        order.condition_lhs, order.condition_rhs, order.condition_holds
    )?;
    summary.table5 = Some(order);
    Ok((t, csv))
}

/// Reads `manifest.json` from a run directory.
pub fn read_manifest(dir: &Path) -> anyhow::Result<Manifest> {
    let text = std::fs::read_to_string(dir.join("manifest.json"))?;
    Ok(serde_json::from_str(&text)?)
}

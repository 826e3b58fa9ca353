//! Convergence modes and operation curves.

use serde::{Deserialize, Serialize};

use super::two_node::{two_node_case, TwoNodeCase};
use crate::algorithms::StrategyKind;
use crate::error::{Error, Result};
use crate::model::NetworkModel;

/// `1 − 2 μ_eff λ_min`, required to lie in `(0, 1]`.
pub fn mode_for_step(effective_mu: f64, lambda_min: f64) -> Result<f64> {
    if !(effective_mu >= 0.0) {
        return Err(Error::Config(format!("step size {effective_mu} must be nonnegative")));
    }
    let mode = 1.0 - 2.0 * effective_mu * lambda_min;
    if mode <= 0.0 {
        return Err(Error::Unstable(format!(
            "dominant mode {mode:.6} is not in (0, 1); step size too large"
        )));
    }
    Ok(mode)
}

/// Slowest mean-square mode: `1 − 2μλ_min` for stand-alone and diffusion,
/// `1 − 2Nμ'λ_min` for block and incremental LMS.
pub fn dominant_mode(model: &NetworkModel, kind: StrategyKind) -> Result<f64> {
    let effective = if kind.is_centralized() {
        model.n_nodes() as f64 * model.centralized_step_size()
    } else {
        model.step_size()
    };
    mode_for_step(effective, model.spectral().lambda_min)
}

/// One point of an operation curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperationPoint {
    pub mu: f64,
    pub emse: f64,
    pub mode: f64,
}

/// `(network EMSE, dominant mode)` along a grid of step sizes for a two-node
/// strategy, with `μ' = μ/2`. Unstable grid entries are skipped.
pub fn operation_curve(model: &NetworkModel, case: TwoNodeCase, mu_grid: &[f64]) -> Result<Vec<OperationPoint>> {
    let mut out = Vec::with_capacity(mu_grid.len());
    for &mu in mu_grid {
        let point = model
            .with_step_size(mu)
            .and_then(|m| two_node_case(&m, case).map(|r| (r.network_emse, r.dominant_mode)));
        match point {
            Ok((emse, mode)) => out.push(OperationPoint { mu, emse, mode }),
            Err(Error::Unstable(msg)) | Err(Error::Config(msg)) => {
                log::warn!("skipping step size {mu} for {case}: {msg}");
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// CSV with columns `strategy,mu,emse_db,mode`.
pub fn operation_curves_csv(curves: &[(TwoNodeCase, Vec<OperationPoint>)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["strategy", "mu", "emse_db", "mode"]).map_err(csv_err)?;
    for (case, points) in curves {
        for p in points {
            w.write_record([
                case.name().to_string(),
                format!("{:e}", p.mu),
                format!("{:.6}", crate::db(p.emse)),
                format!("{:.8}", p.mode),
            ])
            .map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("ascii output"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

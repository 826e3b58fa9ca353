//! Closed forms for networks of arbitrary size.

use nalgebra::DVector;

use super::modes::dominant_mode;
use super::TheoryReport;
use crate::algorithms::StrategyKind;
use crate::error::{Error, Result};
use crate::model::NetworkModel;

/// `yᵀ R_v y = Σ_k y_k² σ_k²`.
pub fn weighted_noise_power(y: &DVector<f64>, noise_vars: &[f64]) -> f64 {
    y.iter().zip(noise_vars).map(|(y, s)| y * y * s).sum()
}

/// ATC diffusion with a primitive combiner whose Perron vector is `y`:
/// EMSE `≈ (μ Tr(R_u)/2) yᵀR_v y`, MSD `≈ (μM/2) yᵀR_v y`, equal at every
/// node.
pub fn n_node_atc_rank_one(model: &NetworkModel, perron_y: &DVector<f64>) -> Result<TheoryReport> {
    let n = model.n_nodes();
    if perron_y.len() != n {
        return Err(Error::Dimension(format!("Perron vector has {} entries for {n} nodes", perron_y.len())));
    }
    let sum = perron_y.sum();
    if (sum - 1.0).abs() > 1e-9 || perron_y.iter().any(|v| *v < 0.0) {
        return Err(Error::Config(format!("Perron vector must be a distribution (sum {sum})")));
    }
    let p = weighted_noise_power(perron_y, model.noise_vars());
    let mu = model.step_size();
    let emse = mu * model.spectral().trace / 2.0 * p;
    let msd = mu * model.dim() as f64 / 2.0 * p;
    Ok(TheoryReport::from_nodes(
        "atc",
        "rank-one approximation",
        vec![emse; n],
        vec![msd; n],
        dominant_mode(model, StrategyKind::Atc)?,
    ))
}

/// Block and incremental LMS with step `μ'`:
/// EMSE `≈ μ' Tr(R_u) Tr(R_v) / (2N)`, MSD `≈ μ' M Tr(R_v) / (2N)`. With the
/// rate-matched `μ' = μ/N` this is `(μ Tr(R_u)/2) Tr(R_v)/N²`.
pub fn n_node_block_inc(model: &NetworkModel) -> Result<TheoryReport> {
    let n = model.n_nodes() as f64;
    let mu_p = model.centralized_step_size();
    let trv: f64 = model.noise_vars().iter().sum();
    let emse = mu_p * model.spectral().trace * trv / (2.0 * n);
    let msd = mu_p * model.dim() as f64 * trv / (2.0 * n);
    Ok(TheoryReport::from_nodes(
        "block/incremental",
        "none",
        vec![emse; model.n_nodes()],
        vec![msd; model.n_nodes()],
        dominant_mode(model, StrategyKind::Block)?,
    ))
}

/// Non-cooperative LMS: EMSE_k `≈ μσ_k² Tr(R_u)/2`, MSD_k `≈ μσ_k² M/2`.
pub fn standalone_theory(model: &NetworkModel) -> Result<TheoryReport> {
    let mu = model.step_size();
    let tr = model.spectral().trace;
    let m = model.dim() as f64;
    Ok(TheoryReport::from_nodes(
        "standalone",
        "none",
        model.noise_vars().iter().map(|s| mu * s * tr / 2.0).collect(),
        model.noise_vars().iter().map(|s| mu * s * m / 2.0).collect(),
        dominant_mode(model, StrategyKind::Standalone)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{hastings_weights, inverse_variance_profile, metropolis_weights};
    use crate::topology::{perron_vector, random_connected_graph, CombinationMatrix, Graph};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_node() -> NetworkModel {
        NetworkModel::with_identity_cov(vec![0.0; 10], vec![0.01, 0.002], 0.01).unwrap()
    }

    #[test]
    fn doubly_stochastic_equals_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 2..12 {
            let g = random_connected_graph(n, 3.min(n), &mut rng).unwrap();
            let vars: Vec<f64> = (0..n).map(|_| rng.random_range(1e-3..1e-1)).collect();
            let m = NetworkModel::with_identity_cov(vec![0.0; 3], vars, 0.005).unwrap();
            let y = perron_vector(&metropolis_weights(&g)).unwrap();
            let atc = n_node_atc_rank_one(&m, &y).unwrap();
            let blk = n_node_block_inc(&m).unwrap();
            assert_relative_eq!(atc.network_emse, blk.network_emse, max_relative = 1e-12);
            assert_relative_eq!(atc.network_msd, blk.network_msd, max_relative = 1e-12);
        }
    }

    #[test]
    fn hastings_reaches_inverse_trace() {
        let m = two_node();
        let a = hastings_weights(&Graph::complete(2), m.noise_vars()).unwrap();
        let y = perron_vector(&a).unwrap();
        let p = weighted_noise_power(&y, m.noise_vars());
        assert_relative_eq!(p, 1.0 / 600.0, max_relative = 1e-12);
        let uniform = weighted_noise_power(&DVector::from_element(2, 0.5), m.noise_vars());
        assert_relative_eq!(uniform, 3e-3, max_relative = 1e-12);
        assert_relative_eq!(crate::db(uniform / p), 2.5527, epsilon = 1e-4);
    }

    #[test]
    fn block_examples() {
        assert_relative_eq!(n_node_block_inc(&two_node()).unwrap().network_emse, 1.5e-4, max_relative = 1e-12);
        let single = NetworkModel::with_identity_cov(vec![0.0; 4], vec![0.02], 0.01).unwrap();
        assert_relative_eq!(
            n_node_block_inc(&single).unwrap().network_emse,
            standalone_theory(&single).unwrap().network_emse,
            max_relative = 1e-15
        );
        let s2 = 0.004;
        let m = NetworkModel::with_identity_cov(vec![0.0; 4], vec![s2; 5], 0.01).unwrap();
        let blk = n_node_block_inc(&m).unwrap().network_emse;
        assert_relative_eq!(blk, 0.01 * 4.0 / 2.0 * s2 / 5.0, max_relative = 1e-12);
    }

    /// Random left-stochastic matrix on the graph's support.
    fn random_combiner(g: &Graph, rng: &mut ChaCha8Rng) -> CombinationMatrix {
        let n = g.n_nodes();
        let mut w = nalgebra::DMatrix::zeros(n, n);
        for k in 0..n {
            for l in g.neighbors(k) {
                w[(l, k)] = rng.random_range(0.05..1.0);
            }
            let s = w.column(k).sum();
            w.column_mut(k).scale_mut(1.0 / s);
        }
        CombinationMatrix::new(w, g.clone()).unwrap()
    }

    #[test]
    fn inverse_variance_profile_is_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 8;
        let g = random_connected_graph(n, 4, &mut rng).unwrap();
        let vars: Vec<f64> = (0..n).map(|_| rng.random_range(1e-3..1e-1)).collect();
        let best = weighted_noise_power(&inverse_variance_profile(&vars), &vars);
        assert_relative_eq!(best, 1.0 / vars.iter().map(|v| 1.0 / v).sum::<f64>(), max_relative = 1e-12);
        for _ in 0..100 {
            let y = perron_vector(&random_combiner(&g, &mut rng)).unwrap();
            assert!(best < weighted_noise_power(&y, &vars));
        }
    }

    #[test]
    fn rejects_bad_perron_vector() {
        let m = two_node();
        assert!(n_node_atc_rank_one(&m, &DVector::from_vec(vec![0.7, 0.7])).is_err());
        assert!(n_node_atc_rank_one(&m, &DVector::from_vec(vec![1.0])).is_err());
    }
}

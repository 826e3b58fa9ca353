//! Shared fixtures for the benchmarks.

use netlms_core::topology::random_connected_graph;
use netlms_core::{Graph, NetworkModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A connected `n`-node network with log-uniform noise variances in
/// `[1e-3, 1e-1]`, identity regressor covariance and step size 0.005.
pub fn network(n: usize, dim: usize, seed: u64) -> (NetworkModel, Graph) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = random_connected_graph(n, 8.min(n), &mut rng).expect("feasible graph");
    let (lo, hi) = (1e-3f64.ln(), 1e-1f64.ln());
    let vars = (0..n).map(|_| rng.random_range(lo..hi).exp()).collect();
    let w = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let model = NetworkModel::with_identity_cov(w, vars, 0.005).expect("valid model");
    (model, graph)
}

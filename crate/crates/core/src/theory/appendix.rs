//! Optimal two-node weights by brute force, and the pairwise ordering of
//! the two-node network EMSEs.

use serde::{Deserialize, Serialize};

use super::two_node::{
    two_node_atc_network_emse, two_node_case, two_node_cta_network_emse, TwoNodeCase, TwoNodeConstants,
};
use super::XiConvention;
use crate::error::Result;
use crate::model::NetworkModel;
use crate::rules::two_node_optimal_weights;

/// Grid minimiser of one network-EMSE surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridArgmin {
    pub alpha: f64,
    pub beta: f64,
    pub emse: f64,
    /// `max(|α − α°|, |β − β°|)`.
    pub distance: f64,
    pub within_one_cell: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixBReport {
    pub grid: usize,
    pub analytic_alpha: f64,
    pub analytic_beta: f64,
    pub cta: GridArgmin,
    pub atc: GridArgmin,
    pub cta_at_optimum: f64,
    pub cta_at_uniform: f64,
    pub atc_at_optimum: f64,
    pub atc_at_uniform: f64,
    /// Both minimisers within one cell and the analytic weights no worse than
    /// uniform ones.
    pub consistent: bool,
    /// The analytic weights do at least as well as every grid point, on both
    /// surfaces.
    pub analytic_beats_grid: bool,
}

fn grid_argmin(grid: usize, analytic: (f64, f64), f: impl Fn(f64, f64) -> f64) -> GridArgmin {
    let h = 1.0 / grid as f64;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..grid {
        let alpha = (i as f64 + 0.5) * h;
        for j in 0..grid {
            let beta = (j as f64 + 0.5) * h;
            let v = f(alpha, beta);
            if v < best.0 {
                best = (v, alpha, beta);
            }
        }
    }
    let distance = (best.1 - analytic.0).abs().max((best.2 - analytic.1).abs());
    GridArgmin {
        alpha: best.1,
        beta: best.2,
        emse: best.0,
        distance,
        within_one_cell: distance <= h,
    }
}

/// Grid search of the two-node CTA and ATC network EMSE over cell centres
/// of a `grid × grid` partition of `(0, 1)²`, compared against the
/// inverse-variance weights.
pub fn verify_appendix_b_optimum(model: &NetworkModel, grid: usize) -> Result<AppendixBReport> {
    let (a0, b0) = two_node_optimal_weights(model.noise_vars())?;
    let xi = XiConvention::FirstOrder;
    let cta = grid_argmin(grid, (a0, b0), |a, b| two_node_cta_network_emse(model, a, b, xi));
    let atc = grid_argmin(grid, (a0, b0), |a, b| two_node_atc_network_emse(model, a, b, xi));
    let cta_at_optimum = two_node_cta_network_emse(model, a0, b0, xi);
    let cta_at_uniform = two_node_cta_network_emse(model, 0.5, 0.5, xi);
    let atc_at_optimum = two_node_atc_network_emse(model, a0, b0, xi);
    let atc_at_uniform = two_node_atc_network_emse(model, 0.5, 0.5, xi);
    let consistent = cta.within_one_cell
        && atc.within_one_cell
        && cta_at_optimum <= cta_at_uniform
        && atc_at_optimum <= atc_at_uniform;
    Ok(AppendixBReport {
        grid,
        analytic_alpha: a0,
        analytic_beta: b0,
        cta,
        atc,
        cta_at_optimum,
        cta_at_uniform,
        atc_at_optimum,
        atc_at_uniform,
        consistent,
        analytic_beats_grid: cta_at_optimum <= cta.emse && atc_at_optimum <= atc.emse,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Better,
    Equal,
    Worse,
}

/// Values of every two-node closed form and their pairwise comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport {
    pub values: Vec<(TwoNodeCase, f64)>,
    /// `(row, column, relation of row to column)`; lower EMSE is better.
    pub pairwise: Vec<(TwoNodeCase, TwoNodeCase, Relation)>,
    /// Cases sorted by increasing EMSE, ties kept in declaration order.
    pub ranking: Vec<TwoNodeCase>,
    /// Whether block, incremental and uniform ATC coincide.
    pub centralized_matches_uniform_atc: bool,
    /// `c₂/c₁`, the left side of the optimal-CTA versus block condition.
    pub condition_lhs: f64,
    /// `(σ²_arth − σ²_harm)/(2σ²_arth − σ²_harm)`.
    pub condition_rhs: f64,
    pub condition_holds: bool,
}

impl OrderingReport {
    pub fn value(&self, case: TwoNodeCase) -> f64 {
        self.values.iter().find(|(c, _)| *c == case).map(|(_, v)| *v).expect("all cases present")
    }

    pub fn relation(&self, row: TwoNodeCase, col: TwoNodeCase) -> Option<Relation> {
        self.pairwise.iter().find(|(r, c, _)| *r == row && *c == col).map(|(_, _, rel)| *rel)
    }
}

const EQUAL_TOL: f64 = 1e-12;

/// Evaluates every two-node network EMSE and compares them pairwise.
pub fn table5_orderings(model: &NetworkModel) -> Result<OrderingReport> {
    let c = TwoNodeConstants::new(model)?;
    let values = TwoNodeCase::ALL
        .iter()
        .map(|&case| two_node_case(model, case).map(|r| (case, r.network_emse)))
        .collect::<Result<Vec<_>>>()?;
    let mut pairwise = Vec::new();
    for &(a, va) in &values {
        for &(b, vb) in &values {
            if a == b {
                continue;
            }
            let rel = if (va - vb).abs() <= EQUAL_TOL * va.abs().max(vb.abs()) {
                Relation::Equal
            } else if va < vb {
                Relation::Better
            } else {
                Relation::Worse
            };
            pairwise.push((a, b, rel));
        }
    }
    let mut ranking: Vec<(TwoNodeCase, f64)> = values.clone();
    ranking.sort_by(|x, y| x.1.total_cmp(&y.1));
    let get = |case| values.iter().find(|(c, _)| *c == case).unwrap().1;
    let close = |x: f64, y: f64| (x - y).abs() <= EQUAL_TOL * x.abs().max(y.abs());
    let unf = get(TwoNodeCase::UnfAtc);
    let (sa, sh) = (c.sigma_arth, c.sigma_harm);
    let condition_lhs = c.c2 / c.c1;
    let condition_rhs = (sa - sh) / (2.0 * sa - sh);
    Ok(OrderingReport {
        centralized_matches_uniform_atc: close(get(TwoNodeCase::Block), unf)
            && close(get(TwoNodeCase::Incremental), unf),
        values,
        pairwise,
        ranking: ranking.into_iter().map(|(c, _)| c).collect(),
        condition_lhs,
        condition_rhs,
        condition_holds: condition_lhs < condition_rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model(s1: f64, s2: f64, mu: f64) -> NetworkModel {
        NetworkModel::with_identity_cov(vec![0.0; 10], vec![s1, s2], mu).unwrap()
    }

    #[test]
    fn fig5_ordering() {
        let r = table5_orderings(&model(0.01, 0.002, 0.01)).unwrap();
        use TwoNodeCase::*;
        assert_eq!(r.ranking[..2], [OptAtc, OptCta]);
        assert_eq!(r.ranking[5..], [UnfCta, Standalone]);
        assert!(r.centralized_matches_uniform_atc);
        assert_eq!(r.relation(UnfAtc, Block), Some(Relation::Equal));
        assert_eq!(r.relation(Block, Incremental), Some(Relation::Equal));
        assert_eq!(r.relation(OptCta, Block), Some(Relation::Better));
        assert_eq!(r.relation(UnfCta, Block), Some(Relation::Worse));
        assert!(r.condition_holds);
        for case in TwoNodeCase::ALL.into_iter().filter(|&c| c != Standalone) {
            assert_eq!(r.relation(case, Standalone), Some(Relation::Better));
        }
    }

    #[test]
    fn equal_variances_tie_optimal_and_uniform() {
        let r = table5_orderings(&model(0.005, 0.005, 0.01)).unwrap();
        assert_eq!(r.relation(TwoNodeCase::OptAtc, TwoNodeCase::UnfAtc), Some(Relation::Equal));
        assert_eq!(r.relation(TwoNodeCase::OptCta, TwoNodeCase::UnfCta), Some(Relation::Equal));
    }

    #[test]
    fn large_step_flips_cta_versus_block() {
        // With R_u = I, c₂/c₁ = 2μ and the threshold here is 0.3077.
        let r = table5_orderings(&model(0.01, 0.002, 0.2)).unwrap();
        assert_relative_eq!(r.condition_lhs, 0.4, max_relative = 1e-12);
        assert_relative_eq!(r.condition_rhs, 4.0 / 13.0, max_relative = 1e-12);
        assert!(!r.condition_holds);
        assert_eq!(r.relation(TwoNodeCase::OptCta, TwoNodeCase::Block), Some(Relation::Worse));
        let r = table5_orderings(&model(0.01, 0.002, 0.1)).unwrap();
        assert!(r.condition_holds);
        assert_eq!(r.relation(TwoNodeCase::OptCta, TwoNodeCase::Block), Some(Relation::Better));
    }

    #[test]
    fn grid_finds_optimum_at_small_step() {
        let r = verify_appendix_b_optimum(&model(0.01, 0.002, 0.001), 200).unwrap();
        assert_relative_eq!(r.analytic_alpha, 1.0 / 6.0, epsilon = 1e-15);
        assert!(r.atc.within_one_cell, "{:?}", r.atc);
        assert!(r.cta.within_one_cell, "{:?}", r.cta);
        assert!(r.consistent && r.analytic_beats_grid);
    }

    #[test]
    fn grid_symmetric_case() {
        let r = verify_appendix_b_optimum(&model(0.004, 0.004, 0.001), 200).unwrap();
        assert!(r.cta.within_one_cell && r.atc.within_one_cell);
        assert!((r.atc.alpha - 0.5).abs() <= 0.005 && (r.atc.beta - 0.5).abs() <= 0.005);
    }

    #[test]
    fn optimum_beats_uniform() {
        for (s1, s2) in [(0.01, 0.002), (0.1, 0.001), (0.003, 0.002), (0.02, 0.05)] {
            let r = verify_appendix_b_optimum(&model(s1, s2, 0.001), 20).unwrap();
            assert!(r.cta_at_optimum <= r.cta_at_uniform);
            assert!(r.atc_at_optimum <= r.atc_at_uniform);
        }
    }
}

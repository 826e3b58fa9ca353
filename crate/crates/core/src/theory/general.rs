//! Reduced expression for general `(P, Q)` diffusion.

use nalgebra::{Complex, DMatrix};

use super::modes::dominant_mode;
use super::n_node::{n_node_block_inc, standalone_theory};
use super::{TheoryReport, XiConvention};
use crate::algorithms::{Strategy, StrategyKind};
use crate::error::{Error, Result};
use crate::model::NetworkModel;
use crate::rules::hastings_weights;
use crate::topology::{spectral_decompose, CombinationMatrix, SpectralA};

type C64 = Complex<f64>;

/// Per-node EMSE and MSD of diffusion with combiners `P` (before adaptation)
/// and `Q` (after), given the decomposition `PQ = T D T⁻¹`:
///
/// `EMSE_k = μ² Σ_m λ_m² Σ_{a,b} X_ab Y^k_ab / (1 − ξ_m d_a d_b)`
///
/// with `X = TᵀQᵀR_vQT` and `Y^k = T⁻¹E_kkT⁻ᵀ`. The MSD uses `λ_m` for
/// `λ_m²`.
pub fn general_diffusion_emse_msd(
    model: &NetworkModel,
    p: &CombinationMatrix,
    q: &CombinationMatrix,
    spectral: &SpectralA,
    xi: XiConvention,
) -> Result<TheoryReport> {
    let n = model.n_nodes();
    if p.n_nodes() != n || q.n_nodes() != n || spectral.n() != n {
        return Err(Error::Dimension(format!(
            "model has {n} nodes; P, Q and the decomposition have {}, {}, {}",
            p.n_nodes(),
            q.n_nodes(),
            spectral.n()
        )));
    }
    if !spectral.is_reliable() {
        return Err(Error::TheoryUnavailable(format!(
            "eigenvector matrix condition number {:e} exceeds the reliability limit",
            spectral.condition
        )));
    }

    let a = p.weights() * q.weights();
    let mismatch = (spectral.reconstruct() - &a).norm() / a.norm();
    if mismatch > 1e-6 {
        return Err(Error::Dimension(format!(
            "decomposition does not reproduce P·Q (relative error {mismatch:e})"
        )));
    }

    let mu = model.step_size();
    let lambdas = &model.spectral().eigenvalues;
    let xis: Vec<f64> = lambdas.iter().map(|&l| xi.xi(mu, l)).collect();
    let d = &spectral.eigvals;
    let worst = xis.iter().map(|x| x.abs()).fold(0.0, f64::max)
        * d.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    if worst >= 1.0 {
        return Err(Error::Unstable(format!(
            "spectral radius of xi·(D⊗D) is {worst:.6} (step size {mu} too large)"
        )));
    }

    let rv = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(model.noise_vars()));
    let qrq = q.weights().transpose() * rv * q.weights();
    let qrq_c: DMatrix<C64> = qrq.map(|v| C64::new(v, 0.0));
    let t = &spectral.t;
    let x = t.transpose() * qrq_c * t;
    let ti = &spectral.t_inv;

    // Mode-dependent kernel g_ab(m) = 1/(1 − ξ_m d_a d_b).
    let mut emse = vec![0.0; n];
    let mut msd = vec![0.0; n];
    for (m, &l) in lambdas.iter().enumerate() {
        let mut kernel = DMatrix::<C64>::zeros(n, n);
        for a_ in 0..n {
            for b in 0..n {
                kernel[(a_, b)] = x[(a_, b)] / (C64::new(1.0, 0.0) - d[a_] * d[b] * xis[m]);
            }
        }
        for k in 0..n {
            // Σ_ab K_ab t⁻¹_ak t⁻¹_bk
            let col = ti.column(k);
            let val: C64 = (col.transpose() * &kernel * col)[(0, 0)];
            emse[k] += mu * mu * l * l * val.re;
            msd[k] += mu * mu * l * val.re;
        }
    }
    let kind = if p.weights() == &DMatrix::identity(n, n) {
        StrategyKind::Atc
    } else if q.weights() == &DMatrix::identity(n, n) {
        StrategyKind::Cta
    } else {
        StrategyKind::GeneralPq
    };
    let label = match xi {
        XiConvention::FirstOrder => kind.name().to_string(),
        XiConvention::Exact => format!("{} (exact xi)", kind.name()),
    };
    Ok(TheoryReport::from_nodes(label, "given P, Q", emse, msd, dominant_mode(model, kind)?))
}

/// [`general_diffusion_emse_msd`] with the decomposition computed here.
pub fn diffusion_theory(
    model: &NetworkModel,
    p: &CombinationMatrix,
    q: &CombinationMatrix,
    xi: XiConvention,
) -> Result<TheoryReport> {
    let a = CombinationMatrix::from_weights(p.weights() * q.weights())?;
    let spectral = spectral_decompose(&a)?;
    general_diffusion_emse_msd(model, p, q, &spectral, xi)
}

/// Steady-state prediction for any strategy on any network: closed forms
/// for stand-alone and centralized strategies, the reduced expression for
/// diffusion. Adaptive ATC is predicted by its limit, static Hastings ATC.
pub fn predict(model: &NetworkModel, strategy: &Strategy) -> Result<TheoryReport> {
    let n = model.n_nodes();
    let id = CombinationMatrix::identity(n);
    let mut report = match strategy {
        Strategy::Standalone => standalone_theory(model)?,
        Strategy::Block | Strategy::Incremental => {
            let mut r = n_node_block_inc(model)?;
            r.strategy = strategy.kind().name().into();
            r
        }
        Strategy::Cta(a) => diffusion_theory(model, a, &id, XiConvention::FirstOrder)?,
        Strategy::Atc(a) => diffusion_theory(model, &id, a, XiConvention::FirstOrder)?,
        Strategy::General { p, q } => diffusion_theory(model, p, q, XiConvention::FirstOrder)?,
        Strategy::AdaptiveAtc { graph, .. } => {
            let a = hastings_weights(graph, model.noise_vars())?;
            let mut r = diffusion_theory(model, &id, &a, XiConvention::FirstOrder)?;
            r.weights_used = "hastings (limit of adaptive weights)".into();
            r
        }
    };
    if matches!(strategy, Strategy::Cta(_) | Strategy::Atc(_)) {
        report.weights_used = "given A".into();
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::kronecker_oracle_emse;
    use approx::assert_relative_eq;

    #[test]
    fn identity_combiners_recover_standalone() {
        let m = NetworkModel::with_identity_cov(vec![0.0; 4], vec![0.01, 0.002, 0.05], 0.001).unwrap();
        let id = CombinationMatrix::identity(3);
        let r = diffusion_theory(&m, &id, &id, XiConvention::FirstOrder).unwrap();
        for k in 0..3 {
            let closed = m.step_size() * m.noise_vars()[k] * 4.0 / 2.0;
            assert_relative_eq!(r.per_node_emse[k], closed, max_relative = 1e-12);
        }
        // With the exact factor the scalar series differs by (1 − μλ/2)⁻¹.
        let r = diffusion_theory(&m, &id, &id, XiConvention::Exact).unwrap();
        for k in 0..3 {
            let closed = m.step_size() * m.noise_vars()[k] * 4.0 / 2.0;
            assert_relative_eq!(r.per_node_emse[k], closed / (1.0 - 0.0005), max_relative = 1e-12);
        }
    }

    #[test]
    fn three_node_random_matches_oracle() {
        let w = DMatrix::from_row_slice(3, 3, &[0.2, 0.5, 0.1, 0.3, 0.4, 0.6, 0.5, 0.1, 0.3]);
        let a = CombinationMatrix::from_weights(w).unwrap();
        let id = CombinationMatrix::identity(3);
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.7]);
        let m = NetworkModel::new(vec![0.0; 2], vec![0.01, 0.03, 0.002], cov, 0.02).unwrap();
        let reduced = diffusion_theory(&m, &a, &id, XiConvention::Exact).unwrap();
        let oracle = kronecker_oracle_emse(&m, &a, &id).unwrap();
        for k in 0..3 {
            assert_relative_eq!(reduced.per_node_emse[k], oracle[k], max_relative = 1e-9);
        }
    }

    #[test]
    fn unstable_step_is_rejected() {
        let m = NetworkModel::with_identity_cov(vec![0.0; 2], vec![0.01, 0.01], 1.5).unwrap();
        let a = CombinationMatrix::two_node(0.5, 0.5).unwrap();
        let id = CombinationMatrix::identity(2);
        assert!(matches!(diffusion_theory(&m, &id, &a, XiConvention::FirstOrder), Err(Error::Unstable(_))));
    }

    #[test]
    fn defective_combiner_is_refused() {
        let w = DMatrix::from_row_slice(3, 3, &[0.5, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 0.5, 1.0]);
        let a = CombinationMatrix::from_weights(w).unwrap();
        let id = CombinationMatrix::identity(3);
        let m = NetworkModel::with_identity_cov(vec![0.0; 2], vec![0.01; 3], 0.01).unwrap();
        let r = diffusion_theory(&m, &id, &a, XiConvention::FirstOrder);
        assert!(matches!(r, Err(Error::TheoryUnavailable(_))), "{r:?}");
    }

    #[test]
    fn predict_dispatches() {
        let m = NetworkModel::with_identity_cov(vec![0.0; 3], vec![0.01, 0.002], 0.01).unwrap();
        let g = crate::topology::Graph::complete(2);
        let r = predict(&m, &Strategy::Block).unwrap();
        assert_eq!(r.strategy, "block");
        let r = predict(&m, &Strategy::adaptive_atc(g, 0.1).unwrap()).unwrap();
        assert!(r.weights_used.contains("hastings"));
        let r = predict(&m, &Strategy::Standalone).unwrap();
        assert_relative_eq!(r.per_node_emse[0], 0.01 * 0.01 * 3.0 / 2.0, max_relative = 1e-12);
    }
}

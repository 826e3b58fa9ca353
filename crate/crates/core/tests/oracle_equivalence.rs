use nalgebra::DMatrix;
use netlms_core::theory::{diffusion_theory, kronecker_oracle_emse, kronecker_oracle_msd};
use netlms_core::{CombinationMatrix, NetworkModel, XiConvention};
use proptest::prelude::*;

fn left_stochastic(raw: &[f64], n: usize) -> CombinationMatrix {
    let mut w = DMatrix::from_column_slice(n, n, &raw[..n * n]);
    for k in 0..n {
        let s = w.column(k).sum();
        w.column_mut(k).scale_mut(1.0 / s);
    }
    CombinationMatrix::from_weights(w).unwrap()
}

fn covariance(raw: &[f64], m: usize) -> DMatrix<f64> {
    let b = DMatrix::from_column_slice(m, m, &raw[..m * m]);
    &b * b.transpose() / m as f64 + DMatrix::identity(m, m) * 0.2
}

fn instance() -> impl Strategy<Value = (usize, usize, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, f64, u8)> {
    (
        2usize..=3,
        2usize..=3,
        prop::collection::vec(0.05f64..1.0, 9),
        prop::collection::vec(0.05f64..1.0, 9),
        prop::collection::vec(-1.0f64..1.0, 9),
        prop::collection::vec(1e-3f64..1e-1, 3),
        0.002f64..0.05,
        0u8..3,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn reduced_form_matches_kronecker_oracle((n, m, pw, qw, cov, vars, mu_scale, shape) in instance()) {
        let cov = covariance(&cov, m);
        let lmax = cov.symmetric_eigenvalues().max();
        let mu = mu_scale / lmax;
        let model = NetworkModel::new(vec![0.0; m], vars[..n].to_vec(), cov, mu).unwrap();
        let id = CombinationMatrix::identity(n);
        let a = left_stochastic(&pw, n);
        let b = left_stochastic(&qw, n);
        let (p, q) = match shape {
            0 => (a, id),
            1 => (id, a),
            _ => (a, b),
        };
        let exact = diffusion_theory(&model, &p, &q, XiConvention::Exact).unwrap();
        let first = diffusion_theory(&model, &p, &q, XiConvention::FirstOrder).unwrap();
        let oracle = kronecker_oracle_emse(&model, &p, &q).unwrap();
        let oracle_msd = kronecker_oracle_msd(&model, &p, &q).unwrap();
        for k in 0..n {
            let rel = (exact.per_node_emse[k] - oracle[k]).abs() / oracle[k];
            prop_assert!(rel <= 1e-6, "node {k}: {} vs {}", exact.per_node_emse[k], oracle[k]);
            let rel = (exact.per_node_msd[k] - oracle_msd[k]).abs() / oracle_msd[k];
            prop_assert!(rel <= 1e-6);
            let gap = (first.per_node_emse[k] - oracle[k]).abs() / oracle[k];
            prop_assert!(gap <= 3.0 * mu * lmax, "gap {gap} bound {}", 3.0 * mu * lmax);
        }
    }
}

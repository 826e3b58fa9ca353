use netlms_core::model::random_w_true;
use netlms_core::theory::{two_node_case, TwoNodeCase};
use netlms_core::{db, run_experiment, ExperimentSpec, Graph, NetworkModel, Rule, StrategySpec};

fn fig5() -> NetworkModel {
    NetworkModel::with_identity_cov(random_w_true(10, 5), vec![0.01, 0.002], 0.01).unwrap()
}

fn run(model: &NetworkModel, s: StrategySpec, iters: usize, trials: usize, seed: u64) -> f64 {
    let n = model.n_nodes();
    let spec = ExperimentSpec::new(model.clone(), Graph::complete(n), s, iters, trials, seed);
    run_experiment(&spec).unwrap().steady_emse
}

#[test]
fn steady_emse_is_linear_in_noise() {
    let m = fig5();
    let base = run(&m, StrategySpec::atc(Rule::TwoNodeOptimal), 2500, 40, 9);
    for c in [0.5, 4.0] {
        let scaled = m.with_noise_vars(m.noise_vars().iter().map(|v| v * c).collect()).unwrap();
        let v = run(&scaled, StrategySpec::atc(Rule::TwoNodeOptimal), 2500, 40, 9);
        assert!((v / base / c - 1.0).abs() < 0.01, "c = {c}: ratio {}", v / base);
    }
}

#[test]
fn doubling_trials_halves_estimator_variance() {
    let m = NetworkModel::with_identity_cov(random_w_true(2, 1), vec![0.05], 0.05).unwrap();
    let var_of = |trials: usize| {
        let xs: Vec<f64> = (0..60)
            .map(|b| run(&m, StrategySpec::standalone(), 300, trials, 1000 + b))
            .collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
    };
    let ratio = var_of(8) / var_of(16);
    assert!((1.2..3.5).contains(&ratio), "variance ratio {ratio}");
}

#[test]
fn uniform_atc_block_incremental_agree() {
    let m = fig5();
    let th = two_node_case(&m, TwoNodeCase::UnfAtc).unwrap().network_emse;
    let vals: Vec<f64> = [StrategySpec::atc(Rule::Uniform), StrategySpec::block(), StrategySpec::incremental()]
        .into_iter()
        .map(|s| run(&m, s, 3000, 120, 17))
        .collect();
    for v in &vals {
        assert!((db(*v) - db(th)).abs() < 0.5);
    }
    let spread = vals.iter().map(|v| db(*v)).fold(f64::NEG_INFINITY, f64::max)
        - vals.iter().map(|v| db(*v)).fold(f64::INFINITY, f64::min);
    assert!(spread < 0.3, "spread {spread} dB");
}

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use netlms_bench::network;
use netlms_core::rules::hastings_weights;
use netlms_core::theory::{diffusion_theory, kronecker_oracle_emse, verify_appendix_b_optimum};
use netlms_core::topology::spectral_decompose;
use netlms_core::{NetworkModel, XiConvention};

fn decomposition(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectral_decompose");
    for n in [5, 20, 100] {
        let (model, graph) = network(n, 3, 11);
        let a = hastings_weights(&graph, model.noise_vars()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &a, |b, a| {
            b.iter(|| spectral_decompose(black_box(a)).unwrap())
        });
    }
    group.finish();
}

fn predictions(c: &mut Criterion) {
    let mut group = c.benchmark_group("emse_prediction");
    for n in [4, 20] {
        let (model, graph) = network(n, 3, 5);
        let a = hastings_weights(&graph, model.noise_vars()).unwrap();
        let id = netlms_core::CombinationMatrix::identity(n);
        group.bench_with_input(BenchmarkId::new("reduced", n), &n, |b, _| {
            b.iter(|| diffusion_theory(&model, &id, black_box(&a), XiConvention::Exact).unwrap())
        });
        if n * model.dim() <= 12 {
            group.bench_with_input(BenchmarkId::new("kronecker", n), &n, |b, _| {
                b.iter(|| kronecker_oracle_emse(&model, &id, black_box(&a)).unwrap())
            });
        }
    }
    group.finish();
}

fn grid(c: &mut Criterion) {
    let model = NetworkModel::with_identity_cov(vec![0.0; 10], vec![0.01, 0.002], 0.001).unwrap();
    let mut group = c.benchmark_group("appendix_grid");
    group.sample_size(10);
    group.bench_function("200x200", |b| b.iter(|| verify_appendix_b_optimum(black_box(&model), 200).unwrap()));
    group.finish();
}

criterion_group!(benches, decomposition, predictions, grid);
criterion_main!(benches);

//! Linear regression data model and reproducible measurement streams.
//!
//! Every node `k` observes `d_k(i) = u_{k,i} w° + v_k(i)` where the row
//! regressor `u_{k,i}` is zero-mean Gaussian with covariance `R_u` (shared by
//! all nodes) and `v_k(i)` is zero-mean Gaussian noise with variance
//! `σ²_{v,k}`. Draws are white in time and independent across nodes.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Relative tolerance used when checking covariance symmetry.
const SYMMETRY_TOL: f64 = 1e-12;

/// Stream index reserved for drawing a random ground truth vector, so it
/// never collides with a trial stream.
const GROUND_TRUTH_STREAM: u64 = u64::MAX;

/// Eigen-structure of a symmetric positive-definite covariance matrix.
#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Eigenvalues in descending order.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, column `m` pairs with `eigenvalues[m]`.
    pub eigenvectors: DMatrix<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `Tr(R_u) = Σ λ_m`.
    pub trace: f64,
    /// `‖λ‖² = Σ λ_m²`.
    pub norm_sq: f64,
}

impl SpectralData {
    /// `U Λ Uᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let lambda = DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigenvalues));
        &self.eigenvectors * lambda * self.eigenvectors.transpose()
    }
}

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs() / scale);
        }
    }
    worst
}

/// Eigendecomposition of a symmetric positive-definite covariance.
pub fn spectral_data(cov: &DMatrix<f64>) -> Result<SpectralData> {
    if !cov.is_square() || cov.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "covariance must be square and non-empty, got {}x{}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    let asym = max_asymmetry(cov);
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    // Symmetrize exactly so round-off in the input cannot leak into U.
    let sym = (cov + cov.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::zeros(cov.nrows(), cov.ncols());
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    let lambda_min = *eigenvalues.last().unwrap();
    if lambda_min <= 0.0 {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(SpectralData {
        lambda_max: eigenvalues[0],
        lambda_min,
        trace: eigenvalues.iter().sum(),
        norm_sq: eigenvalues.iter().map(|l| l * l).sum(),
        eigenvalues,
        eigenvectors,
    })
}

/// Ground truth, noise profile, regressor statistics and step-sizes of a
/// network of `N` nodes estimating an `M`-dimensional vector.
#[derive(Debug, Clone)]
pub struct NetworkModel {
    w_true: DVector<f64>,
    noise_vars: Vec<f64>,
    regressor_cov: DMatrix<f64>,
    step_size: f64,
    centralized_step_size: f64,
    chol_lower: DMatrix<f64>,
    identity_cov: bool,
    spectral: SpectralData,
}

impl NetworkModel {
    /// Builds a model with the rate-matched centralized step `μ' = μ/N`.
    pub fn new(
        w_true: Vec<f64>,
        noise_vars: Vec<f64>,
        regressor_cov: DMatrix<f64>,
        step_size: f64,
    ) -> Result<Self> {
        let n = noise_vars.len();
        if n == 0 {
            return Err(Error::Config("network needs at least one node".into()));
        }
        if w_true.is_empty() {
            return Err(Error::Config("parameter dimension must be positive".into()));
        }
        if regressor_cov.nrows() != w_true.len() || regressor_cov.ncols() != w_true.len() {
            return Err(Error::Dimension(format!(
                "regressor covariance is {}x{} but w_true has length {}",
                regressor_cov.nrows(),
                regressor_cov.ncols(),
                w_true.len()
            )));
        }
        if let Some(k) = noise_vars.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config(format!(
                "noise variance of node {k} must be finite and nonnegative"
            )));
        }
        if w_true.iter().any(|w| !w.is_finite()) {
            return Err(Error::Config("w_true has non-finite entries".into()));
        }
        if !(step_size.is_finite() && step_size > 0.0) {
            return Err(Error::Config(format!("step size must be positive, got {step_size}")));
        }
        let spectral = spectral_data(&regressor_cov)?;
        let chol = nalgebra::Cholesky::new(regressor_cov.clone()).ok_or(Error::NotPositiveDefinite)?;
        let identity_cov = regressor_cov == DMatrix::identity(w_true.len(), w_true.len());
        Ok(Self {
            w_true: DVector::from_vec(w_true),
            centralized_step_size: step_size / n as f64,
            noise_vars,
            chol_lower: chol.l(),
            identity_cov,
            regressor_cov,
            step_size,
            spectral,
        })
    }

    /// Convenience constructor for `R_u = I_M`.
    pub fn with_identity_cov(w_true: Vec<f64>, noise_vars: Vec<f64>, step_size: f64) -> Result<Self> {
        let m = w_true.len();
        Self::new(w_true, noise_vars, DMatrix::identity(m, m), step_size)
    }

    /// Overrides `μ'`. Only meant for expert use; the default keeps the
    /// convergence rates of centralized and distributed strategies matched.
    pub fn with_centralized_step_size(mut self, mu_prime: f64) -> Result<Self> {
        if !(mu_prime.is_finite() && mu_prime > 0.0) {
            return Err(Error::Config(format!(
                "centralized step size must be positive, got {mu_prime}"
            )));
        }
        self.centralized_step_size = mu_prime;
        Ok(self)
    }

    /// Same model with a new `μ` and the rate-matched `μ' = μ/N`.
    pub fn with_step_size(&self, step_size: f64) -> Result<Self> {
        if !(step_size.is_finite() && step_size > 0.0) {
            return Err(Error::Config(format!("step size must be positive, got {step_size}")));
        }
        let mut out = self.clone();
        out.step_size = step_size;
        out.centralized_step_size = step_size / self.n_nodes() as f64;
        Ok(out)
    }

    /// Same model with a different noise profile.
    pub fn with_noise_vars(&self, noise_vars: Vec<f64>) -> Result<Self> {
        if noise_vars.len() != self.n_nodes() {
            return Err(Error::Dimension("noise profile length changed".into()));
        }
        let mu_prime = self.centralized_step_size;
        let out = Self::new(
            self.w_true.as_slice().to_vec(),
            noise_vars,
            self.regressor_cov.clone(),
            self.step_size,
        )?;
        out.with_centralized_step_size(mu_prime)
    }

    pub fn n_nodes(&self) -> usize {
        self.noise_vars.len()
    }

    pub fn dim(&self) -> usize {
        self.w_true.len()
    }

    pub fn w_true(&self) -> &DVector<f64> {
        &self.w_true
    }

    pub fn noise_vars(&self) -> &[f64] {
        &self.noise_vars
    }

    pub fn regressor_cov(&self) -> &DMatrix<f64> {
        &self.regressor_cov
    }

    /// `μ`, used by stand-alone and diffusion strategies.
    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    /// `μ'`, used by block and incremental LMS.
    pub fn centralized_step_size(&self) -> f64 {
        self.centralized_step_size
    }

    pub fn spectral(&self) -> &SpectralData {
        &self.spectral
    }

    /// `R_v = diag(σ²_{v,1}, …, σ²_{v,N})`.
    pub fn noise_cov(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.noise_vars))
    }
}

/// Draws a ground-truth vector with i.i.d. standard normal entries from a
/// stream reserved for that purpose.
pub fn random_w_true(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(GROUND_TRUTH_STREAM);
    (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Per-trial random source. A trial is identified by `(seed, trial_index)`
/// and maps to an independent ChaCha stream, so the sample sequence depends
/// only on that pair and never on scheduling.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    trial_index: u64,
    draw_counter: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, trial_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial_index);
        Self { seed, trial_index, draw_counter: 0, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trial_index(&self) -> u64 {
        self.trial_index
    }

    /// Number of samples drawn so far.
    pub fn draw_counter(&self) -> u64 {
        self.draw_counter
    }

    fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

/// One time instant of data across the whole network.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSample {
    n_nodes: usize,
    dim: usize,
    /// Row-major `N×M`; row `k` is `u_{k,i}`.
    regressors: Vec<f64>,
    measurements: Vec<f64>,
    noises: Vec<f64>,
}

impl DataSample {
    pub fn zeros(n_nodes: usize, dim: usize) -> Self {
        Self {
            n_nodes,
            dim,
            regressors: vec![0.0; n_nodes * dim],
            measurements: vec![0.0; n_nodes],
            noises: vec![0.0; n_nodes],
        }
    }

    /// Builds a sample from explicit data; `d = U w° + v` is enforced.
    pub fn from_parts(regressors: &DMatrix<f64>, w_true: &[f64], noises: Vec<f64>) -> Result<Self> {
        let (n, m) = regressors.shape();
        if w_true.len() != m || noises.len() != n {
            return Err(Error::Dimension("sample parts have inconsistent sizes".into()));
        }
        let mut s = Self::zeros(n, m);
        for k in 0..n {
            for j in 0..m {
                s.regressors[k * m + j] = regressors[(k, j)];
            }
        }
        s.noises = noises;
        s.recompute_measurements(w_true);
        Ok(s)
    }

    fn recompute_measurements(&mut self, w_true: &[f64]) {
        for k in 0..self.n_nodes {
            self.measurements[k] = dot(self.regressor(k), w_true) + self.noises[k];
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `u_{k,i}`.
    pub fn regressor(&self, k: usize) -> &[f64] {
        &self.regressors[k * self.dim..(k + 1) * self.dim]
    }

    /// `d_k(i)`.
    pub fn measurement(&self, k: usize) -> f64 {
        self.measurements[k]
    }

    pub fn measurements(&self) -> &[f64] {
        &self.measurements
    }

    pub fn noises(&self) -> &[f64] {
        &self.noises
    }

    pub fn regressors_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n_nodes, self.dim, &self.regressors)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Draws one network-wide sample.
pub fn generate_sample(model: &NetworkModel, rng: &mut RngStream) -> DataSample {
    let mut sample = DataSample::zeros(model.n_nodes(), model.dim());
    generate_sample_into(model, rng, &mut sample);
    sample
}

/// Allocation-free variant of [`generate_sample`] for the simulation loop.
pub fn generate_sample_into(model: &NetworkModel, rng: &mut RngStream, sample: &mut DataSample) {
    let (n, m) = (model.n_nodes(), model.dim());
    debug_assert_eq!((sample.n_nodes, sample.dim), (n, m));
    let mut z = [0.0f64; 64];
    let mut z_heap = Vec::new();
    let z: &mut [f64] = if m <= z.len() {
        &mut z[..m]
    } else {
        z_heap.resize(m, 0.0);
        &mut z_heap
    };
    for k in 0..n {
        for zj in z.iter_mut() {
            *zj = rng.normal();
        }
        let row = &mut sample.regressors[k * m..(k + 1) * m];
        if model.identity_cov {
            row.copy_from_slice(z);
        } else {
            // u_kᵀ = L z, L lower triangular.
            let l = &model.chol_lower;
            for (r, out) in row.iter_mut().enumerate() {
                *out = (0..=r).map(|c| l[(r, c)] * z[c]).sum();
            }
        }
    }
    for k in 0..n {
        sample.noises[k] = model.noise_vars[k].sqrt() * rng.normal();
    }
    sample.recompute_measurements(model.w_true.as_slice());
    rng.draw_counter += 1;
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Complex;

    fn model(noise: Vec<f64>, m: usize) -> NetworkModel {
        NetworkModel::with_identity_cov(random_w_true(m, 7), noise, 0.01).unwrap()
    }

    #[test]
    fn identity_cov_column_variances() {
        let m = 4;
        let model = model(vec![0.1], m);
        let mut rng = RngStream::new(11, 0);
        let draws = 100_000;
        let mut sum_sq = vec![0.0; m];
        let mut sum = vec![0.0; m];
        for _ in 0..draws {
            let s = generate_sample(&model, &mut rng);
            for (j, u) in s.regressor(0).iter().enumerate() {
                sum[j] += u;
                sum_sq[j] += u * u;
            }
        }
        // Std of the sample variance for a unit Gaussian is sqrt(2/(n-1)).
        let tol = 3.0 * (2.0 / (draws as f64 - 1.0)).sqrt();
        for j in 0..m {
            let mean = sum[j] / draws as f64;
            let var = sum_sq[j] / draws as f64 - mean * mean;
            assert!((var - 1.0).abs() < tol, "column {j}: var {var}");
        }
        assert_eq!(rng.draw_counter(), draws as u64);
    }

    #[test]
    fn noise_variances_match_profile() {
        let model = model(vec![0.01, 0.002], 10);
        let mut rng = RngStream::new(3, 1);
        let draws = 100_000;
        let mut acc = [0.0; 2];
        for _ in 0..draws {
            let s = generate_sample(&model, &mut rng);
            for k in 0..2 {
                acc[k] += s.noises()[k].powi(2);
            }
        }
        for (k, target) in [0.01, 0.002].iter().enumerate() {
            let est = acc[k] / draws as f64;
            assert!((est / target - 1.0).abs() < 0.05, "node {k}: {est}");
        }
    }

    #[test]
    fn zero_ground_truth_measures_noise() {
        let model = NetworkModel::with_identity_cov(vec![0.0; 5], vec![0.3, 0.7, 1.0], 0.01).unwrap();
        let mut rng = RngStream::new(5, 2);
        for _ in 0..100 {
            let s = generate_sample(&model, &mut rng);
            assert_eq!(s.measurements(), s.noises());
        }
    }

    #[test]
    fn measurements_follow_linear_model() {
        let cov = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.1, 0.5, 1.0, 0.2, 0.1, 0.2, 0.5]);
        let model = NetworkModel::new(vec![1.0, -2.0, 0.5], vec![0.1, 0.2], cov, 0.01).unwrap();
        let mut rng = RngStream::new(9, 4);
        let s = generate_sample(&model, &mut rng);
        for k in 0..2 {
            let d = dot(s.regressor(k), model.w_true().as_slice()) + s.noises()[k];
            assert_eq!(s.measurement(k), d);
        }
    }

    #[test]
    fn colored_regressors_have_target_covariance() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
        let model = NetworkModel::new(vec![0.0, 0.0], vec![0.1], cov.clone(), 0.01).unwrap();
        let mut rng = RngStream::new(21, 0);
        let draws = 200_000;
        let mut acc = DMatrix::<f64>::zeros(2, 2);
        for _ in 0..draws {
            let s = generate_sample(&model, &mut rng);
            let u = s.regressor(0);
            for a in 0..2 {
                for b in 0..2 {
                    acc[(a, b)] += u[a] * u[b];
                }
            }
        }
        acc /= draws as f64;
        for a in 0..2 {
            for b in 0..2 {
                assert!((acc[(a, b)] - cov[(a, b)]).abs() < 0.02, "{acc}");
            }
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let model = model(vec![0.01, 0.02, 0.03], 3);
        let run = |seed, trial| {
            let mut rng = RngStream::new(seed, trial);
            (0..50).map(|_| generate_sample(&model, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(run(42, 7), run(42, 7));
        assert_ne!(run(42, 7), run(42, 8));
        assert_ne!(run(42, 7), run(43, 7));
    }

    #[test]
    fn cross_correlation_vanishes() {
        let model = model(vec![0.01, 0.01], 2);
        let mut rng = RngStream::new(17, 0);
        let draws = 50_000;
        let mut prev: Option<DataSample> = None;
        let (mut spatial, mut temporal) = (0.0, 0.0);
        for _ in 0..draws {
            let s = generate_sample(&model, &mut rng);
            spatial += s.regressor(0)[0] * s.regressor(1)[0];
            if let Some(p) = &prev {
                temporal += s.regressor(0)[0] * p.regressor(0)[0];
            }
            prev = Some(s);
        }
        let bound = 4.0 / (draws as f64).sqrt();
        assert!((spatial / draws as f64).abs() < bound);
        assert!((temporal / draws as f64).abs() < bound);
    }

    #[test]
    fn spectral_identity() {
        let sd = spectral_data(&DMatrix::identity(10, 10)).unwrap();
        assert!(sd.eigenvalues.iter().all(|&l| (l - 1.0).abs() < 1e-14));
        assert_relative_eq!(sd.trace, 10.0, epsilon = 1e-12);
        assert_relative_eq!(sd.norm_sq, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn spectral_diagonal_sorted_descending() {
        let sd = spectral_data(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]))).unwrap();
        assert_relative_eq!(sd.eigenvalues.as_slice(), [3.0, 2.0, 1.0].as_slice(), epsilon = 1e-12);
        assert_relative_eq!(sd.lambda_min, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn spectral_rejects_non_symmetric_and_indefinite() {
        let ns = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(spectral_data(&ns), Err(Error::NotSymmetric(_))));
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(spectral_data(&indef), Err(Error::NotPositiveDefinite)));
    }

    /// Characteristic polynomial by Faddeev–LeVerrier, roots from the
    /// companion matrix. Shares nothing with the symmetric eigensolver.
    fn companion_roots(a: &DMatrix<f64>) -> Vec<f64> {
        let n = a.nrows();
        let mut coeffs = vec![1.0]; // c_n = 1, then c_{n-1}, ...
        let mut m = DMatrix::<f64>::zeros(n, n);
        for k in 1..=n {
            m = a * &m + DMatrix::identity(n, n) * *coeffs.last().unwrap();
            let c = -(a * &m).trace() / k as f64;
            coeffs.push(c);
        }
        // p(x) = x^n + c_{n-1} x^{n-1} + ... + c_0
        let mut comp = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            comp[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            comp[(i, n - 1)] = -coeffs[n - i];
        }
        let mut roots: Vec<f64> = comp
            .complex_eigenvalues()
            .iter()
            .map(|z: &Complex<f64>| {
                assert!(z.im.abs() < 1e-6);
                z.re
            })
            .collect();
        roots.sort_by(|a, b| b.total_cmp(a));
        roots
    }

    #[test]
    fn spectral_matches_companion_roots() {
        let mut rng = RngStream::new(99, 0);
        let b = DMatrix::from_fn(4, 4, |_, _| rng.normal());
        let pd = &b * b.transpose() + DMatrix::identity(4, 4) * 0.5;
        let sd = spectral_data(&pd).unwrap();
        let roots = companion_roots(&pd);
        for (l, r) in sd.eigenvalues.iter().zip(&roots) {
            assert!((l - r).abs() < 1e-8 * l.abs().max(1.0), "{l} vs {r}");
        }
        let rec = sd.reconstruct();
        assert!((rec - &pd).norm() / pd.norm() < 1e-10);
    }

    #[test]
    fn model_rate_matching_and_validation() {
        let m = NetworkModel::with_identity_cov(vec![1.0; 3], vec![0.1; 4], 0.02).unwrap();
        assert_relative_eq!(m.centralized_step_size(), 0.005);
        assert!(NetworkModel::with_identity_cov(vec![1.0; 3], vec![0.1, -1.0], 0.02).is_err());
        assert!(NetworkModel::with_identity_cov(vec![1.0; 3], vec![0.1], 0.0).is_err());
        assert!(NetworkModel::new(vec![1.0; 2], vec![0.1], DMatrix::identity(3, 3), 0.1).is_err());
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(NetworkModel::new(vec![1.0; 2], vec![0.1], bad, 0.1).is_err());
    }
}

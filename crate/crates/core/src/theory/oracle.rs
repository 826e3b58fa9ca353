//! Unreduced Kronecker-form steady-state expression, used as an oracle.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::NetworkModel;
use crate::topology::CombinationMatrix;

/// Largest `N·M` the oracle accepts; the linear system is `(NM)² × (NM)²`.
pub const MAX_ORACLE_SIZE: usize = 12;

/// `𝒴 = μ²(QᵀR_vQ)⊗R_u`, `ℬ = (QᵀPᵀ)⊗(I − μR_u)` and `ℱ = ℬᵀ⊗ℬᵀ`.
#[derive(Debug, Clone)]
pub struct OracleMatrices {
    pub y: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub f: DMatrix<f64>,
    /// Spectral radius of `ℱ`.
    pub rho_f: f64,
}

pub fn oracle_matrices(model: &NetworkModel, p: &CombinationMatrix, q: &CombinationMatrix) -> Result<OracleMatrices> {
    let n = model.n_nodes();
    let m = model.dim();
    if n * m > MAX_ORACLE_SIZE {
        return Err(Error::Unsupported(format!(
            "oracle limited to N·M ≤ {MAX_ORACLE_SIZE}, got {}",
            n * m
        )));
    }
    if p.n_nodes() != n || q.n_nodes() != n {
        return Err(Error::Dimension("P and Q must match the model size".into()));
    }
    let mu = model.step_size();
    let ru = model.regressor_cov();
    let rv = DMatrix::from_diagonal(&DVector::from_column_slice(model.noise_vars()));
    let qw = q.weights();
    let y = (qw.transpose() * rv * qw).kronecker(ru) * (mu * mu);
    let b = (qw.transpose() * p.weights().transpose()).kronecker(&(DMatrix::identity(m, m) - ru * mu));
    let bt = b.transpose();
    let f = bt.kronecker(&bt);
    let rho_b = b.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(OracleMatrices { y, b, f, rho_f: rho_b * rho_b })
}

fn weighted(model: &NetworkModel, p: &CombinationMatrix, q: &CombinationMatrix, weight: &DMatrix<f64>) -> Result<Vec<f64>> {
    let om = oracle_matrices(model, p, q)?;
    if om.rho_f >= 1.0 {
        return Err(Error::Unstable(format!("spectral radius of F is {:.6}", om.rho_f)));
    }
    let n = model.n_nodes();
    let dim = om.f.nrows();
    let lhs = DMatrix::identity(dim, dim) - &om.f;
    let lu = lhs.lu();
    let vec_yt = DVector::from_column_slice(om.y.transpose().as_slice());
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut ekk = DMatrix::zeros(n, n);
        ekk[(k, k)] = 1.0;
        let sigma = ekk.kronecker(weight);
        let rhs = DVector::from_column_slice(sigma.as_slice());
        let x = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Unstable("I − F is singular".into()))?;
        out.push(vec_yt.dot(&x));
    }
    Ok(out)
}

/// `EMSE_k = vec(𝒴ᵀ)ᵀ (I − ℱ)⁻¹ vec(E_kk ⊗ R_u)` by direct solve.
pub fn kronecker_oracle_emse(model: &NetworkModel, p: &CombinationMatrix, q: &CombinationMatrix) -> Result<Vec<f64>> {
    weighted(model, p, q, model.regressor_cov())
}

/// `MSD_k = vec(𝒴ᵀ)ᵀ (I − ℱ)⁻¹ vec(E_kk ⊗ I_M)`.
pub fn kronecker_oracle_msd(model: &NetworkModel, p: &CombinationMatrix, q: &CombinationMatrix) -> Result<Vec<f64>> {
    let m = model.dim();
    weighted(model, p, q, &DMatrix::identity(m, m))
}

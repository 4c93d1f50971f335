//! Spectral norm and extreme singular value estimation.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, SparseLu};

/// Largest matrix dimension handled by a dense SVD.
pub const DENSE_NORM_LIMIT: usize = 512;
pub const POWER_TOL: f64 = 1e-12;
pub const POWER_MAX_ITER: usize = 10_000;

/// Deterministic start vector with no special alignment to coordinate axes.
fn start_vector(dim: usize) -> DVector<f64> {
    let v = DVector::from_fn(dim, |i, _| 1.0 + 0.5 * (1.3 * i as f64 + 0.7).sin());
    let norm = v.norm();
    v / norm
}

/// Power iteration on `BᵀB` for an operator `B: ℝ^dim → ℝ^m` given by `apply`
/// and its transpose `apply_t`. Returns the estimate of `‖B‖₂`, which approaches
/// the true value from below.
pub fn operator_norm<F, G>(
    dim: usize,
    mut apply: F,
    mut apply_t: G,
    tol: f64,
    max_iter: usize,
) -> Result<f64>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
    G: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    if dim == 0 {
        return Ok(0.0);
    }
    let mut v = start_vector(dim);
    let mut sigma = 0.0;
    for _ in 0..max_iter {
        let bv = apply(&v)?;
        let next_sigma = bv.norm();
        if next_sigma == 0.0 {
            return Ok(0.0);
        }
        let w = apply_t(&bv)?;
        let w_norm = w.norm();
        if !w_norm.is_finite() {
            return Err(Error::NonFinite("power iteration"));
        }
        if w_norm == 0.0 {
            return Ok(next_sigma);
        }
        v = w / w_norm;
        if (next_sigma - sigma).abs() <= tol * next_sigma {
            return Ok(next_sigma);
        }
        sigma = next_sigma;
    }
    Ok(sigma)
}

/// `‖M‖₂` by power iteration on `MᵀM`.
pub fn power_iteration_norm(m: &CsrMatrix, tol: f64, max_iter: usize) -> f64 {
    operator_norm(
        m.ncols(),
        |v| Ok(m.mul_vec(v)),
        |v| Ok(m.transpose_mul_vec(v)),
        tol,
        max_iter,
    )
    .expect("sparse products are infallible")
}

/// `‖M⁻¹‖₂ = 1/σ_min(M)` by inverse iteration through an existing factorization.
pub fn inverse_iteration_norm(lu: &SparseLu, tol: f64, max_iter: usize) -> Result<f64> {
    // ‖M⁻¹‖ = ‖M⁻ᵀ‖; iterate with B = M⁻ᵀ and Bᵀ = M⁻¹.
    operator_norm(
        lu.dim(),
        |v| lu.solve_transpose(v),
        |v| lu.solve(v),
        tol,
        max_iter,
    )
}

/// Spectral norm: dense SVD when both dimensions are at most
/// [`DENSE_NORM_LIMIT`], power iteration otherwise.
pub fn spectral_norm(m: &CsrMatrix) -> f64 {
    if m.nnz() == 0 {
        return 0.0;
    }
    if m.nrows().max(m.ncols()) <= DENSE_NORM_LIMIT {
        m.to_dense().singular_values().max()
    } else {
        power_iteration_norm(m, POWER_TOL, POWER_MAX_ITER)
    }
}

/// `‖M⁻¹‖₂` for square invertible `M` with factorization `lu`.
pub fn inverse_norm(m: &CsrMatrix, lu: &SparseLu) -> Result<f64> {
    if m.nrows() <= DENSE_NORM_LIMIT {
        let smin = m.to_dense().singular_values().min();
        if smin <= 0.0 || !smin.is_finite() {
            return Err(Error::SingularMatrix("zero singular value"));
        }
        Ok(1.0 / smin)
    } else {
        inverse_iteration_norm(lu, POWER_TOL, POWER_MAX_ITER)
    }
}

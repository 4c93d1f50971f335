//! Classical solution of the embedded system and condition-number estimates.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::embedding::EmbeddedSystem;
use crate::error::{Error, Result};
use crate::norms;
use crate::sparse::{CsrMatrix, SparseLu};

/// Dimension up to which `Auto` picks the direct solver.
pub const DIRECT_LIMIT: usize = 50_000;
/// Dimension up to which condition numbers come from a dense SVD.
pub const DENSE_CONDITION_LIMIT: usize = 2048;
pub const CONDITION_TOL: f64 = 1e-6;
pub const GMRES_RESTART: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Direct,
    Iterative,
    Auto,
}

impl FromStr for SolveMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Self::Direct),
            "iterative" => Ok(Self::Iterative),
            "auto" => Ok(Self::Auto),
            other => Err(Error::Parse(format!("unknown solver method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodUsed {
    Direct,
    Iterative,
}

impl fmt::Display for MethodUsed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Direct => "direct",
            Self::Iterative => "iterative",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub solution_y: DVector<f64>,
    pub residual_rel: f64,
    pub method: MethodUsed,
    pub iterations: usize,
}

/// `‖Ay − b‖ / ‖b‖`, with `0/0` read as 0.
pub fn relative_residual(a: &CsrMatrix, y: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let r = (a.mul_vec(y) - b).norm();
    let bn = b.norm();
    if bn == 0.0 {
        r
    } else {
        r / bn
    }
}

pub fn solve(system: &EmbeddedSystem, method: SolveMethod, tol: f64) -> Result<SolveOutcome> {
    solve_matrix(&system.matrix_a, &system.vector_b, method, tol)
}

pub fn solve_matrix(a: &CsrMatrix, b: &DVector<f64>, method: SolveMethod, tol: f64) -> Result<SolveOutcome> {
    if a.nrows() != a.ncols() || b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            what: "linear system",
            expected: a.nrows(),
            found: b.len(),
        });
    }
    if !(tol > 0.0 && tol <= 1e-2) {
        return Err(Error::Domain(format!("solver tolerance {tol} outside (0, 1e-2]")));
    }
    let method = match method {
        SolveMethod::Auto if a.nrows() <= DIRECT_LIMIT => SolveMethod::Direct,
        SolveMethod::Auto => SolveMethod::Iterative,
        m => m,
    };
    match method {
        SolveMethod::Direct => solve_direct(a, b),
        _ => gmres(a, b, tol, GMRES_RESTART, 50 * a.nrows()),
    }
}

fn solve_direct(a: &CsrMatrix, b: &DVector<f64>) -> Result<SolveOutcome> {
    let lu = SparseLu::factor(a)?;
    let mut y = lu.solve(b)?;
    let mut residual_rel = relative_residual(a, &y, b);
    // Two rounds of iterative refinement, kept only when they help.
    for _ in 0..2 {
        if residual_rel <= 1e-15 {
            break;
        }
        let r = b - a.mul_vec(&y);
        let candidate = &y + lu.solve(&r)?;
        let candidate_rel = relative_residual(a, &candidate, b);
        if candidate_rel < residual_rel {
            y = candidate;
            residual_rel = candidate_rel;
        } else {
            break;
        }
    }
    Ok(SolveOutcome {
        solution_y: y,
        residual_rel,
        method: MethodUsed::Direct,
        iterations: 0,
    })
}

/// Restarted GMRES(m) from a zero initial guess, unpreconditioned.
pub fn gmres(a: &CsrMatrix, b: &DVector<f64>, tol: f64, restart: usize, max_iter: usize) -> Result<SolveOutcome> {
    let dim = a.nrows();
    let b_norm = b.norm();
    let mut x = DVector::zeros(dim);
    if b_norm == 0.0 {
        return Ok(SolveOutcome {
            solution_y: x,
            residual_rel: 0.0,
            method: MethodUsed::Iterative,
            iterations: 0,
        });
    }
    let m = restart.min(dim).max(1);
    let mut total_iters = 0;
    let mut best = (f64::INFINITY, x.clone());

    while total_iters < max_iter {
        let r = b - a.mul_vec(&x);
        let beta = r.norm();
        let rel = beta / b_norm;
        if rel < best.0 {
            best = (rel, x.clone());
        }
        if rel <= tol {
            break;
        }
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(m + 1);
        basis.push(r / beta);
        let mut h = DMatrix::<f64>::zeros(m + 1, m);
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = DVector::<f64>::zeros(m + 1);
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            if total_iters >= max_iter {
                break;
            }
            total_iters += 1;
            let mut w = a.mul_vec(&basis[k]);
            // Modified Gram-Schmidt.
            for (j, v) in basis.iter().enumerate() {
                let hj = w.dot(v);
                h[(j, k)] = hj;
                w.axpy(-hj, v, 1.0);
            }
            let wn = w.norm();
            h[(k + 1, k)] = wn;
            for j in 0..k {
                let t = cs[j] * h[(j, k)] + sn[j] * h[(j + 1, k)];
                h[(j + 1, k)] = -sn[j] * h[(j, k)] + cs[j] * h[(j + 1, k)];
                h[(j, k)] = t;
            }
            let denom = h[(k, k)].hypot(h[(k + 1, k)]);
            if denom == 0.0 {
                return Err(Error::SingularMatrix("GMRES breakdown"));
            }
            cs[k] = h[(k, k)] / denom;
            sn[k] = h[(k + 1, k)] / denom;
            h[(k, k)] = denom;
            h[(k + 1, k)] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            if g[k + 1].abs() / b_norm <= tol * 0.5 || wn == 0.0 {
                break;
            }
            basis.push(w / wn);
        }
        // Back substitution on the k_used × k_used triangle.
        let mut coeffs = DVector::<f64>::zeros(k_used);
        for i in (0..k_used).rev() {
            let mut acc = g[i];
            for j in i + 1..k_used {
                acc -= h[(i, j)] * coeffs[j];
            }
            coeffs[i] = acc / h[(i, i)];
        }
        for (j, cj) in coeffs.iter().enumerate() {
            x.axpy(*cj, &basis[j], 1.0);
        }
    }

    let rel = relative_residual(a, &x, b);
    if rel < best.0 {
        best = (rel, x);
    }
    if !best.0.is_finite() {
        return Err(Error::SingularMatrix("GMRES produced non-finite iterates"));
    }
    if best.0 > tol {
        return Err(Error::NonConvergence {
            iterations: total_iters,
            residual: best.0,
        });
    }
    Ok(SolveOutcome {
        solution_y: best.1,
        residual_rel: best.0,
        method: MethodUsed::Iterative,
        iterations: total_iters,
    })
}

/// `(σ_max, σ_min)` of a square matrix.
pub fn singular_value_extremes(matrix: &CsrMatrix) -> Result<(f64, f64)> {
    if matrix.nrows() != matrix.ncols() {
        return Err(Error::DimensionMismatch {
            what: "square matrix",
            expected: matrix.nrows(),
            found: matrix.ncols(),
        });
    }
    if matrix.nrows() <= DENSE_CONDITION_LIMIT {
        let sv = matrix.to_dense().singular_values();
        let (smax, smin) = (sv.max(), sv.min());
        if !(smin > 0.0) {
            return Err(Error::SingularMatrix("zero singular value"));
        }
        Ok((smax, smin))
    } else {
        let lu = SparseLu::factor(matrix)?;
        let smax = norms::power_iteration_norm(matrix, CONDITION_TOL, norms::POWER_MAX_ITER);
        let inv = norms::inverse_iteration_norm(&lu, CONDITION_TOL, norms::POWER_MAX_ITER)?;
        Ok((smax, 1.0 / inv))
    }
}

/// `κ = σ_max / σ_min`.
pub fn estimate_condition_number(matrix: &CsrMatrix) -> Result<f64> {
    let (smax, smin) = singular_value_extremes(matrix)?;
    Ok(smax / smin)
}

//! Damped Newton iteration used as classical ground truth.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::QuadraticSystem;
use crate::sparse::{CsrMatrix, SparseLu};

pub const NEWTON_TOL: f64 = 1e-12;
pub const MAX_HALVINGS: usize = 30;
pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonResult {
    pub x_star: DVector<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `J(x) = F₁ + F₂(x⊗I + I⊗x)`.
pub fn jacobian(sys: &QuadraticSystem, x: &DVector<f64>) -> CsrMatrix {
    let n = sys.n();
    let mut triplets: Vec<_> = sys.f1().iter().collect();
    for (r, col, v) in sys.f2().iter() {
        let (j, k) = (col / n, col % n);
        // ∂(x_j x_k)/∂x_j = x_k and ∂/∂x_k = x_j.
        triplets.push((r, j, v * x[k]));
        triplets.push((r, k, v * x[j]));
    }
    CsrMatrix::from_triplets(n, n, triplets).expect("jacobian entries are in bounds")
}

pub fn newton_solve(sys: &QuadraticSystem, x0: &DVector<f64>, max_iter: usize) -> Result<NewtonResult> {
    if x0.len() != sys.n() {
        return Err(Error::DimensionMismatch {
            what: "newton seed",
            expected: sys.n(),
            found: x0.len(),
        });
    }
    let target = NEWTON_TOL * sys.f0().norm().max(1.0);
    let mut x = x0.clone();
    let mut g = sys.residual(&x);
    let mut res = g.norm();
    for iteration in 0..max_iter {
        if res <= target {
            return Ok(NewtonResult {
                x_star: x,
                residual: res,
                iterations: iteration,
                converged: true,
            });
        }
        let lu = SparseLu::factor(&jacobian(sys, &x)).map_err(|_| Error::SingularJacobian(iteration))?;
        let step = lu.solve(&(-&g)).map_err(|_| Error::SingularJacobian(iteration))?;
        let mut t = 1.0;
        let mut candidate = &x + &step;
        let mut cand_g = sys.residual(&candidate);
        let mut halvings = 0;
        while cand_g.norm() > res && halvings < MAX_HALVINGS {
            t *= 0.5;
            halvings += 1;
            candidate = &x + &step * t;
            cand_g = sys.residual(&candidate);
        }
        x = candidate;
        g = cand_g;
        res = g.norm();
        if !res.is_finite() {
            return Err(Error::NewtonNonConvergence {
                iterations: iteration + 1,
                residual: res,
            });
        }
    }
    if res <= target {
        return Ok(NewtonResult {
            x_star: x,
            residual: res,
            iterations: max_iter,
            converged: true,
        });
    }
    Err(Error::NewtonNonConvergence {
        iterations: max_iter,
        residual: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{appendix_system, APPENDIX_X_STAR};
    use crate::hpm::hpm_solve;

    #[test]
    fn appendix_root_from_nu0() {
        let sys = appendix_system();
        let nu0 = hpm_solve(&sys, 0).unwrap().nus[0].clone();
        let r = newton_solve(&sys, &nu0, DEFAULT_MAX_ITER).unwrap();
        assert!(r.converged);
        assert!(r.residual <= 1e-12);
        assert!((r.x_star[0] - APPENDIX_X_STAR[0]).abs() < 5e-9);
        assert!((r.x_star[1] - APPENDIX_X_STAR[1]).abs() < 5e-9);
        assert_eq!(r.residual, sys.residual(&r.x_star).norm());
        let from_origin = newton_solve(&sys, &DVector::zeros(2), DEFAULT_MAX_ITER).unwrap();
        assert!((from_origin.x_star - &r.x_star).norm() < 1e-14);
    }

    #[test]
    fn linear_system_in_one_step() {
        let sys = QuadraticSystem::new(
            DVector::from_vec(vec![1.0, -2.0]),
            CsrMatrix::from_triplets(2, 2, vec![(0, 0, 2.0), (1, 1, 4.0), (0, 1, 1.0)]).unwrap(),
            CsrMatrix::from_triplets(2, 4, vec![]).unwrap(),
        )
        .unwrap();
        let r = newton_solve(&sys, &DVector::zeros(2), DEFAULT_MAX_ITER).unwrap();
        assert_eq!(r.iterations, 1);
        assert!((r.x_star[0] + 0.75).abs() < 1e-15 && (r.x_star[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let sys = appendix_system();
        let x = DVector::from_vec(vec![0.3, -0.2]);
        let j = jacobian(&sys, &x).to_dense();
        let h = 1e-6;
        for col in 0..2 {
            let mut e = DVector::zeros(2);
            e[col] = h;
            let fd = (sys.residual(&(&x + &e)) - sys.residual(&(&x - &e))) / (2.0 * h);
            for row in 0..2 {
                assert!((fd[row] - j[(row, col)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn no_real_root_fails() {
        // x² + 1 = 0 in one dimension: x + x² + 1 has no real root.
        let sys = QuadraticSystem::new(
            DVector::from_vec(vec![1.0]),
            CsrMatrix::identity(1),
            CsrMatrix::from_triplets(1, 1, vec![(0, 0, 1.0)]).unwrap(),
        )
        .unwrap();
        let err = newton_solve(&sys, &DVector::zeros(1), 20).unwrap_err();
        assert!(matches!(err, Error::NewtonNonConvergence { .. } | Error::SingularJacobian(_)));
    }
}

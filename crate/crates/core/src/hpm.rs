//! Sequential homotopy-perturbation recursion and its norm bounds.
//!
//! With `ν(p) = ν₀ + pν₁ + … + pᶜν_c` substituted into
//! `F₀ + F₁ν + pF₂(ν⊗ν) = 0`, matching powers of `p` gives
//!
//! ```text
//! F₁ν₀ = −F₀
//! F₁νᵢ = −F₂ Σ_{j<i} ν_j ⊗ ν_{i−1−j}      (i ≥ 1)
//! ```
//!
//! and `x̃ = Σ νᵢ` approximates a root of the quadratic system.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::{QuadraticSystem, SystemParams};
use crate::problem::MAX_ORDER;

/// Norm above which a term is treated as evidence of divergence.
pub const DIVERGENCE_THRESHOLD: f64 = 1e100;
pub const CATALAN_MAX_INDEX: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct HomotopySeries {
    pub order_c: usize,
    pub nus: Vec<DVector<f64>>,
    pub x_tilde: DVector<f64>,
}

impl HomotopySeries {
    pub fn nu_norms(&self) -> Vec<f64> {
        self.nus.iter().map(|v| v.norm()).collect()
    }
}

/// `Σ_{j=0}^{i−1} F₂(ν_j ⊗ ν_{i−1−j})`, summed in ascending `j`.
fn convolution_term(sys: &QuadraticSystem, nus: &[DVector<f64>], i: usize) -> DVector<f64> {
    (0..i).fold(DVector::zeros(sys.n()), |acc, j| {
        acc + sys.apply_f2_pair(&nus[j], &nus[i - 1 - j])
    })
}

pub fn hpm_solve(sys: &QuadraticSystem, c: usize) -> Result<HomotopySeries> {
    let mut nus: Vec<DVector<f64>> = Vec::with_capacity(c + 1);
    for i in 0..=c {
        let rhs = if i == 0 {
            -sys.f0()
        } else {
            -convolution_term(sys, &nus, i)
        };
        let nu = sys.solve_f1(&rhs)?;
        let norm = nu.norm();
        if !norm.is_finite() || norm > DIVERGENCE_THRESHOLD {
            return Err(Error::SeriesOverflow { index: i, norm });
        }
        nus.push(nu);
    }
    let x_tilde = nus
        .iter()
        .fold(DVector::zeros(sys.n()), |acc, v| acc + v);
    Ok(HomotopySeries {
        order_c: c,
        nus,
        x_tilde,
    })
}

/// Residual of the `i`-th recursion equation for a computed series.
pub fn recursion_residual(sys: &QuadraticSystem, series: &HomotopySeries, i: usize) -> f64 {
    let lhs = sys.f1().mul_vec(&series.nus[i]);
    if i == 0 {
        (lhs + sys.f0()).norm()
    } else {
        (lhs + convolution_term(sys, &series.nus, i)).norm()
    }
}

/// Truncation order: `⌈log_{1/R}(4α / (ηRε(1−R)))⌉` when `eta` is given, else
/// `⌈log_{1/R}(α / (ε(1−R)))⌉`; clamped to `[1, 64]`.
pub fn choose_order(params: &SystemParams, epsilon: f64, eta: Option<f64>) -> Result<usize> {
    let r = params.big_r;
    if r >= 1.0 {
        return Err(Error::Divergent(r));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if r <= 0.0 || params.alpha == 0.0 {
        return Ok(1);
    }
    let argument = match eta {
        Some(eta) if eta > 0.0 => 4.0 * params.alpha / (eta * r * epsilon * (1.0 - r)),
        Some(eta) => return Err(Error::Domain(format!("eta must be positive, got {eta}"))),
        None => params.alpha / (epsilon * (1.0 - r)),
    };
    let raw = (argument.ln() / (1.0 / r).ln()).ceil();
    Ok(if raw.is_nan() || raw < 1.0 {
        1
    } else if raw >= MAX_ORDER as f64 {
        MAX_ORDER
    } else {
        raw as usize
    })
}

/// Catalan number `γᵢ = C(2i, i)/(i+1)` for `i ≤ 30`.
pub fn catalan(i: usize) -> Result<u64> {
    if i > CATALAN_MAX_INDEX {
        return Err(Error::CatalanOverflow(i));
    }
    // γ_{k+1} = γ_k · 2(2k+1)/(k+2); the product is always divisible.
    let mut g: u128 = 1;
    for k in 0..i as u128 {
        g = g * 2 * (2 * k + 1) / (k + 2);
    }
    u64::try_from(g).map_err(|_| Error::CatalanOverflow(i))
}

/// `α Rⁱ`, the bound on `‖νᵢ‖`.
pub fn nu_norm_bound(params: &SystemParams, i: usize) -> f64 {
    params.alpha * params.big_r.powi(i as i32)
}

/// `α R^{c+1} / (1 − R)`, the bound on `‖x* − x̃‖`.
pub fn truncation_error_bound(params: &SystemParams, c: usize) -> Result<f64> {
    let r = params.big_r;
    if r >= 1.0 {
        return Err(Error::Divergent(r));
    }
    Ok(params.alpha * r.powi(c as i32 + 1) / (1.0 - r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{appendix_system, APPENDIX_X_TILDE};
    use crate::model::compute_params;
    use crate::sparse::CsrMatrix;
    use proptest::prelude::*;

    fn params(alpha: f64, big_r: f64) -> SystemParams {
        SystemParams {
            alpha,
            beta_param: big_r / (4.0 * alpha),
            big_r,
            inv_norm_f1: 0.5,
            norm_f1: 1.0,
            norm_f0: 1.0,
            norm_f2: 1.0,
            kappa_f1: 2.0,
            g_factor: 0.0,
            order_c: 1,
            zeta_rescale: 1.0,
        }
    }

    #[test]
    fn appendix_terms() {
        let sys = appendix_system();
        let s = hpm_solve(&sys, 2).unwrap();
        let expected = [[-0.05, 0.05], [0.00125, 0.00125], [-1.5625e-5, 1.5625e-5]];
        for (nu, want) in s.nus.iter().zip(expected) {
            assert!((nu[0] - want[0]).abs() < 1e-16 && (nu[1] - want[1]).abs() < 1e-16, "{nu}");
        }
        assert!((s.x_tilde[0] - APPENDIX_X_TILDE[0]).abs() < 1e-15);
        assert!((s.x_tilde[1] - APPENDIX_X_TILDE[1]).abs() < 1e-15);
        for i in 0..=2 {
            assert!(recursion_residual(&sys, &s, i) < 1e-15);
        }
    }

    #[test]
    fn linear_series_terminates() {
        let sys = QuadraticSystem::new(
            DVector::from_vec(vec![1.0, -2.0]),
            CsrMatrix::from_triplets(2, 2, vec![(0, 0, 2.0), (1, 1, 4.0), (0, 1, 1.0)]).unwrap(),
            CsrMatrix::from_triplets(2, 4, vec![]).unwrap(),
        )
        .unwrap();
        let s = hpm_solve(&sys, 3).unwrap();
        // F1 ν0 = −F0 → ν0 = (−0.75, 0.5).
        assert!((s.nus[0][0] + 0.75).abs() < 1e-15 && (s.nus[0][1] - 0.5).abs() < 1e-15);
        for nu in &s.nus[1..] {
            assert_eq!(nu.norm(), 0.0);
        }
    }

    #[test]
    fn divergent_series_overflows() {
        // Scalar 1 + x + 100x² = 0 has R = 400.
        let sys = QuadraticSystem::new(
            DVector::from_vec(vec![1.0]),
            CsrMatrix::identity(1),
            CsrMatrix::from_triplets(1, 1, vec![(0, 0, 100.0)]).unwrap(),
        )
        .unwrap();
        assert!(matches!(hpm_solve(&sys, 64), Err(Error::SeriesOverflow { .. })));
    }

    #[test]
    fn order_selection() {
        assert_eq!(choose_order(&params(0.5, 0.5), 1e-3, None).unwrap(), 10);
        assert_eq!(choose_order(&params(0.1414214, 0.2), 1e-6, None).unwrap(), 8);
        assert_eq!(choose_order(&params(0.5, 1e-12), 0.1, None).unwrap(), 1);
        assert_eq!(choose_order(&params(0.5, 0.0), 0.1, None).unwrap(), 1);
        assert_eq!(choose_order(&params(0.5, 0.999), 1e-12, None).unwrap(), 64);
        assert!(matches!(choose_order(&params(0.5, 1.0), 0.1, None), Err(Error::Divergent(_))));
        // With η: ⌈log_2(4·0.5 / (1·0.5·1e-3·0.5))⌉ = ⌈log_2 8000⌉ = 13.
        assert_eq!(choose_order(&params(0.5, 0.5), 1e-3, Some(1.0)).unwrap(), 13);
    }

    #[test]
    fn catalan_values() {
        assert_eq!(catalan(0).unwrap(), 1);
        assert_eq!(catalan(3).unwrap(), 5);
        assert_eq!(catalan(5).unwrap(), 42);
        assert_eq!(catalan(30).unwrap(), 3_814_986_502_092_304);
        assert!(matches!(catalan(31), Err(Error::CatalanOverflow(31))));
    }

    #[test]
    fn catalan_recurrence() {
        for i in 1..=15 {
            let sum: u64 = (0..i).map(|j| catalan(j).unwrap() * catalan(i - 1 - j).unwrap()).sum();
            assert_eq!(catalan(i).unwrap(), sum, "i = {i}");
        }
    }

    #[test]
    fn norm_bounds() {
        let p = params(0.1414214, 0.2);
        assert!((nu_norm_bound(&p, 0) - 0.1414214).abs() < 1e-15);
        assert!((nu_norm_bound(&p, 2) - 5.656856e-3).abs() < 1e-9);
        assert_eq!(nu_norm_bound(&params(0.3, 0.0), 1), 0.0);
        assert!((truncation_error_bound(&p, 2).unwrap() - 1.414214e-3).abs() < 1e-9);
        assert_eq!(truncation_error_bound(&params(0.3, 0.0), 4).unwrap(), 0.0);
        assert!((truncation_error_bound(&params(1.0, 0.5), 0).unwrap() - 1.0).abs() < 1e-15);
        assert!(truncation_error_bound(&params(1.0, 1.5), 0).is_err());
    }

    #[test]
    fn appendix_terms_respect_catalan_chain() {
        let sys = appendix_system();
        let p = compute_params(&sys, 6).unwrap();
        let s = hpm_solve(&sys, 6).unwrap();
        for (i, nu) in s.nus.iter().enumerate() {
            let catalan_bound = catalan(i).unwrap() as f64
                * p.beta_param.powi(i as i32)
                * p.alpha.powi(i as i32 + 1);
            assert!(nu.norm() <= catalan_bound * (1.0 + 1e-12));
            assert!(catalan_bound <= nu_norm_bound(&p, i) * (1.0 + 1e-12));
        }
    }

    proptest! {
        #[test]
        fn x_tilde_is_sum_of_terms(f0a in -0.3f64..0.3, f0b in -0.3f64..0.3, q in -0.5f64..0.5, c in 0usize..8) {
            let sys = QuadraticSystem::new(
                DVector::from_vec(vec![f0a, f0b]),
                CsrMatrix::from_triplets(2, 2, vec![(0, 0, 3.0), (1, 1, 2.5), (1, 0, 0.4)]).unwrap(),
                CsrMatrix::from_triplets(2, 4, vec![(0, 1, q), (1, 3, -q), (1, 0, 0.2)]).unwrap(),
            ).unwrap();
            let s = hpm_solve(&sys, c).unwrap();
            prop_assert_eq!(s.nus.len(), c + 1);
            let sum = s.nus.iter().fold(DVector::zeros(2), |a, v| a + v);
            prop_assert!((sum - &s.x_tilde).norm() <= 1e-15 * (1.0 + s.x_tilde.norm()));
            let scale = sys.f0().norm().max(1e-300);
            prop_assert!(recursion_residual(&sys, &s, 0) <= 1e-10 * scale);
            for i in 1..=c {
                let rel = s.nus[i].norm().max(1e-300);
                prop_assert!(recursion_residual(&sys, &s, i) <= 1e-10 * rel.max(1e-18));
            }
        }
    }
}

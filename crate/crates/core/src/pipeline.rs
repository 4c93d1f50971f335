//! End-to-end run: parameters, order selection, embedding, solve, extraction
//! and the classical oracle.

use nalgebra::DVector;

use crate::analysis::{self, BoundsReport, Measurements};
use crate::embedding::{build_embedding, extract_block, EmbeddedSystem, TermIndex};
use crate::error::{Error, Result};
use crate::hpm::{self, HomotopySeries};
use crate::model::{compute_params, QuadraticSystem, SystemParams};
use crate::newton::{self, NewtonResult};
use crate::solver::{self, SolveMethod, SolveOutcome};

/// Relative residual demanded of the linear solver.
pub const SOLVER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderSource {
    /// Given by the caller.
    Override,
    /// From the precision rule that uses `η = ‖x*‖/R`.
    Precision,
    /// From the truncation-error rule alone (no oracle root available).
    Truncation,
}

impl OrderSource {
    pub fn label(self) -> &'static str {
        match self {
            OrderSource::Override => "override",
            OrderSource::Precision => "precision_rule",
            OrderSource::Truncation => "truncation_rule",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub order: Option<usize>,
    pub epsilon: f64,
    pub method: SolveMethod,
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub params: SystemParams,
    pub order_c: usize,
    pub order_source: OrderSource,
    pub embedded: EmbeddedSystem,
    pub outcome: SolveOutcome,
    pub x_tilde: DVector<f64>,
    /// `‖F₀ + F₁x̃ + F₂x̃⊗²‖`.
    pub residual_norm: f64,
    pub p_empirical: f64,
    pub newton: std::result::Result<NewtonResult, Error>,
    /// Sequential recursion at the same order, if it stayed finite.
    pub series: Option<HomotopySeries>,
}

impl PipelineRun {
    pub fn x_star(&self) -> Option<&DVector<f64>> {
        self.newton.as_ref().ok().map(|r| &r.x_star)
    }

    /// `‖x* − x̃‖` when the oracle converged.
    pub fn error_empirical(&self) -> Option<f64> {
        self.x_star().map(|x| (x - &self.x_tilde).norm())
    }

    /// Singular-value extremes of `A` and the full bounds report.
    pub fn bounds_report(&self, sys: &QuadraticSystem, epsilon: f64) -> Result<BoundsReport> {
        let (sigma_max_a, sigma_min_a) = solver::singular_value_extremes(&self.embedded.matrix_a)?;
        analysis::bounds_report(
            sys,
            &self.params,
            self.order_c,
            epsilon,
            &Measurements {
                solution_y: &self.outcome.solution_y,
                layout: &self.embedded.layout,
                sigma_max_a,
                sigma_min_a,
                x_star: self.x_star(),
            },
        )
    }
}

fn oracle(sys: &QuadraticSystem) -> std::result::Result<NewtonResult, Error> {
    let nu0 = sys.solve_f1(&-sys.f0())?;
    newton::newton_solve(sys, &nu0, newton::DEFAULT_MAX_ITER)
}

/// Runs the whole chain. Without an order override, `R ≥ 1` is fatal.
pub fn run_pipeline(sys: &QuadraticSystem, config: &PipelineConfig) -> Result<PipelineRun> {
    let base = compute_params(sys, 1)?;
    let newton = oracle(sys);
    let (order_c, order_source) = match config.order {
        Some(c) => (crate::problem::validate_order(c)?, OrderSource::Override),
        None => {
            let eta = match &newton {
                Ok(r) if base.big_r > 0.0 && r.x_star.norm() > 0.0 => Some(r.x_star.norm() / base.big_r),
                _ => None,
            };
            let c = hpm::choose_order(&base, config.epsilon, eta)?;
            let source = if eta.is_some() {
                OrderSource::Precision
            } else {
                OrderSource::Truncation
            };
            (c, source)
        }
    };
    let params = base.with_order(order_c);
    let embedded = build_embedding(sys, order_c)?;
    let outcome = solver::solve(&embedded, config.method, SOLVER_TOL)?;
    let x_tilde = extract_block(&outcome.solution_y, &embedded.layout, &TermIndex::y0())?;
    let residual_norm = sys.residual(&x_tilde).norm();
    let p_empirical = analysis::empirical_success_probability(&outcome.solution_y, &embedded.layout)?;
    Ok(PipelineRun {
        params,
        order_c,
        order_source,
        embedded,
        outcome,
        x_tilde,
        residual_norm,
        p_empirical,
        newton,
        series: hpm::hpm_solve(sys, order_c).ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{appendix_system, APPENDIX_ERROR, APPENDIX_X_TILDE};

    #[test]
    fn appendix_pipeline() {
        let sys = appendix_system();
        let cfg = PipelineConfig {
            order: Some(2),
            epsilon: 1e-3,
            method: SolveMethod::Auto,
        };
        let run = run_pipeline(&sys, &cfg).unwrap();
        assert_eq!(run.embedded.layout.total_dim_n, 42);
        for (got, want) in run.x_tilde.iter().zip(APPENDIX_X_TILDE) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((run.error_empirical().unwrap() - APPENDIX_ERROR).abs() < 1e-9);
        let report = run.bounds_report(&sys, 1e-3).unwrap();
        assert!(report.kappa_a_bound.is_none());
        assert!(report.p_empirical >= report.p_lower_bound.unwrap());
        assert!(report.norm_a_empirical <= report.norm_a_bound);
    }

    #[test]
    fn automatic_order_uses_oracle() {
        let sys = appendix_system();
        let cfg = PipelineConfig {
            order: None,
            epsilon: 1e-3,
            method: SolveMethod::Auto,
        };
        let run = run_pipeline(&sys, &cfg).unwrap();
        assert_eq!(run.order_source, OrderSource::Precision);
        let eta = run.x_star().unwrap().norm() / run.params.big_r;
        assert_eq!(run.order_c, hpm::choose_order(&run.params, 1e-3, Some(eta)).unwrap());
    }

    #[test]
    fn divergent_without_override_is_fatal() {
        let sys = QuadraticSystem::new(
            DVector::from_vec(vec![1.0]),
            crate::sparse::CsrMatrix::identity(1),
            crate::sparse::CsrMatrix::from_triplets(1, 1, vec![(0, 0, 1.0)]).unwrap(),
        )
        .unwrap();
        let mut cfg = PipelineConfig {
            order: None,
            epsilon: 1e-3,
            method: SolveMethod::Direct,
        };
        assert!(matches!(run_pipeline(&sys, &cfg), Err(Error::Divergent(_))));
        cfg.order = Some(3);
        let run = run_pipeline(&sys, &cfg).unwrap();
        assert!(run.newton.is_err());
        assert_eq!(run.order_source, OrderSource::Override);
    }
}

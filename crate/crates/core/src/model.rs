//! The quadratic system `F₀ + F₁x + F₂(x⊗x) = 0`, its derived parameters, and
//! the hypothesis flags that decide which guarantees apply to a run.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::norms;
use crate::sparse::{kron_vec, CsrMatrix, SparseLu};

/// Quadratic system with a cached factorization of `F₁`.
///
/// `F₂` is `n × n²`; column `j·n + k` multiplies `x_j x_k`.
#[derive(Clone)]
pub struct QuadraticSystem {
    n: usize,
    f0: DVector<f64>,
    f1: CsrMatrix,
    f2: CsrMatrix,
    s: usize,
    f1_lu: Arc<SparseLu>,
}

impl fmt::Debug for QuadraticSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuadraticSystem")
            .field("n", &self.n)
            .field("s", &self.s)
            .field("f0", &self.f0.as_slice())
            .field("f1_nnz", &self.f1.nnz())
            .field("f2_nnz", &self.f2.nnz())
            .finish()
    }
}

impl QuadraticSystem {
    /// Validates shapes and finiteness, measures `s`, and factorizes `F₁`.
    pub fn new(f0: DVector<f64>, f1: CsrMatrix, f2: CsrMatrix) -> Result<Self> {
        let n = f0.len();
        if n == 0 {
            return Err(Error::DimensionMismatch {
                what: "state dimension",
                expected: 1,
                found: 0,
            });
        }
        for (what, got, want) in [
            ("F1 rows", f1.nrows(), n),
            ("F1 cols", f1.ncols(), n),
            ("F2 rows", f2.nrows(), n),
            ("F2 cols", f2.ncols(), n * n),
        ] {
            if got != want {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: want,
                    found: got,
                });
            }
        }
        if !f0.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("F0"));
        }
        if !f1.all_finite() {
            return Err(Error::NonFinite("F1"));
        }
        if !f2.all_finite() {
            return Err(Error::NonFinite("F2"));
        }
        let s = [
            f1.max_row_nnz(),
            f1.max_col_nnz(),
            f2.max_row_nnz(),
            f2.max_col_nnz(),
        ]
        .into_iter()
        .max()
        .unwrap_or(0)
        .max(1);
        let f1_lu = SparseLu::factor(&f1).map_err(|_| Error::SingularMatrix("F1"))?;
        Ok(Self {
            n,
            f0,
            f1,
            f2,
            s,
            f1_lu: Arc::new(f1_lu),
        })
    }

    /// Like [`QuadraticSystem::new`] but also checks a user-declared sparsity.
    pub fn with_declared_sparsity(
        f0: DVector<f64>,
        f1: CsrMatrix,
        f2: CsrMatrix,
        declared: usize,
    ) -> Result<Self> {
        let sys = Self::new(f0, f1, f2)?;
        if sys.s != declared {
            return Err(Error::SparsityMismatch {
                declared,
                measured: sys.s,
            });
        }
        Ok(sys)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn f0(&self) -> &DVector<f64> {
        &self.f0
    }

    pub fn f1(&self) -> &CsrMatrix {
        &self.f1
    }

    pub fn f2(&self) -> &CsrMatrix {
        &self.f2
    }

    /// Maximum nonzeros in any row or column of `F₁` and `F₂`.
    pub fn sparsity(&self) -> usize {
        self.s
    }

    pub fn f1_lu(&self) -> &SparseLu {
        &self.f1_lu
    }

    /// Solves `F₁ x = rhs` with the cached factorization.
    pub fn solve_f1(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        self.f1_lu.solve(rhs)
    }

    /// `F₂ (u ⊗ v)` computed from the sparse structure of `F₂`, never forming `u ⊗ v`.
    pub fn apply_f2_pair(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let mut out = DVector::zeros(n);
        for (r, col, val) in self.f2.iter() {
            out[r] += val * u[col / n] * v[col % n];
        }
        out
    }

    /// `F₀ + F₁x + F₂(x⊗x)`.
    pub fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.f0 + self.f1.mul_vec(x) + self.apply_f2_pair(x, x)
    }

    /// Dense `F₂ (x⊗x)` through the explicit Kronecker vector; test cross-check only.
    pub fn apply_f2_dense(&self, x: &DVector<f64>) -> DVector<f64> {
        self.f2.mul_vec(&kron_vec(x, x))
    }
}

/// Scalars derived from the system norms. `g_factor` depends on the order `c`
/// it was computed for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub alpha: f64,
    pub beta_param: f64,
    pub big_r: f64,
    pub inv_norm_f1: f64,
    pub norm_f1: f64,
    pub norm_f0: f64,
    pub norm_f2: f64,
    pub kappa_f1: f64,
    pub g_factor: f64,
    pub order_c: usize,
    pub zeta_rescale: f64,
}

impl SystemParams {
    /// `G = ‖F₁⁻¹‖(1 + (c+1)‖F₂‖)` for an arbitrary order.
    pub fn g_for(&self, c: usize) -> f64 {
        self.inv_norm_f1 * (1.0 + (c as f64 + 1.0) * self.norm_f2)
    }

    /// `(‖F₁⁻¹‖ / (1 − ‖F₁⁻¹‖)) (c+1) ‖F₂‖`; infinite when `‖F₁⁻¹‖ ≥ 1`.
    pub fn lemma2_zeta(&self, c: usize) -> f64 {
        if self.inv_norm_f1 >= 1.0 {
            return f64::INFINITY;
        }
        self.inv_norm_f1 / (1.0 - self.inv_norm_f1) * (c as f64 + 1.0) * self.norm_f2
    }

    pub fn with_order(mut self, c: usize) -> Self {
        self.order_c = c;
        self.g_factor = self.g_for(c);
        self
    }
}

pub fn compute_params(sys: &QuadraticSystem, c: usize) -> Result<SystemParams> {
    let norm_f0 = sys.f0().norm();
    let norm_f1 = norms::spectral_norm(sys.f1());
    let norm_f2 = norms::spectral_norm(sys.f2());
    let inv_norm_f1 = norms::inverse_norm(sys.f1(), sys.f1_lu())?;
    let alpha = inv_norm_f1 * norm_f0;
    let beta_param = inv_norm_f1 * norm_f2;
    let params = SystemParams {
        alpha,
        beta_param,
        big_r: 4.0 * alpha * beta_param,
        inv_norm_f1,
        norm_f1,
        norm_f0,
        norm_f2,
        kappa_f1: norm_f1 * inv_norm_f1,
        g_factor: 0.0,
        order_c: c,
        zeta_rescale: 1.0,
    };
    Ok(params.with_order(c))
}

/// Which of the analytic guarantees hold for a parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HypothesisReport {
    pub r_lt_one: bool,
    pub r_lt_sqrt2_over_2: bool,
    pub inv_norm_lt_one: bool,
    pub g_lt_one: bool,
    pub r_geq_norm_f0: bool,
    pub lemma2_zeta_lt_one: bool,
    pub epsilon_lt_tenth: bool,
}

impl HypothesisReport {
    /// Every hypothesis behind the complexity estimate holds.
    pub fn complexity_applies(&self) -> bool {
        self.epsilon_lt_tenth
            && self.inv_norm_lt_one
            && self.g_lt_one
            && self.r_lt_sqrt2_over_2
    }

    pub fn condition_bound_applies(&self) -> bool {
        self.inv_norm_lt_one && self.lemma2_zeta_lt_one
    }

    pub fn success_bound_applies(&self) -> bool {
        self.inv_norm_lt_one && self.r_lt_sqrt2_over_2
    }

    /// `(name, flag)` pairs in report order.
    pub fn entries(&self) -> [(&'static str, bool); 7] {
        [
            ("r_lt_one", self.r_lt_one),
            ("r_lt_sqrt2_over_2", self.r_lt_sqrt2_over_2),
            ("inv_norm_lt_one", self.inv_norm_lt_one),
            ("g_lt_one", self.g_lt_one),
            ("r_geq_norm_f0", self.r_geq_norm_f0),
            ("lemma2_zeta_lt_one", self.lemma2_zeta_lt_one),
            ("epsilon_lt_tenth", self.epsilon_lt_tenth),
        ]
    }
}

pub fn check_hypotheses(params: &SystemParams, c: usize, epsilon: f64) -> HypothesisReport {
    let r = params.big_r;
    HypothesisReport {
        r_lt_one: r < 1.0,
        r_lt_sqrt2_over_2: r < std::f64::consts::FRAC_1_SQRT_2,
        inv_norm_lt_one: params.inv_norm_f1 < 1.0,
        g_lt_one: params.g_for(c) < 1.0,
        r_geq_norm_f0: r >= params.norm_f0,
        lemma2_zeta_lt_one: params.lemma2_zeta(c) < 1.0,
        epsilon_lt_tenth: epsilon < 0.1,
    }
}

/// Rewrites the system in `u = ζx` so that `R ≥ ‖F₀'‖`, leaving `R` unchanged:
/// `F₀' = ζF₀`, `F₁' = F₁`, `F₂' = F₂/ζ`. Returns the new system and `ζ`.
pub fn rescale_system(sys: &QuadraticSystem) -> Result<(QuadraticSystem, f64)> {
    let params = compute_params(sys, 0)?;
    let norm_f0 = params.norm_f0;
    if norm_f0 == 0.0 || params.big_r >= norm_f0 {
        return Ok((sys.clone(), 1.0));
    }
    if params.big_r == 0.0 {
        return Err(Error::InfeasibleRescale {
            big_r: params.big_r,
            norm_f0,
        });
    }
    let zeta = params.big_r / norm_f0;
    let rescaled = QuadraticSystem {
        n: sys.n,
        f0: sys.f0() * zeta,
        f1: sys.f1().clone(),
        f2: sys.f2().scale(1.0 / zeta),
        s: sys.s,
        f1_lu: Arc::clone(&sys.f1_lu),
    };
    Ok((rescaled, zeta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::appendix_system;
    use nalgebra::dmatrix;

    #[test]
    fn appendix_params() {
        let sys = appendix_system();
        assert_eq!(sys.sparsity(), 2);
        let p = compute_params(&sys, 2).unwrap();
        // F1 is symmetric with eigenvalues {2, 4}.
        assert!((p.inv_norm_f1 - 0.5).abs() < 1e-12);
        assert!((p.norm_f1 - 4.0).abs() < 1e-12);
        assert!((p.kappa_f1 - 2.0).abs() < 1e-12);
        // ‖F0‖ = 0.2√2, ‖F2‖ = √0.5.
        assert!((p.norm_f0 - 0.2 * 2f64.sqrt()).abs() < 1e-14);
        assert!((p.norm_f2 - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((p.alpha - 0.1414214).abs() < 1e-7);
        assert!((p.beta_param - 0.3535534).abs() < 1e-7);
        assert!((p.big_r - 0.2).abs() < 1e-12);
        assert_eq!(p.big_r, 4.0 * p.alpha * p.beta_param);
        assert!((p.g_factor - 0.5 * (1.0 + 3.0 * 0.5f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn appendix_hypotheses() {
        let sys = appendix_system();
        let p = compute_params(&sys, 2).unwrap();
        let h = check_hypotheses(&p, 2, 1e-3);
        assert!(h.r_lt_one && h.r_lt_sqrt2_over_2 && h.inv_norm_lt_one);
        assert!(!h.g_lt_one);
        assert!(!h.lemma2_zeta_lt_one);
        // R = 0.2 < ‖F0‖ ≈ 0.283: the worked example is used without rescaling.
        assert!(!h.r_geq_norm_f0);
        assert!(!h.complexity_applies());
        assert_eq!(h, check_hypotheses(&p, 2, 1e-3));
    }

    fn linear(diag: f64, f0: Vec<f64>) -> QuadraticSystem {
        let n = f0.len();
        QuadraticSystem::new(
            DVector::from_vec(f0),
            CsrMatrix::identity(n).scale(diag),
            CsrMatrix::from_triplets(n, n * n, vec![]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_quadratic_term() {
        let p = compute_params(&linear(1.0, vec![0.3, -1.2, 4.0]), 3).unwrap();
        assert_eq!(p.beta_param, 0.0);
        assert_eq!(p.big_r, 0.0);
    }

    #[test]
    fn linear_system_all_flags() {
        let sys = linear(2.0, vec![0.0, 0.0]);
        for c in [1, 5, 30] {
            let p = compute_params(&sys, c).unwrap();
            assert!((p.g_factor - 0.5).abs() < 1e-15);
            let h = check_hypotheses(&p, c, 1e-3);
            assert!(h.entries().iter().all(|(_, f)| *f), "{h:?}");
        }
    }

    #[test]
    fn construction_errors() {
        let f2 = CsrMatrix::from_triplets(2, 4, vec![]).unwrap();
        let singular = CsrMatrix::from_dense(&dmatrix![1.0, 2.0; 2.0, 4.0]);
        assert!(matches!(
            QuadraticSystem::new(DVector::from_vec(vec![1.0, 1.0]), singular, f2.clone()),
            Err(Error::SingularMatrix(_))
        ));
        assert!(matches!(
            QuadraticSystem::new(
                DVector::from_vec(vec![f64::INFINITY, 1.0]),
                CsrMatrix::identity(2),
                f2.clone()
            ),
            Err(Error::NonFinite("F0"))
        ));
        assert!(matches!(
            QuadraticSystem::new(
                DVector::from_vec(vec![1.0, 1.0, 1.0]),
                CsrMatrix::identity(3),
                f2.clone()
            ),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            QuadraticSystem::with_declared_sparsity(
                DVector::from_vec(vec![1.0, 1.0]),
                CsrMatrix::identity(2),
                f2,
                3
            ),
            Err(Error::SparsityMismatch { declared: 3, measured: 1 })
        ));
    }

    fn diagonal_quadratic(f0_scale: f64, f2_scale: f64) -> QuadraticSystem {
        // F1 = I, F2 with a single entry per row: ‖F2‖ = f2_scale.
        QuadraticSystem::new(
            DVector::from_vec(vec![f0_scale, 0.0]),
            CsrMatrix::identity(2),
            CsrMatrix::from_triplets(2, 4, vec![(0, 0, f2_scale), (1, 3, f2_scale)]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn rescale_to_meet_r_bound() {
        // α = 1, β = 0.125, R = 0.5, ‖F0‖ = 1.
        let sys = diagonal_quadratic(1.0, 0.125);
        let before = compute_params(&sys, 1).unwrap();
        assert!((before.big_r - 0.5).abs() < 1e-15);
        let (scaled, zeta) = rescale_system(&sys).unwrap();
        assert!((zeta - 0.5).abs() < 1e-15);
        let after = compute_params(&scaled, 1).unwrap();
        assert!((after.norm_f0 - 0.5).abs() < 1e-15);
        assert!((after.big_r - before.big_r).abs() < 1e-14);
        assert!(after.big_r >= after.norm_f0 - 1e-15);
    }

    #[test]
    fn rescale_identity_cases() {
        let sys = diagonal_quadratic(0.1, 2.0);
        let (_, zeta) = rescale_system(&sys).unwrap();
        assert_eq!(zeta, 1.0);
        let (_, zeta) = rescale_system(&diagonal_quadratic(0.0, 2.0)).unwrap();
        assert_eq!(zeta, 1.0);
        assert!(matches!(
            rescale_system(&linear(1.0, vec![1.0, 0.0])),
            Err(Error::InfeasibleRescale { .. })
        ));
    }

    #[test]
    fn sparse_pair_application_matches_dense() {
        let sys = appendix_system();
        let x = DVector::from_vec(vec![0.3, -0.7]);
        let a = sys.apply_f2_pair(&x, &x);
        let b = sys.apply_f2_dense(&x);
        assert!((a - b).norm() < 1e-15);
    }
}

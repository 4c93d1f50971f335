//! Bound evaluators for the embedding (condition number, truncation error,
//! success probability, solver precision, complexity) and their empirical
//! counterparts.
//!
//! A bound is only reported where its hypotheses hold; otherwise the report
//! carries `None` and the hypothesis flags say why.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;

use nalgebra::DVector;

use crate::embedding::{EmbeddingLayout, TermIndex};
use crate::error::{Error, Result};
use crate::hpm;
use crate::model::{HypothesisReport, QuadraticSystem, SystemParams};
use crate::sparse::{push_identity_block, push_kron_block, CsrMatrix};

/// Constant used for the solver precision when `(η')²(1−2R²) ≥ 1`; any value
/// below `√5/20` works.
pub const QLSS_FALLBACK_C: f64 = 0.1;
/// Exponent standing in for the unspecified `poly(log …)` factors.
pub const POLYLOG_EXPONENT: i32 = 3;
/// Success-probability constant valid for `ε < 0.1`.
pub const SUCCESS_CONSTANT: f64 = 0.18;

/// `‖M⁻¹‖(1 − ‖M⁻¹‖^{i+1}) / (1 − ‖M⁻¹‖)`, the bound on `‖P⁻¹‖` for the
/// bidiagonal chain built by [`chain_matrix`].
pub fn lemma1_bound(inv_norm_m: f64, i: usize) -> Result<f64> {
    if !(inv_norm_m > 0.0 && inv_norm_m < 1.0) {
        return Err(Error::Domain(format!(
            "chain inverse bound needs 0 < ‖M⁻¹‖ < 1, got {inv_norm_m}"
        )));
    }
    Ok(inv_norm_m * (1.0 - inv_norm_m.powi(i as i32 + 1)) / (1.0 - inv_norm_m))
}

/// The block bidiagonal matrix with diagonal blocks `I^{⊗j} ⊗ M ⊗ I^{⊗i−j}`
/// and identity superdiagonal blocks, `j = 0…i`.
pub fn chain_matrix(m: &CsrMatrix, i: usize) -> CsrMatrix {
    let n = m.nrows();
    let block = n.pow(i as u32 + 1);
    let dim = block * (i + 1);
    let mut t = Vec::new();
    for j in 0..=i {
        let off = j * block;
        push_kron_block(&mut t, m, n.pow(j as u32), n.pow((i - j) as u32), off, off);
        if j < i {
            push_identity_block(&mut t, block, off, off + block);
        }
    }
    CsrMatrix::from_triplets(dim, dim, t).expect("chain blocks are in bounds")
}

/// `(κ_{F₁} + 1) / (1 − ‖F₁⁻¹‖(1 + (c+1)‖F₂‖))`.
pub fn lemma2_kappa_bound(params: &SystemParams, c: usize) -> Result<f64> {
    if params.inv_norm_f1 >= 1.0 {
        return Err(Error::HypothesisViolated(format!(
            "‖F1⁻¹‖ = {} is not < 1",
            params.inv_norm_f1
        )));
    }
    let zeta = params.lemma2_zeta(c);
    if zeta >= 1.0 {
        return Err(Error::HypothesisViolated(format!(
            "(‖F1⁻¹‖/(1−‖F1⁻¹‖))(c+1)‖F2‖ = {zeta} is not < 1"
        )));
    }
    Ok((params.kappa_f1 + 1.0) / (1.0 - params.g_for(c)))
}

/// `‖F₁‖ + 1 + (c+1)‖F₂‖`, the bound on `‖A‖`.
pub fn embedded_norm_bound(params: &SystemParams, c: usize) -> f64 {
    params.norm_f1 + 1.0 + (c as f64 + 1.0) * params.norm_f2
}

/// `(η')²(1−2R²) / ((η')²(1−2R²) + 4)`.
pub fn lemma4_success_bound(eta_prime: f64, big_r: f64) -> Result<f64> {
    if big_r >= FRAC_1_SQRT_2 {
        return Err(Error::HypothesisViolated(format!("R = {big_r} is not < √2/2")));
    }
    if eta_prime.is_infinite() {
        return Ok(1.0);
    }
    let q = eta_prime * eta_prime * (1.0 - 2.0 * big_r * big_r);
    Ok(q / (q + 4.0))
}

/// `‖y₀‖² / ‖y‖²`.
pub fn empirical_success_probability(y: &DVector<f64>, layout: &EmbeddingLayout) -> Result<f64> {
    let total = y.norm_squared();
    if total == 0.0 {
        return Err(Error::ZeroVector("solution vector"));
    }
    let head = crate::embedding::extract_block(y, layout, &TermIndex::y0())?;
    Ok((head.norm_squared() / total).clamp(0.0, 1.0))
}

/// Precision demanded of the linear solver: `η'√(5(1−2R²)) ε / 30`, or
/// `C·ε` when `(η')²(1−2R²) ≥ 1`.
pub fn qlss_delta(eta_prime: f64, big_r: f64, epsilon: f64) -> Result<f64> {
    if big_r >= FRAC_1_SQRT_2 {
        return Err(Error::HypothesisViolated(format!("R = {big_r} is not < √2/2")));
    }
    let shrink = 1.0 - 2.0 * big_r * big_r;
    if eta_prime * eta_prime * shrink >= 1.0 {
        Ok(QLSS_FALLBACK_C * epsilon)
    } else {
        Ok(eta_prime * (5.0 * shrink).sqrt() * epsilon / 30.0)
    }
}

/// Order-of-magnitude cost figures with every suppressed constant set to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityEstimate {
    pub query: f64,
    pub gate_factor: f64,
    pub repetitions: f64,
    /// The formula has no finite value (`‖F₂‖ = 0`, `G ≥ 1`, `R ≥ √2/2`, or `η ≤ 0`).
    pub unbounded: bool,
    /// The 0.18 success constant assumes `ε < 0.1`.
    pub epsilon_out_of_range: bool,
}

pub fn complexity_estimate(
    params: &SystemParams,
    sys: &QuadraticSystem,
    c: usize,
    epsilon: f64,
    eta: f64,
) -> ComplexityEstimate {
    let g = params.g_for(c);
    let shrink = 1.0 - 2.0 * params.big_r * params.big_r;
    let epsilon_out_of_range = epsilon >= 0.1;
    let repetitions = if eta > 0.0 && eta.is_finite() && shrink > 0.0 {
        (1.0 / (SUCCESS_CONSTANT * eta * eta * shrink).sqrt()).ceil()
    } else {
        f64::INFINITY
    };
    let unbounded = params.norm_f2 == 0.0
        || g >= 1.0
        || shrink <= 0.0
        || !(eta > 0.0 && eta.is_finite())
        || !(epsilon > 0.0);
    if unbounded {
        return ComplexityEstimate {
            query: f64::INFINITY,
            gate_factor: f64::INFINITY,
            repetitions,
            unbounded,
            epsilon_out_of_range,
        };
    }
    let argument = params.norm_f1 / (epsilon * eta * (1.0 - g) * shrink * params.norm_f2);
    let polylog = |x: f64| x.log2().max(1.0).powi(POLYLOG_EXPONENT);
    let query = params.kappa_f1 * sys.sparsity() as f64 * polylog(argument)
        / (eta * (1.0 - g) * shrink.sqrt());
    ComplexityEstimate {
        query,
        gate_factor: polylog(sys.n() as f64 * argument),
        repetitions,
        unbounded: false,
        epsilon_out_of_range,
    }
}

/// `‖ψ/‖ψ‖ − φ/‖φ‖‖`; callers compare it with `2‖ψ−φ‖/alpha_lower`.
pub fn vector_lemma_ratio_check(psi: &DVector<f64>, phi: &DVector<f64>, alpha_lower: f64) -> Result<f64> {
    if psi.len() != phi.len() {
        return Err(Error::DimensionMismatch {
            what: "vector pair",
            expected: psi.len(),
            found: phi.len(),
        });
    }
    let (pn, qn) = (psi.norm(), phi.norm());
    if pn == 0.0 || qn == 0.0 {
        return Err(Error::ZeroVector("normalization"));
    }
    if !(alpha_lower > 0.0) || pn < alpha_lower {
        return Err(Error::Precondition(format!(
            "need ‖ψ‖ = {pn} ≥ alpha = {alpha_lower} > 0"
        )));
    }
    Ok((psi / pn - phi / qn).norm())
}

/// `weight·[head; 0] + √(1−weight²)·[0; tail]` with unit `head` and `tail`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBlockState {
    pub weight: f64,
    pub head: DVector<f64>,
    pub tail: DVector<f64>,
}

impl TwoBlockState {
    pub fn new(weight: f64, head: DVector<f64>, tail: DVector<f64>) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::Precondition(format!("weight {weight} outside [0, 1]")));
        }
        let (hn, tn) = (head.norm(), tail.norm());
        if hn == 0.0 || tn == 0.0 {
            return Err(Error::ZeroVector("block"));
        }
        Ok(Self {
            weight,
            head: head / hn,
            tail: tail / tn,
        })
    }

    pub fn to_vector(&self) -> DVector<f64> {
        let rest = (1.0 - self.weight * self.weight).max(0.0).sqrt();
        let mut v = DVector::zeros(self.head.len() + self.tail.len());
        v.rows_mut(0, self.head.len()).copy_from(&(&self.head * self.weight));
        v.rows_mut(self.head.len(), self.tail.len()).copy_from(&(&self.tail * rest));
        v
    }
}

/// `2δ/(α−δ)`, or `None` when `δ` is within `1e-12·α` of `α` and the bound is vacuous.
pub fn block_projection_bound(alpha: f64, delta: f64) -> Option<f64> {
    let gap = alpha - delta;
    (gap > 1e-12 * alpha).then(|| 2.0 * delta / gap)
}

/// `‖ψ₀ − φ₀‖` for the head blocks; callers compare it with [`block_projection_bound`].
pub fn block_projection_check(psi: &TwoBlockState, phi: &TwoBlockState, alpha: f64, delta: f64) -> Result<f64> {
    if psi.head.len() != phi.head.len() || psi.tail.len() != phi.tail.len() {
        return Err(Error::Precondition("block shapes differ".into()));
    }
    if !(delta < alpha) || alpha > psi.weight + 1e-15 {
        return Err(Error::Precondition(format!(
            "need δ = {delta} < α = {alpha} ≤ weight = {}",
            psi.weight
        )));
    }
    let distance = (psi.to_vector() - phi.to_vector()).norm();
    if distance > delta {
        return Err(Error::Precondition(format!(
            "‖ψ − φ‖ = {distance} exceeds δ = {delta}"
        )));
    }
    Ok((&psi.head - &phi.head).norm())
}

/// Every bound next to its measured counterpart.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub order_c: usize,
    pub epsilon: f64,
    pub lemma1_bound: Option<f64>,
    pub kappa_a_bound: Option<f64>,
    pub kappa_a_empirical: f64,
    pub norm_a_bound: f64,
    pub norm_a_empirical: f64,
    pub error_bound: f64,
    pub error_empirical: Option<f64>,
    pub p_lower_bound: Option<f64>,
    pub p_empirical: f64,
    pub eta: f64,
    pub eta_from_oracle: bool,
    pub eta_prime: f64,
    pub delta_qlss: Option<f64>,
    pub query_complexity_estimate: f64,
    pub gate_factor_estimate: f64,
    pub repetitions_estimate: f64,
    pub complexity_unbounded: bool,
    pub hypothesis: HypothesisReport,
}

/// Measured quantities the report is built from.
#[derive(Debug, Clone)]
pub struct Measurements<'a> {
    pub solution_y: &'a DVector<f64>,
    pub layout: &'a EmbeddingLayout,
    pub sigma_max_a: f64,
    pub sigma_min_a: f64,
    /// Root from the classical oracle, if it converged.
    pub x_star: Option<&'a DVector<f64>>,
}

pub fn bounds_report(
    sys: &QuadraticSystem,
    params: &SystemParams,
    c: usize,
    epsilon: f64,
    m: &Measurements<'_>,
) -> Result<BoundsReport> {
    let hypothesis = crate::model::check_hypotheses(params, c, epsilon);
    let x_tilde = crate::embedding::extract_block(m.solution_y, m.layout, &TermIndex::y0())?;
    let r = params.big_r;
    let ratio = |norm: f64| if r > 0.0 { norm / r } else { f64::INFINITY };
    let eta_prime = ratio(x_tilde.norm());
    let (eta, eta_from_oracle) = match m.x_star {
        Some(x) => (ratio(x.norm()), true),
        None => (eta_prime, false),
    };
    let complexity = complexity_estimate(params, sys, c, epsilon, eta);
    Ok(BoundsReport {
        order_c: c,
        epsilon,
        lemma1_bound: lemma1_bound(params.inv_norm_f1, c).ok(),
        kappa_a_bound: lemma2_kappa_bound(params, c).ok(),
        kappa_a_empirical: m.sigma_max_a / m.sigma_min_a,
        norm_a_bound: embedded_norm_bound(params, c),
        norm_a_empirical: m.sigma_max_a,
        error_bound: hpm::truncation_error_bound(params, c).unwrap_or(f64::INFINITY),
        error_empirical: m.x_star.map(|x| (x - &x_tilde).norm()),
        p_lower_bound: if hypothesis.success_bound_applies() {
            lemma4_success_bound(eta_prime, r).ok()
        } else {
            None
        },
        p_empirical: empirical_success_probability(m.solution_y, m.layout)?,
        eta,
        eta_from_oracle,
        eta_prime,
        delta_qlss: qlss_delta(eta_prime, r, epsilon).ok(),
        query_complexity_estimate: complexity.query,
        gate_factor_estimate: complexity.gate_factor,
        repetitions_estimate: complexity.repetitions,
        complexity_unbounded: complexity.unbounded,
        hypothesis,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:?}"))
}

impl BoundsReport {
    /// `bounds.key: value` lines, full round-trip precision.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "bounds.{k}: {v}");
        };
        line("order_c", self.order_c.to_string());
        line("epsilon", format!("{:?}", self.epsilon));
        line("lemma1_bound", opt(self.lemma1_bound));
        line("kappa_a_bound", opt(self.kappa_a_bound));
        line("kappa_a_empirical", format!("{:?}", self.kappa_a_empirical));
        line("norm_a_bound", format!("{:?}", self.norm_a_bound));
        line("norm_a_empirical", format!("{:?}", self.norm_a_empirical));
        line("error_bound", format!("{:?}", self.error_bound));
        line("error_empirical", opt(self.error_empirical));
        line("p_lower_bound", opt(self.p_lower_bound));
        line("p_empirical", format!("{:?}", self.p_empirical));
        line("eta", format!("{:?}", self.eta));
        line("eta_source", if self.eta_from_oracle { "oracle" } else { "eta_prime_fallback" }.into());
        line("eta_prime", format!("{:?}", self.eta_prime));
        line("delta_qlss", opt(self.delta_qlss));
        line("query_complexity_estimate", format!("{:?}", self.query_complexity_estimate));
        line("gate_factor_estimate", format!("{:?}", self.gate_factor_estimate));
        line("repetitions_estimate", format!("{:?}", self.repetitions_estimate));
        line("complexity_unbounded", self.complexity_unbounded.to_string());
        line("complexity_polylog_exponent", format!("{POLYLOG_EXPONENT} (assumed)"));
        line(
            "complexity_epsilon_flag",
            if self.hypothesis.epsilon_lt_tenth { "ok" } else { "epsilon >= 0.1, success constant not guaranteed" }.into(),
        );
        for (k, v) in self.hypothesis.entries() {
            line(&format!("hypothesis.{k}"), v.to_string());
        }
        s
    }
}

//! Randomized property suites run by the `selftest` command.
//!
//! Every suite draws its population from one seed, so reports are
//! reproducible byte for byte.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::Rng;

use crate::analysis::{chain_matrix, lemma1_bound, lemma2_kappa_bound, lemma4_success_bound};
use crate::embedding::{build_embedding, embedding_dimension, enumerate_layout, extract_block, pack_series, TermIndex};
use crate::error::Result;
use crate::generator::{random_conditioned_system, random_system, random_system_with_r, rng, Scaling};
use crate::hpm::{hpm_solve, nu_norm_bound, truncation_error_bound};
use crate::model::compute_params;
use crate::newton::{newton_solve, DEFAULT_MAX_ITER};
use crate::solver::{estimate_condition_number, relative_residual, solve, SolveMethod};
use crate::sparse::CsrMatrix;

const SOLVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub cases: usize,
    pub violations: usize,
    /// Largest `measured / bound` seen; below 1 means no violation.
    pub worst_ratio: f64,
    /// Reported but not counted against the exit status.
    pub informational: bool,
}

impl SuiteResult {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            violations: 0,
            worst_ratio: 0.0,
            informational: false,
        }
    }

    /// Records `measured ≤ bound·(1 + rel_slack) + abs_slack`.
    fn record(&mut self, measured: f64, bound: f64, rel_slack: f64, abs_slack: f64) {
        self.cases += 1;
        let ratio = if bound > 0.0 { measured / bound } else if measured <= abs_slack { 0.0 } else { f64::INFINITY };
        if !(measured <= bound * (1.0 + rel_slack) + abs_slack) {
            self.violations += 1;
        }
        if ratio.is_nan() || ratio > self.worst_ratio {
            self.worst_ratio = if ratio.is_nan() { f64::INFINITY } else { ratio };
        }
    }

    fn fail(&mut self) {
        self.cases += 1;
        self.violations += 1;
        self.worst_ratio = f64::INFINITY;
    }

    pub fn passed(&self) -> bool {
        self.informational || self.violations == 0
    }
}

/// Solved `y₀` against `Σνᵢ` (1e-9 relative) and `‖Ay−b‖ ≤ 1e-10‖b‖` for the packed series.
pub fn recursion_equivalence_suite(seed: u64, count: usize) -> Result<SuiteResult> {
    let mut g = rng(seed);
    let mut out = SuiteResult::new("recursion_equivalence");
    for _ in 0..count {
        let n = g.random_range(2..=4);
        let c = g.random_range(1..=4);
        let target = g.random_range(0.05..0.6);
        let sys = random_system(&mut g, n, Scaling::TargetR(target))?;
        let emb = build_embedding(&sys, c)?;
        let solved = solve(&emb, SolveMethod::Auto, SOLVE_TOL)?;
        let x_tilde = extract_block(&solved.solution_y, &emb.layout, &TermIndex::y0())?;
        let series = hpm_solve(&sys, c)?;
        let scale = series.x_tilde.norm().max(f64::MIN_POSITIVE);
        out.record((x_tilde - &series.x_tilde).norm() / scale, 1e-9, 0.0, 0.0);
        let packed = pack_series(&sys, &emb.layout, &series)?;
        out.record(relative_residual(&emb.matrix_a, &packed, &emb.vector_b), 1e-10, 0.0, 0.0);
    }
    Ok(out)
}

/// Random `M` rescaled to a chosen `‖M⁻¹‖ < 1`; dense `‖P⁻¹‖` against the chain bound.
pub fn chain_inverse_suite(seed: u64, count: usize) -> Result<SuiteResult> {
    let mut g = rng(seed);
    let mut out = SuiteResult::new("chain_inverse");
    let mut done = 0;
    while done < count {
        let n = g.random_range(2..=3);
        let i = g.random_range(0..=3);
        let raw = DMatrix::from_fn(n, n, |_, _| g.random_range(-1.0..1.0));
        let smin = raw.clone().singular_values().min();
        if smin < 1e-3 {
            continue;
        }
        let target = g.random_range(0.05..0.95);
        let m = CsrMatrix::from_dense(&(raw / (target * smin)));
        let p = chain_matrix(&m, i).to_dense();
        let p_inv_norm = 1.0 / p.singular_values().min();
        out.record(p_inv_norm, lemma1_bound(target, i)?, 0.0, 1e-9);
        done += 1;
    }
    Ok(out)
}

/// Estimated `κ_A` against the condition bound on systems meeting its hypotheses.
pub fn condition_number_suite(seed: u64, count: usize) -> Result<SuiteResult> {
    let mut g = rng(seed);
    let mut out = SuiteResult::new("condition_number");
    for _ in 0..count {
        let n = g.random_range(2..=3);
        let c = g.random_range(1..=4);
        let sys = random_conditioned_system(&mut g, n, c)?;
        let params = compute_params(&sys, c)?;
        let emb = build_embedding(&sys, c)?;
        let kappa = estimate_condition_number(&emb.matrix_a)?;
        out.record(kappa, lemma2_kappa_bound(&params, c)?, 1e-6, 0.0);
    }
    Ok(out)
}

/// `‖x* − x̃‖ ≤ αR^{c+1}/(1−R)` for `c = 1…6` and `‖νᵢ‖ ≤ αRⁱ`, with `R < 0.7`.
pub fn truncation_suite(seed: u64, count: usize) -> Result<SuiteResult> {
    let mut g = rng(seed);
    let mut out = SuiteResult::new("truncation_error");
    for _ in 0..count {
        let n = g.random_range(2..=3);
        let target = g.random_range(0.05..0.7);
        let sys = random_system(&mut g, n, Scaling::TargetR(target))?;
        let params = compute_params(&sys, 1)?;
        let series = hpm_solve(&sys, 6)?;
        let x_star = match newton_solve(&sys, &series.nus[0], DEFAULT_MAX_ITER) {
            Ok(r) => r.x_star,
            Err(_) => {
                out.fail();
                continue;
            }
        };
        for c in 1..=6 {
            let x_tilde = series.nus[..=c].iter().sum::<nalgebra::DVector<f64>>();
            out.record((&x_star - x_tilde).norm(), truncation_error_bound(&params, c)?, 1e-9, 1e-13);
        }
        for (i, nu) in series.nus.iter().enumerate() {
            out.record(nu.norm(), nu_norm_bound(&params, i), 1e-12, 0.0);
        }
    }
    Ok(out)
}

/// `p_empirical` against the success bound on rescaled systems with `R < 0.67`.
pub fn success_probability_suite(seed: u64, count: usize) -> Result<SuiteResult> {
    let mut g = rng(seed);
    let mut out = SuiteResult::new("success_probability");
    for _ in 0..count {
        let n = g.random_range(2..=3);
        let c = g.random_range(1..=4);
        let target = g.random_range(0.05..0.67);
        let sys = random_system_with_r(&mut g, n, target, true)?;
        let params = compute_params(&sys, c)?;
        let emb = build_embedding(&sys, c)?;
        let y = solve(&emb, SolveMethod::Auto, SOLVE_TOL)?.solution_y;
        let head = extract_block(&y, &emb.layout, &TermIndex::y0())?;
        let p = head.norm_squared() / y.norm_squared();
        let bound = lemma4_success_bound(head.norm() / params.big_r, params.big_r)?;
        // Recorded as bound ≤ p.
        out.record(bound, p, 1e-12, 0.0);
    }
    Ok(out)
}

/// Term counts, dimension formula and row sparsity `≤ s(1 + c(c+1)/2)`.
pub fn structure_suite(seed: u64) -> Result<SuiteResult> {
    let mut out = SuiteResult::new("embedding_structure");
    for c in 1..=10 {
        let layout = enumerate_layout(1, c)?;
        let mut binom = vec![1u64; c + 2];
        for k in 1..=c + 1 {
            binom[k] = binom[k - 1] * (c + 2 - k) as u64 / k as u64;
        }
        for i in 1..=c {
            out.record(layout.beta_counts[i] as f64, binom[i + 1] as f64, 0.0, 0.0);
            out.record(binom[i + 1] as f64, layout.beta_counts[i] as f64, 0.0, 0.0);
        }
    }
    for n in 1..=4 {
        for c in 1..=6 {
            let total = enumerate_layout(n, c)?.total_dim_n as f64;
            let formula = embedding_dimension(n, c).expect("small") as f64;
            out.record(total, formula, 0.0, 0.0);
            out.record(formula, total, 0.0, 0.0);
        }
    }
    let mut g = rng(seed);
    for _ in 0..30 {
        let n = g.random_range(2..=4);
        let c = g.random_range(1..=4);
        let sys = random_system(&mut g, n, Scaling::TargetR(0.3))?;
        let emb = build_embedding(&sys, c)?;
        let bound = sys.sparsity() * (1 + c * (c + 1) / 2);
        out.record(emb.matrix_a.max_row_nnz() as f64, bound as f64, 0.0, 0.0);
    }
    Ok(out)
}

/// Row sparsity against the tighter `s·c(c+1)/2`; exceeded whenever `F₂`
/// contributes to the top block row alongside `F₁`.
pub fn stated_sparsity_suite(seed: u64) -> Result<SuiteResult> {
    let mut out = SuiteResult::new("row_sparsity_vs_s_c(c+1)/2");
    out.informational = true;
    let mut g = rng(seed);
    for _ in 0..30 {
        let n = g.random_range(2..=4);
        let c = g.random_range(1..=4);
        let sys = random_system(&mut g, n, Scaling::TargetR(0.3))?;
        let emb = build_embedding(&sys, c)?;
        let bound = sys.sparsity() * c * (c + 1) / 2;
        out.record(emb.matrix_a.max_row_nnz() as f64, bound as f64, 0.0, 0.0);
    }
    Ok(out)
}

/// Runs every suite with populations derived from `seed`.
pub fn run_all(seed: u64) -> Result<Vec<SuiteResult>> {
    Ok(vec![
        recursion_equivalence_suite(seed, 100)?,
        chain_inverse_suite(seed.wrapping_add(1), 200)?,
        condition_number_suite(seed.wrapping_add(2), 50)?,
        truncation_suite(seed.wrapping_add(3), 50)?,
        success_probability_suite(seed.wrapping_add(4), 50)?,
        structure_suite(seed.wrapping_add(5))?,
        stated_sparsity_suite(seed.wrapping_add(5))?,
    ])
}

pub fn render(results: &[SuiteResult]) -> String {
    let mut s = String::new();
    for r in results {
        let status = match (r.violations == 0, r.informational) {
            (true, _) => "PASS",
            (false, true) => "INFO",
            (false, false) => "FAIL",
        };
        let _ = writeln!(
            s,
            "suite.{}: {status} cases={} violations={} worst_ratio={:?}",
            r.name, r.cases, r.violations, r.worst_ratio
        );
    }
    s
}

//! Seeded random systems whose hypotheses hold by construction.
//!
//! `F₁ = D + ρE` with `D` diagonal in `[1.5, 3]` and `ρ‖E‖ ≤ 0.45`, so
//! `σ_min(F₁) ≥ 1.05` and `‖F₁⁻¹‖ < 1`. `F₀` and `F₂` are scaled afterwards
//! to hit a target `R` or a target `‖F₂‖`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::{compute_params, rescale_system, QuadraticSystem};
use crate::norms::spectral_norm;
use crate::sparse::CsrMatrix;

/// Lower bound on `σ_min(F₁)` guaranteed by [`random_f1`].
pub const F1_SIGMA_FLOOR: f64 = 1.05;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// How `F₂` is scaled once `F₀` and `F₁` are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scaling {
    /// `R = 4‖F₁⁻¹‖²‖F₀‖‖F₂‖` equals this value.
    TargetR(f64),
    /// `‖F₂‖` equals this value.
    TargetF2Norm(f64),
}

pub fn random_f1<R: Rng>(rng: &mut R, n: usize) -> CsrMatrix {
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::new();
    for i in 0..n {
        diag.push((i, i, rng.random_range(1.5..3.0)));
        for j in 0..n {
            if i != j && rng.random_bool(0.5) {
                off.push((i, j, rng.random_range(-1.0..1.0)));
            }
        }
    }
    let e = CsrMatrix::from_triplets(n, n, off).expect("indices are in range");
    let e_norm = spectral_norm(&e);
    let rho = if e_norm > 0.0 {
        rng.random_range(0.0..1.0) * (1.5 - F1_SIGMA_FLOOR) / e_norm
    } else {
        0.0
    };
    let mut t = diag;
    t.extend(e.iter().map(|(i, j, v)| (i, j, rho * v)));
    CsrMatrix::from_triplets(n, n, t).expect("indices are in range")
}

/// Nonzero random vector with entries in `[-1, 1]`.
fn random_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        if v.norm() > 1e-3 {
            return v;
        }
    }
}

/// `n × n²` with one to three nonzeros per row.
fn random_f2_pattern<R: Rng>(rng: &mut R, n: usize) -> CsrMatrix {
    let cols = n * n;
    loop {
        let mut t = Vec::new();
        for r in 0..n {
            for _ in 0..rng.random_range(1..=3.min(cols)) {
                t.push((r, rng.random_range(0..cols), rng.random_range(-1.0..1.0)));
            }
        }
        let m = CsrMatrix::from_triplets(n, cols, t).expect("indices are in range");
        if m.nnz() > 0 {
            return m;
        }
    }
}

/// Random system with `‖F₀‖` uniform in `[0.05, 0.5]` and `F₂` scaled per `scaling`.
pub fn random_system<R: Rng>(rng: &mut R, n: usize, scaling: Scaling) -> Result<QuadraticSystem> {
    let f1 = random_f1(rng, n);
    system_around(rng, f1, scaling)
}

fn system_around<R: Rng>(rng: &mut R, f1: CsrMatrix, scaling: Scaling) -> Result<QuadraticSystem> {
    let n = f1.nrows();
    let f0 = random_vector(rng, n).normalize() * rng.random_range(0.05..0.5);
    let pattern = random_f2_pattern(rng, n);
    let unit = pattern.scale(1.0 / spectral_norm(&pattern));
    let probe = QuadraticSystem::new(f0.clone(), f1.clone(), unit.clone())?;
    let inv = compute_params(&probe, 1)?.inv_norm_f1;
    let f2_norm = match scaling {
        Scaling::TargetR(r) => r / (4.0 * inv * inv * f0.norm()),
        Scaling::TargetF2Norm(v) => v,
    };
    QuadraticSystem::new(f0, f1, unit.scale(f2_norm))
}

/// Random system satisfying `‖F₁⁻¹‖ < 1` and
/// `(‖F₁⁻¹‖/(1−‖F₁⁻¹‖))(c+1)‖F₂‖ < 1`.
pub fn random_conditioned_system<R: Rng>(rng: &mut R, n: usize, c: usize) -> Result<QuadraticSystem> {
    let f1 = random_f1(rng, n);
    let inv = {
        let probe = QuadraticSystem::new(DVector::zeros(n), f1.clone(), CsrMatrix::from_triplets(n, n * n, vec![])?)?;
        compute_params(&probe, c)?.inv_norm_f1
    };
    let ceiling = (1.0 - inv) / (inv * (c as f64 + 1.0));
    let target = rng.random_range(0.05..0.95) * ceiling;
    system_around(rng, f1, Scaling::TargetF2Norm(target))
}

/// Random system with the given `R`, rescaled so that `R ≥ ‖F₀‖` when `rescale` is set.
pub fn random_system_with_r<R: Rng>(rng: &mut R, n: usize, big_r: f64, rescale: bool) -> Result<QuadraticSystem> {
    let sys = random_system(rng, n, Scaling::TargetR(big_r))?;
    if rescale {
        Ok(rescale_system(&sys)?.0)
    } else {
        Ok(sys)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_inverse_norm_is_below_one() {
        let mut r = rng(7);
        for n in 1..=5 {
            for _ in 0..20 {
                let f1 = random_f1(&mut r, n);
                let smin = f1.to_dense().singular_values().min();
                assert!(smin >= F1_SIGMA_FLOOR - 1e-12, "{smin}");
            }
        }
    }

    #[test]
    fn target_r_is_hit() {
        let mut r = rng(1);
        for &target in &[0.1, 0.4, 0.69] {
            let sys = random_system(&mut r, 3, Scaling::TargetR(target)).unwrap();
            let p = compute_params(&sys, 2).unwrap();
            assert!((p.big_r - target).abs() < 1e-9 * target, "{} vs {target}", p.big_r);
        }
    }

    #[test]
    fn conditioned_population_meets_hypotheses() {
        let mut r = rng(3);
        for c in 1..=4 {
            let sys = random_conditioned_system(&mut r, 3, c).unwrap();
            let p = compute_params(&sys, c).unwrap();
            assert!(p.inv_norm_f1 < 1.0 && p.lemma2_zeta(c) < 1.0);
        }
    }

    #[test]
    fn rescaled_population_has_r_above_f0() {
        let mut r = rng(5);
        for _ in 0..10 {
            let sys = random_system_with_r(&mut r, 2, 0.5, true).unwrap();
            let p = compute_params(&sys, 1).unwrap();
            assert!(p.big_r >= p.norm_f0 * (1.0 - 1e-12));
            assert!((p.big_r - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn same_seed_same_system() {
        let a = random_system(&mut rng(11), 3, Scaling::TargetR(0.3)).unwrap();
        let b = random_system(&mut rng(11), 3, Scaling::TargetR(0.3)).unwrap();
        assert_eq!(a.f0(), b.f0());
        assert_eq!(a.f1(), b.f1());
        assert_eq!(a.f2(), b.f2());
    }
}

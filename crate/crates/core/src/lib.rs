//! Linear embedding of quadratic systems `F₀ + F₁x + F₂(x⊗x) = 0`.
//!
//! The homotopy-perturbation series `x̃ = ν₀ + … + ν_c` is encoded as the
//! solution of one sparse linear system `Ay = b` whose first block is `x̃`.
//! The crate builds `A` and `b`, solves them classically, and evaluates the
//! analytic bounds on condition number, truncation error and success
//! probability against measured values.
//!
//! ```
//! use quadhpm::{embedding::build_embedding, fixtures::appendix_system, solver};
//!
//! let sys = appendix_system();
//! let emb = build_embedding(&sys, 2).unwrap();
//! assert_eq!(emb.layout.total_dim_n, 42);
//! let y = solver::solve(&emb, solver::SolveMethod::Direct, 1e-12).unwrap().solution_y;
//! assert!((y[0] + 4.8765625e-2).abs() < 1e-12);
//! ```

// `!(x > 0.0)` is used on purpose: it rejects NaN together with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod embedding;
pub mod error;
pub mod fixtures;
pub mod generator;
pub mod hpm;
pub mod model;
pub mod newton;
pub mod norms;
pub mod pipeline;
pub mod problem;
pub mod report;
pub mod selftest;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
pub use model::{QuadraticSystem, SystemParams};

//! JSON problem files.
//!
//! ```json
//! {
//!   "n": 2,
//!   "f0": [0.2, -0.2],
//!   "f1": [[0, 0, 3.0], [0, 1, -1.0], [1, 0, -1.0], [1, 1, 3.0]],
//!   "f2": [[0, 0, -0.5], [0, 1, 0.5], [1, 2, 0.5], [1, 3, -0.5]],
//!   "epsilon": 1e-3,
//!   "order_c": 2
//! }
//! ```
//!
//! `f1` and `f2` are `[row, col, value]` triplets; `f2` columns index the pair
//! `(j, k)` as `j·n + k`. `epsilon`, `order_c` and `s` are optional; a given `s`
//! must equal the sparsity measured from the data.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::QuadraticSystem;
use crate::sparse::CsrMatrix;

pub const MAX_ORDER: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: usize,
    pub f0: Vec<f64>,
    pub f1: Vec<(usize, usize, f64)>,
    pub f2: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_c: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
}

/// A validated problem ready for the pipeline.
#[derive(Debug, Clone)]
pub struct Problem {
    pub system: QuadraticSystem,
    pub epsilon: Option<f64>,
    pub order_c: Option<usize>,
}

pub fn validate_order(c: usize) -> Result<usize> {
    if (1..=MAX_ORDER).contains(&c) {
        Ok(c)
    } else {
        Err(Error::InvalidOrder(c))
    }
}

pub fn validate_epsilon(eps: f64) -> Result<f64> {
    if eps.is_finite() && eps > 0.0 {
        Ok(eps)
    } else {
        Err(Error::Parse(format!("epsilon must be a positive real, got {eps}")))
    }
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn into_problem(self) -> Result<Problem> {
        let n = self.n;
        if n == 0 {
            return Err(Error::Parse("n must be positive".into()));
        }
        if self.f0.len() != n {
            return Err(Error::Parse(format!(
                "f0 has {} entries, expected n = {n}",
                self.f0.len()
            )));
        }
        let f1 = CsrMatrix::from_triplets(n, n, self.f1)?;
        let f2 = CsrMatrix::from_triplets(n, n * n, self.f2)?;
        let f0 = DVector::from_vec(self.f0);
        let system = match self.s {
            Some(s) => QuadraticSystem::with_declared_sparsity(f0, f1, f2, s)?,
            None => QuadraticSystem::new(f0, f1, f2)?,
        };
        Ok(Problem {
            system,
            epsilon: self.epsilon.map(validate_epsilon).transpose()?,
            order_c: self.order_c.map(validate_order).transpose()?,
        })
    }

    pub fn from_system(sys: &QuadraticSystem) -> Self {
        Self {
            n: sys.n(),
            f0: sys.f0().iter().copied().collect(),
            f1: sys.f1().iter().collect(),
            f2: sys.f2().iter().collect(),
            epsilon: None,
            order_c: None,
            s: None,
        }
    }
}

pub fn parse_problem(text: &str) -> Result<Problem> {
    ProblemFile::parse(text)?.into_problem()
}

pub fn load_problem(path: &Path) -> Result<Problem> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_problem(&text)
}

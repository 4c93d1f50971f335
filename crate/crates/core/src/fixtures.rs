//! The bundled two-dimensional worked example and its published values.

use crate::model::QuadraticSystem;
use crate::problem::parse_problem;

pub const APPENDIX_A_JSON: &str = include_str!("../fixtures/appendix_a.json");

pub const APPENDIX_ORDER: usize = 2;
pub const APPENDIX_DIMENSION: usize = 42;
pub const APPENDIX_X_TILDE: [f64; 2] = [-4.8765625e-2, 5.1265625e-2];
pub const APPENDIX_X_STAR: [f64; 2] = [-4.8764858e-2, 5.1266422e-2];
pub const APPENDIX_ERROR: f64 = 1.1061184e-6;
/// Success-probability lower bound evaluated at the example's η' and R.
pub const APPENDIX_P_LOWER: f64 = 0.02797;

/// `3x₀ − x₁ − 0.5x₀² + 0.5x₀x₁ + 0.2 = 0`, `−x₀ + 3x₁ − 0.5x₁² + 0.5x₁x₀ − 0.2 = 0`.
pub fn appendix_system() -> QuadraticSystem {
    parse_problem(APPENDIX_A_JSON)
        .expect("bundled fixture is valid")
        .system
}

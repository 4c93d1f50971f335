//! Plain-text artifacts: `key: value` report lines and matrix/layout dumps.
//! Floats use `{:?}`, which round-trips exactly.

use std::fmt::Write as _;

use nalgebra::DVector;

use crate::embedding::EmbeddingLayout;
use crate::sparse::CsrMatrix;

/// Accumulates `key: value` lines.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Report {
    text: String,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn line(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.text, "{key}: {value}");
    }

    pub fn real(&mut self, key: &str, value: f64) {
        self.line(key, format!("{value:?}"));
    }

    pub fn opt_real(&mut self, key: &str, value: Option<f64>) {
        match value {
            Some(v) => self.real(key, v),
            None => self.line(key, "n/a"),
        }
    }

    pub fn vector(&mut self, key: &str, v: &DVector<f64>) {
        self.line(key, format_vector(v));
    }

    /// Appends pre-rendered lines verbatim.
    pub fn raw(&mut self, text: &str) {
        self.text.push_str(text);
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub fn format_vector(v: &DVector<f64>) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Header `N nnz`, then `row col value` in row-major order.
pub fn matrix_dump(m: &CsrMatrix) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {}", m.nrows(), m.nnz());
    for (r, c, v) in m.iter() {
        let _ = writeln!(s, "{r} {c} {v:?}");
    }
    s
}

/// The vector as an `N × 1` triplet dump: header `N nnz`, then `row 0 value`.
pub fn vector_dump(v: &DVector<f64>) -> String {
    let mut s = String::new();
    let nnz = v.iter().filter(|x| **x != 0.0).count();
    let _ = writeln!(s, "{} {nnz}", v.len());
    for (r, x) in v.iter().enumerate().filter(|(_, x)| **x != 0.0) {
        let _ = writeln!(s, "{r} 0 {x:?}");
    }
    s
}

/// One line per term: `level slot split_r offset dim tuple...`, with `-` for
/// terms outside the split chain.
pub fn layout_dump(layout: &EmbeddingLayout) -> String {
    let mut s = String::new();
    for (k, t) in layout.terms.iter().enumerate() {
        let split = t.split.map_or_else(|| "-".to_string(), |r| r.to_string());
        let _ = write!(s, "{} {} {split} {} {}", t.level, t.slot, layout.offsets[k], layout.block_dims[k]);
        for a in &t.tuple {
            let _ = write!(s, " {a}");
        }
        s.push('\n');
    }
    s
}

//! Linear embedding of the homotopy recursion into one sparse system `Ay = b`.
//!
//! The unknown `y` stacks, level by level:
//!
//! * level 0: the single block `y₀ = ν₀ + … + ν_c`;
//! * level `i ≥ 1`: the split chain `ν₀^{⊗i+1}, F₀⊗ν₀^{⊗i}, …, F₀^{⊗i}⊗ν₀`,
//!   followed by every product `ν_{a₀}⊗…⊗ν_{aᵢ}` with `1 ≤ Σa ≤ c − i`, in
//!   graded lexicographic order of the tuple `a`.
//!
//! Each block owns one block row of `A`, so `A` is square and block upper
//! triangular with invertible diagonal blocks whenever `F₁` is invertible.

use std::collections::HashMap;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::hpm::HomotopySeries;
use crate::model::QuadraticSystem;
use crate::problem::MAX_ORDER;
use crate::sparse::{kron_power, kron_vec, push_identity_block, push_kron_block, CsrMatrix};

/// Upper limit on the number of blocks a layout may materialize.
pub const MAX_TERMS: u64 = 1 << 26;

/// One block of `y`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermIndex {
    pub level: usize,
    pub slot: usize,
    /// Indices `a₀…aᵢ` of the product `ν_{a₀}⊗…⊗ν_{aᵢ}`; empty for `y₀`.
    pub tuple: Vec<u32>,
    /// `r ≥ 1` for the split block `F₀^{⊗r}⊗ν₀^{⊗i+1−r}`.
    pub split: Option<usize>,
}

impl TermIndex {
    pub fn y0() -> Self {
        Self {
            level: 0,
            slot: 0,
            tuple: Vec::new(),
            split: None,
        }
    }

    /// Member `r` of the split chain at `level` (`r = 0` is `ν₀^{⊗level+1}`).
    pub fn split_block(level: usize, r: usize) -> Self {
        Self {
            level,
            slot: 0,
            tuple: vec![0; level + 1],
            split: if r == 0 { None } else { Some(r) },
        }
    }

    pub fn is_y0(&self) -> bool {
        self.level == 0
    }

    /// Position within the split chain, or `None` for products with `Σa ≥ 1`.
    pub fn chain_position(&self) -> Option<usize> {
        if self.level >= 1 && self.slot == 0 {
            Some(self.split.unwrap_or(0))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingLayout {
    pub order_c: usize,
    pub n: usize,
    pub terms: Vec<TermIndex>,
    pub offsets: Vec<usize>,
    pub block_dims: Vec<usize>,
    pub total_dim_n: usize,
    pub beta_counts: Vec<usize>,
    /// `(level, tuple)` → term position, for the chain head and all products.
    tuple_index: HashMap<(usize, Vec<u32>), usize>,
    /// First term position of each level.
    level_starts: Vec<usize>,
}

/// All tuples of length `len` with entries summing to exactly `total`, in
/// lexicographic order.
fn compositions(len: usize, total: u32) -> Vec<Vec<u32>> {
    fn rec(prefix: &mut Vec<u32>, remaining_len: usize, remaining: u32, out: &mut Vec<Vec<u32>>) {
        if remaining_len == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=remaining {
            prefix.push(first);
            rec(prefix, remaining_len - 1, remaining - first, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(len), len, total, &mut out);
    out
}

fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k as u128 {
        acc = acc * (n as u128 - j) / (j + 1);
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// `N = Σᵢ n^{i+1}(βᵢ + i)` with overflow checking; `None` if it exceeds `u64`.
pub fn embedding_dimension(n: usize, c: usize) -> Option<u64> {
    let n = n as u64;
    let mut total: u64 = 0;
    let mut power: u64 = 1;
    for i in 0..=c as u64 {
        power = power.checked_mul(n)?;
        let beta = if i == 0 { 1 } else { binomial(c as u64 + 1, i + 1)? };
        total = total.checked_add(power.checked_mul(beta.checked_add(i)?)?)?;
    }
    Some(total)
}

pub fn enumerate_layout(n: usize, c: usize) -> Result<EmbeddingLayout> {
    if n == 0 {
        return Err(Error::DimensionMismatch {
            what: "state dimension",
            expected: 1,
            found: 0,
        });
    }
    if !(1..=MAX_ORDER).contains(&c) {
        return Err(Error::InvalidOrder(c));
    }
    let overflow = || Error::DimensionOverflow { n, c };
    let total = embedding_dimension(n, c).ok_or_else(overflow)?;
    let total_dim_n = usize::try_from(total).map_err(|_| overflow())?;
    let term_count = (0..=c as u64)
        .try_fold(0u64, |acc, i| {
            let beta = if i == 0 { 1 } else { binomial(c as u64 + 1, i + 1)? };
            acc.checked_add(beta.checked_add(i)?)
        })
        .ok_or_else(overflow)?;
    if term_count > MAX_TERMS {
        return Err(overflow());
    }

    let mut terms = Vec::with_capacity(term_count as usize);
    let mut block_dims = Vec::with_capacity(term_count as usize);
    let mut beta_counts = Vec::with_capacity(c + 1);
    let mut level_starts = Vec::with_capacity(c + 1);

    terms.push(TermIndex::y0());
    block_dims.push(n);
    beta_counts.push(1);
    level_starts.push(0);

    let mut block_dim = n;
    for level in 1..=c {
        block_dim *= n;
        level_starts.push(terms.len());
        for r in 0..=level {
            terms.push(TermIndex::split_block(level, r));
            block_dims.push(block_dim);
        }
        let mut slot = 1;
        for total in 1..=(c - level) as u32 {
            for tuple in compositions(level + 1, total) {
                terms.push(TermIndex {
                    level,
                    slot,
                    tuple,
                    split: None,
                });
                block_dims.push(block_dim);
                slot += 1;
            }
        }
        beta_counts.push(slot);
    }

    let mut offsets = Vec::with_capacity(terms.len());
    let mut cursor = 0;
    for &d in &block_dims {
        offsets.push(cursor);
        cursor += d;
    }
    debug_assert_eq!(cursor, total_dim_n);

    let tuple_index = terms
        .iter()
        .enumerate()
        .filter(|(_, t)| t.level >= 1 && t.split.is_none())
        .map(|(k, t)| ((t.level, t.tuple.clone()), k))
        .collect();

    Ok(EmbeddingLayout {
        order_c: c,
        n,
        terms,
        offsets,
        block_dims,
        total_dim_n,
        beta_counts,
        tuple_index,
        level_starts,
    })
}

impl EmbeddingLayout {
    pub fn position(&self, term: &TermIndex) -> Option<usize> {
        if term.is_y0() {
            return (term == &self.terms[0]).then_some(0);
        }
        if term.level > self.order_c {
            return None;
        }
        match term.split {
            Some(r) if r >= 1 && r <= term.level => {
                let k = self.level_starts[term.level] + r;
                (self.terms[k] == *term).then_some(k)
            }
            Some(_) => None,
            None => self
                .tuple_index
                .get(&(term.level, term.tuple.clone()))
                .copied()
                .filter(|&k| self.terms[k] == *term),
        }
    }

    fn chain_position_index(&self, level: usize, r: usize) -> usize {
        self.level_starts[level] + r
    }

    /// Term position of the level-wide product with tuple `a` (all-zero maps to
    /// the chain head).
    fn tuple_position(&self, level: usize, tuple: &[u32]) -> Result<usize> {
        self.tuple_index
            .get(&(level, tuple.to_vec()))
            .copied()
            .ok_or_else(|| Error::MissingColumn {
                level,
                tuple: tuple.to_vec(),
            })
    }

    /// Term position owning coordinate `k` of `y`.
    pub fn term_of_coordinate(&self, k: usize) -> usize {
        match self.offsets.binary_search(&k) {
            Ok(t) => t,
            Err(t) => t - 1,
        }
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }
}

#[derive(Debug, Clone)]
pub struct EmbeddedSystem {
    pub matrix_a: CsrMatrix,
    pub vector_b: DVector<f64>,
    pub layout: EmbeddingLayout,
    pub sparsity_s_a: usize,
}

/// Writes the block rows of `A` and `b` described by the layout.
pub fn assemble(sys: &QuadraticSystem, layout: &EmbeddingLayout) -> Result<EmbeddedSystem> {
    let n = sys.n();
    if layout.n != n {
        return Err(Error::DimensionMismatch {
            what: "layout dimension",
            expected: n,
            found: layout.n,
        });
    }
    let c = layout.order_c;
    let total = layout.total_dim_n;
    let f1 = sys.f1();
    let f2 = sys.f2();
    let mut triplets = Vec::new();
    let mut b = DVector::zeros(total);

    // y₀ row: F₁ y₀ + F₂ Σ_{a₀+a₁ ≤ c−1} ν_{a₀}⊗ν_{a₁} = −F₀.
    push_kron_block(&mut triplets, f1, 1, 1, 0, 0);
    for (k, term) in layout.terms.iter().enumerate() {
        if term.level == 1 && term.split.is_none() {
            push_kron_block(&mut triplets, f2, 1, 1, 0, layout.offsets[k]);
        }
    }
    b.rows_mut(0, n).copy_from(&(-sys.f0()));

    for (k, term) in layout.terms.iter().enumerate().skip(1) {
        let i = term.level;
        let row = layout.offsets[k];
        let dim = layout.block_dims[k];
        match term.chain_position() {
            Some(r) => {
                // B_{i,r} = I^{⊗r} ⊗ F₁ ⊗ I^{⊗i−r}
                push_kron_block(&mut triplets, f1, n.pow(r as u32), n.pow((i - r) as u32), row, row);
                if r < i {
                    let next = layout.chain_position_index(i, r + 1);
                    push_identity_block(&mut triplets, dim, row, layout.offsets[next]);
                } else {
                    let tail = -kron_power(sys.f0(), i + 1);
                    b.rows_mut(row, dim).copy_from(&tail);
                }
            }
            None => {
                let (pos, &a_k) = term
                    .tuple
                    .iter()
                    .enumerate()
                    .find(|(_, &a)| a != 0)
                    .expect("product terms have a nonzero index");
                let left = n.pow(pos as u32);
                let right = n.pow((i - pos) as u32);
                push_kron_block(&mut triplets, f1, left, right, row, row);
                for l in 0..a_k {
                    let mut target = Vec::with_capacity(i + 2);
                    target.extend_from_slice(&term.tuple[..pos]);
                    target.push(l);
                    target.push(a_k - 1 - l);
                    target.extend_from_slice(&term.tuple[pos + 1..]);
                    if i + 1 > c {
                        return Err(Error::MissingColumn {
                            level: i + 1,
                            tuple: target,
                        });
                    }
                    let col_term = layout.tuple_position(i + 1, &target)?;
                    push_kron_block(&mut triplets, f2, left, right, row, layout.offsets[col_term]);
                }
            }
        }
    }

    let matrix_a = CsrMatrix::from_triplets(total, total, triplets)?;
    let sparsity_s_a = matrix_a.max_row_nnz();
    Ok(EmbeddedSystem {
        matrix_a,
        vector_b: b,
        layout: layout.clone(),
        sparsity_s_a,
    })
}

/// Enumerates and assembles in one step.
pub fn build_embedding(sys: &QuadraticSystem, c: usize) -> Result<EmbeddedSystem> {
    let layout = enumerate_layout(sys.n(), c)?;
    assemble(sys, &layout)
}

pub fn extract_block(y: &DVector<f64>, layout: &EmbeddingLayout, term: &TermIndex) -> Result<DVector<f64>> {
    if y.len() != layout.total_dim_n {
        return Err(Error::DimensionMismatch {
            what: "solution vector",
            expected: layout.total_dim_n,
            found: y.len(),
        });
    }
    let k = layout.position(term).ok_or(Error::UnknownTerm)?;
    Ok(y.rows(layout.offsets[k], layout.block_dims[k]).into_owned())
}

/// The `y` the embedding is built to reproduce, packed from the sequential
/// recursion: `Σνᵢ`, the split chain `F₀^{⊗r}⊗ν₀^{⊗i+1−r}`, and the products.
pub fn pack_series(sys: &QuadraticSystem, layout: &EmbeddingLayout, series: &HomotopySeries) -> Result<DVector<f64>> {
    if series.order_c < layout.order_c {
        return Err(Error::Precondition(format!(
            "series of order {} cannot fill a layout of order {}",
            series.order_c, layout.order_c
        )));
    }
    let nus = &series.nus;
    let sum = nus[..=layout.order_c]
        .iter()
        .fold(DVector::zeros(sys.n()), |acc, v| acc + v);
    let mut y = DVector::zeros(layout.total_dim_n);
    for (k, term) in layout.terms.iter().enumerate() {
        let block = if term.is_y0() {
            sum.clone()
        } else if let Some(r) = term.chain_position() {
            kron_vec(
                &kron_power(sys.f0(), r),
                &kron_power(&nus[0], term.level + 1 - r),
            )
        } else {
            term.tuple
                .iter()
                .fold(DVector::from_element(1, 1.0), |acc, &a| kron_vec(&acc, &nus[a as usize]))
        };
        y.rows_mut(layout.offsets[k], layout.block_dims[k]).copy_from(&block);
    }
    Ok(y)
}

//! Compressed sparse row storage, Kronecker block expansion, and a sparse LU
//! factorization used for every linear solve in the crate.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Real sparse matrix in CSR form. Column indices within a row are sorted and
/// unique; explicit zeros are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicate coordinates
    /// are summed, entries that sum to exactly zero are dropped. The result does
    /// not depend on the order of `triplets`.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        for &(r, c, v) in &triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::IndexOutOfBounds {
                    what: "triplet",
                    row: r,
                    col: c,
                    nrows,
                    ncols,
                });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("triplet value"));
            }
        }
        // Sorting by (row, col, value bits) makes duplicate summation order, and
        // hence the rounded sum, independent of the input order.
        triplets.sort_unstable_by(|a, b| {
            (a.0, a.1)
                .cmp(&(b.0, b.1))
                .then_with(|| a.2.total_cmp(&b.2))
        });

        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut iter = triplets.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v != 0.0 {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Ok(Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut triplets = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v != 0.0 {
                    triplets.push((r, c, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), triplets)
            .expect("dense entries are in bounds")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    /// Iterates stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn max_row_nnz(&self) -> usize {
        (0..self.nrows)
            .map(|r| self.indptr[r + 1] - self.indptr[r])
            .max()
            .unwrap_or(0)
    }

    pub fn max_col_nnz(&self) -> usize {
        let mut counts = vec![0usize; self.ncols];
        for &c in &self.indices {
            counts[c] += 1;
        }
        counts.into_iter().max().unwrap_or(0)
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.ncols, "mul_vec length mismatch");
        DVector::from_iterator(
            self.nrows,
            (0..self.nrows).map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum::<f64>()
            }),
        )
    }

    pub fn transpose_mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.nrows, "transpose_mul_vec length mismatch");
        let mut out = DVector::zeros(self.ncols);
        for (r, c, v) in self.iter() {
            out[c] += v * x[r];
        }
        out
    }

    pub fn scale(&self, factor: f64) -> Self {
        if factor == 0.0 {
            return Self::from_triplets(self.nrows, self.ncols, Vec::new())
                .expect("empty matrix");
        }
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<_> = self.iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &triplets)
            .map_err(|_| Error::SingularMatrix("sparse structure could not be built"))
    }
}

/// Emits the triplets of `I^{⊗k} ⊗ M ⊗ I^{⊗m}` shifted by `(row_offset, col_offset)`,
/// where `left` = nᵏ and `right` = nᵐ are the identity dimensions on each side.
pub fn push_kron_block(
    out: &mut Vec<(usize, usize, f64)>,
    block: &CsrMatrix,
    left: usize,
    right: usize,
    row_offset: usize,
    col_offset: usize,
) {
    let (p, q) = (block.nrows(), block.ncols());
    for a in 0..left {
        for (r, c, v) in block.iter() {
            let row_base = row_offset + (a * p + r) * right;
            let col_base = col_offset + (a * q + c) * right;
            for b in 0..right {
                out.push((row_base + b, col_base + b, v));
            }
        }
    }
}

/// Emits an identity block of size `dim` at `(row_offset, col_offset)`.
pub fn push_identity_block(
    out: &mut Vec<(usize, usize, f64)>,
    dim: usize,
    row_offset: usize,
    col_offset: usize,
) {
    out.extend((0..dim).map(|t| (row_offset + t, col_offset + t, 1.0)));
}

/// Dense Kronecker product of two vectors, `(a ⊗ b)[i·len(b) + j] = a[i]·b[j]`.
pub fn kron_vec(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let nb = b.len();
    DVector::from_fn(a.len() * nb, |k, _| a[k / nb] * b[k % nb])
}

/// `v^{⊗power}`; `power = 0` gives the scalar vector `[1]`.
pub fn kron_power(v: &DVector<f64>, power: usize) -> DVector<f64> {
    (0..power).fold(DVector::from_element(1, 1.0), |acc, _| kron_vec(&acc, v))
}

/// Sparse LU factorization with partial pivoting of a square matrix.
#[derive(Debug, Clone)]
pub struct SparseLu {
    dim: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl SparseLu {
    pub fn factor(matrix: &CsrMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                what: "square matrix",
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let lu = matrix
            .to_faer()?
            .sp_lu()
            .map_err(|_| Error::SingularMatrix("LU factorization failed"))?;
        let factored = Self {
            dim: matrix.nrows(),
            lu,
        };
        // A zero pivot surfaces as non-finite output rather than an error.
        let probe = DVector::from_fn(factored.dim, |i, _| 1.0 + (i as f64 * 0.7548776662).sin());
        factored.solve(&probe)?;
        factored.solve_transpose(&probe)?;
        Ok(factored)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        self.solve_with(rhs, false)
    }

    pub fn solve_transpose(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        self.solve_with(rhs, true)
    }

    fn solve_with(&self, rhs: &DVector<f64>, transpose: bool) -> Result<DVector<f64>> {
        if rhs.len() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "right-hand side",
                expected: self.dim,
                found: rhs.len(),
            });
        }
        let mut work = Mat::<f64>::from_fn(self.dim, 1, |i, _| rhs[i]);
        if transpose {
            self.lu.solve_transpose_in_place(work.as_mut());
        } else {
            self.lu.solve_in_place(work.as_mut());
        }
        let out = DVector::from_fn(self.dim, |i, _| work[(i, 0)]);
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(Error::SingularMatrix("zero pivot"))
        }
    }
}

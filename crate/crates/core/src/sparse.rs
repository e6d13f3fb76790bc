//! Compressed sparse row storage.

use std::ops::{AddAssign, Mul};

/// Sparsity pattern in compressed sparse row form with sorted column indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsityPattern {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl SparsityPattern {
    /// Builds a pattern from per-row column lists; duplicates are removed.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<usize>>) -> Self {
        let nrows = rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_unstable();
            row.dedup();
            assert!(row.last().is_none_or(|&c| c < ncols), "column index out of range");
            col_idx.extend_from_slice(&row);
            row_ptr.push(col_idx.len());
        }
        Self { nrows, ncols, row_ptr, col_idx }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Storage position of entry `(i, j)`, if it is structurally present.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        self.row(i).binary_search(&j).ok().map(|k| start + k)
    }

    pub fn is_structurally_symmetric(&self) -> bool {
        self.nrows == self.ncols && (0..self.nrows).all(|i| self.row(i).iter().all(|&j| self.find(j, i).is_some()))
    }

    /// For each stored entry `(i, j)`, the storage position of `(j, i)`.
    /// Requires a structurally symmetric pattern.
    pub fn transpose_positions(&self) -> Vec<usize> {
        let mut out = vec![0; self.nnz()];
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                out[k] = self.find(j, i).expect("pattern is not structurally symmetric");
            }
        }
        out
    }
}

/// Sparse matrix in compressed sparse row form.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    pattern: std::sync::Arc<SparsityPattern>,
    values: Vec<T>,
}

impl<T: Copy + Default> CsrMatrix<T> {
    pub fn zeros(pattern: std::sync::Arc<SparsityPattern>) -> Self {
        let values = vec![T::default(); pattern.nnz()];
        Self { pattern, values }
    }

    pub fn from_values(pattern: std::sync::Arc<SparsityPattern>, values: Vec<T>) -> Self {
        assert_eq!(pattern.nnz(), values.len());
        Self { pattern, values }
    }

    pub fn pattern(&self) -> &std::sync::Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn nrows(&self) -> usize {
        self.pattern.nrows
    }

    pub fn ncols(&self) -> usize {
        self.pattern.ncols
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    /// Value of entry `(i, j)`; structurally absent entries are zero.
    pub fn get(&self, i: usize, j: usize) -> T {
        self.pattern.find(i, j).map_or(T::default(), |k| self.values[k])
    }

    /// Iterates the stored entries as `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows()).flat_map(move |i| {
            let range = self.pattern.row_ptr[i]..self.pattern.row_ptr[i + 1];
            range.map(move |k| (i, self.pattern.col_idx[k], self.values[k]))
        })
    }
}

impl<T: Copy + Default + AddAssign> CsrMatrix<T> {
    /// Adds `value` to entry `(i, j)`, which must be structurally present.
    pub fn add(&mut self, i: usize, j: usize, value: T) {
        let k = self.pattern.find(i, j).unwrap_or_else(|| panic!("entry ({i}, {j}) is not in the sparsity pattern"));
        self.values[k] += value;
    }
}

impl CsrMatrix<f64> {
    /// `y = A x` for a real or complex vector `x`.
    pub fn mul_vec<X>(&self, x: &[X]) -> Vec<X>
    where
        X: Copy + Default + AddAssign + Mul<f64, Output = X>,
    {
        assert_eq!(x.len(), self.ncols());
        let mut y = vec![X::default(); self.nrows()];
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = X::default();
            for k in self.pattern.row_ptr[i]..self.pattern.row_ptr[i + 1] {
                acc += x[self.pattern.col_idx[k]] * self.values[k];
            }
            *yi = acc;
        }
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { pattern: self.pattern.clone(), values: self.values.iter().map(|v| v * s).collect() }
    }

    /// Largest `|a_ij - a_ji|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        self.triplets().fold(0.0, |m, (i, j, v)| m.max((v - self.get(j, i)).abs()))
    }
}

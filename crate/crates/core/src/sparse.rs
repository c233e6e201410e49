//! Compressed sparse row matrices and deterministic assembly builders.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Sparse matrix in CSR layout with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    /// Builds a matrix from `(row, col) -> value` entries (already summed).
    pub fn from_map(nrows: usize, ncols: usize, entries: &BTreeMap<(usize, usize), f64>) -> Self {
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for (&(i, j), &v) in entries {
            debug_assert!(i < nrows && j < ncols);
            indptr[i + 1] += 1;
            indices.push(j);
            values.push(v);
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    /// Builds a matrix from a dense row-major array, dropping exact zeros.
    pub fn from_dense(nrows: usize, ncols: usize, dense: &[f64]) -> Self {
        let mut map = BTreeMap::new();
        for i in 0..nrows {
            for j in 0..ncols {
                let v = dense[i * ncols + j];
                if v != 0.0 {
                    map.insert((i, j), v);
                }
            }
        }
        Self::from_map(nrows, ncols, &map)
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

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    /// All stored entries as `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// `y = Aᵀ x`.
    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "matvec dimension mismatch");
        let mut y = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                y[j] += v * x[i];
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut map = BTreeMap::new();
        for (i, j, v) in self.triplets() {
            map.insert((j, i), v);
        }
        Self::from_map(self.ncols, self.nrows, &map)
    }

    /// Row sums.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    /// `alpha A + beta B` for matrices of the same shape.
    pub fn add_scaled(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut map = BTreeMap::new();
        for (i, j, v) in self.triplets() {
            *map.entry((i, j)).or_insert(0.0) += alpha * v;
        }
        for (i, j, v) in other.triplets() {
            *map.entry((i, j)).or_insert(0.0) += beta * v;
        }
        Self::from_map(self.nrows, self.ncols, &map)
    }

    /// Row-sum lumped diagonal matrix.
    pub fn lumped(&self) -> Self {
        Self::from_diagonal(&self.row_sums())
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nrows);
        (0..self.nrows)
            .map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>())
            .sum()
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        self.triplets()
            .map(|(i, j, _)| i.abs_diff(j))
            .max()
            .unwrap_or(0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A_ij - A_ji|`; exactly zero for symmetrically assembled matrices.
    pub fn asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// Symmetric permutation `P A Pᵀ` with `new index = perm_inv[old index]`.
    pub fn permuted(&self, perm_inv: &[usize]) -> Self {
        let mut map = BTreeMap::new();
        for (i, j, v) in self.triplets() {
            map.insert((perm_inv[i], perm_inv[j]), v);
        }
        Self::from_map(self.nrows, self.ncols, &map)
    }

    /// Rows `rows` and columns `cols` as a new matrix.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_pos = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            col_pos[c] = k;
        }
        let mut map = BTreeMap::new();
        for (ri, &r) in rows.iter().enumerate() {
            for (j, v) in self.row(r) {
                if col_pos[j] != usize::MAX {
                    map.insert((ri, col_pos[j]), v);
                }
            }
        }
        Self::from_map(rows.len(), cols.len(), &map)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows * self.ncols];
        for (i, j, v) in self.triplets() {
            d[i * self.ncols + j] = v;
        }
        d
    }

    /// Writes `row col value` lines (zero-based, 17 significant digits).
    pub fn write_coordinate(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "% {} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (i, j, v) in self.triplets() {
            writeln!(out, "{i} {j} {v:.16e}")?;
        }
        out.flush().map_err(Error::from)
    }
}

/// Accumulates contributions in insertion order; identical insertion
/// sequences give bit-identical matrices.
#[derive(Debug, Clone, Default)]
pub struct MatrixBuilder {
    entries: BTreeMap<(usize, usize), f64>,
}

impl MatrixBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        *self.entries.entry((i, j)).or_insert(0.0) += v;
    }

    pub fn build(self, nrows: usize, ncols: usize) -> CsrMatrix {
        CsrMatrix::from_map(nrows, ncols, &self.entries)
    }
}

/// Accumulates the upper triangle of a symmetric matrix and mirrors it, so
/// the result is exactly symmetric.
#[derive(Debug, Clone, Default)]
pub struct SymmetricBuilder {
    upper: BTreeMap<(usize, usize), f64>,
}

impl SymmetricBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `v` to entry `(i, j)` and, implicitly, `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let key = if i <= j { (i, j) } else { (j, i) };
        *self.upper.entry(key).or_insert(0.0) += v;
    }

    pub fn build(self, n: usize) -> CsrMatrix {
        let mut full = BTreeMap::new();
        for ((i, j), v) in self.upper {
            full.insert((i, j), v);
            if i != j {
                full.insert((j, i), v);
            }
        }
        CsrMatrix::from_map(n, n, &full)
    }
}

//! Banded Cholesky factorization for symmetric positive definite matrices.
//!
//! Assembled blocks are factored once and reused for every right-hand side,
//! so each Schwarz step costs a pair of triangular solves.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Diagnostics attached to a direct solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    /// `‖A x - b‖₂`.
    pub residual_norm: f64,
    /// Smallest pivot met during factorization.
    pub factorization_pivots_min: f64,
    pub dimension: usize,
}

/// Lower-triangular band factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    bandwidth: usize,
    // row i holds L[i][i - bandwidth ..= i], left-padded with zeros
    band: Vec<f64>,
    min_pivot: f64,
}

impl CholeskyFactor {
    /// Factors a symmetric matrix, reading only its lower triangle.
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        let n = a.nrows();
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut band = vec![0.0; n * w];
        for (i, j, v) in a.triplets() {
            if j <= i {
                band[i * w + (bw - (i - j))] = v;
            }
        }
        let mut min_pivot = f64::INFINITY;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let jlo = j.saturating_sub(bw).max(lo);
                let mut s = band[i * w + (bw - (i - j))];
                for k in jlo..j {
                    s -= band[i * w + (bw - (i - k))] * band[j * w + (bw - (j - k))];
                }
                if i == j {
                    min_pivot = min_pivot.min(s);
                    if !(s > 0.0) {
                        return Err(Error::NotSpd { row: i, pivot: s });
                    }
                    band[i * w + bw] = s.sqrt();
                } else {
                    band[i * w + (bw - (i - j))] = s / band[j * w + bw];
                }
            }
        }
        Ok(Self {
            n,
            bandwidth: bw,
            band,
            min_pivot,
        })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    /// Solves `A x = b` with the stored factor.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: b.len(),
            });
        }
        let (bw, w) = (self.bandwidth, self.bandwidth + 1);
        let mut x = b.to_vec();
        for i in 0..self.n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.band[i * w + (bw - (i - k))] * x[k];
            }
            x[i] = s / self.band[i * w + bw];
        }
        for i in (0..self.n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + bw + 1).min(self.n) {
                s -= self.band[k * w + (bw - (k - i))] * x[k];
            }
            x[i] = s / self.band[i * w + bw];
        }
        Ok(x)
    }
}

/// `‖A x - b‖₂`.
pub fn residual_norm(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    a.matvec(x)
        .iter()
        .zip(b)
        .map(|(ax, bi)| (ax - bi) * (ax - bi))
        .sum::<f64>()
        .sqrt()
}

/// Factors `a` and solves `a x = b`.
pub fn cholesky_solve(a: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
    let factor = CholeskyFactor::new(a)?;
    let x = factor.solve(b)?;
    let report = SolveReport {
        residual_norm: residual_norm(a, &x, b),
        factorization_pivots_min: factor.min_pivot(),
        dimension: factor.dimension(),
    };
    Ok((x, report))
}

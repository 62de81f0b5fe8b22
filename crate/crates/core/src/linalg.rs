//! Dense linear algebra kernels used across the crate: a row-major matrix
//! type, matrix/vector products, and LU factorization with partial pivoting.
//!
//! Everything here is plain `f64`; problem sizes are desk scale (a few
//! thousand nodes at most) so dense storage wins over sparse formats.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is numerically singular (pivot {pivot:e} in column {col})")]
    Singular { col: usize, pivot: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Index of the first non-finite entry, if any.
    pub fn find_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|v| !v.is_finite())
            .map(|p| (p / self.cols, p % self.cols))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&v| v >= 0.0)
    }

    /// `self * x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `x^T * self`, returned as a plain vector.
    pub fn vecmat(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "vecmat dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += xi * a;
            }
        }
        out
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                let src = other.row(k);
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `self - other`.
    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// LU factorization with partial pivoting of a square matrix.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: Mat,
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn factor(m: &Mat) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::NotSquare {
                rows: m.rows,
                cols: m.cols,
            });
        }
        if let Some((row, col)) = m.find_non_finite() {
            return Err(LinalgError::NonFinite { row, col });
        }
        let n = m.rows;
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = m.inf_norm();
        // Pivot threshold: rank tolerance relative to the matrix scale.
        let tiny = f64::EPSILON * scale.max(1e-300) * n as f64;
        for col in 0..n {
            let mut pivot_row = col;
            let mut pivot_val = lu.get(col, col).abs();
            for r in col + 1..n {
                let v = lu.get(r, col).abs();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = r;
                }
            }
            if pivot_val <= tiny {
                return Err(LinalgError::Singular {
                    col,
                    pivot: pivot_val,
                });
            }
            if pivot_row != col {
                perm.swap(col, pivot_row);
                for j in 0..n {
                    let a = lu.get(col, j);
                    let b = lu.get(pivot_row, j);
                    lu.set(col, j, b);
                    lu.set(pivot_row, j, a);
                }
            }
            let inv_pivot = 1.0 / lu.get(col, col);
            for r in col + 1..n {
                let factor = lu.get(r, col) * inv_pivot;
                lu.set(r, col, factor);
                if factor != 0.0 {
                    for j in col + 1..n {
                        let v = lu.get(r, j) - factor * lu.get(col, j);
                        lu.set(r, j, v);
                    }
                }
            }
        }
        Ok(LuFactors { lu, perm })
    }

    pub fn n(&self) -> usize {
        self.lu.rows
    }

    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n();
        assert_eq!(b.len(), n, "solve dimension mismatch");
        // Forward substitution on the permuted right-hand side.
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu.get(i, j) * x[j];
            }
            x[i] = acc;
        }
        // Back substitution.
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu.get(i, j) * x[j];
            }
            x[i] = acc / self.lu.get(i, i);
        }
        x
    }

    pub fn inverse(&self) -> Mat {
        let n = self.n();
        let mut inv = Mat::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.solve(&e);
            e[j] = 0.0;
            for (i, v) in col.into_iter().enumerate() {
                inv.set(i, j, v);
            }
        }
        inv
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn inf_norm_vec(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn lu_solves_small_system() {
        let m = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let lu = LuFactors::factor(&m).unwrap();
        let x = lu.solve(&[5.0, 10.0]);
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn lu_rejects_singular() {
        let m = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(
            LuFactors::factor(&m),
            Err(LinalgError::Singular { .. })
        ));
    }

    #[test]
    fn lu_rejects_non_square_and_non_finite() {
        let m = Mat::zeros(2, 3);
        assert!(matches!(
            LuFactors::factor(&m),
            Err(LinalgError::NotSquare { .. })
        ));
        let mut m = Mat::identity(2);
        m.set(0, 1, f64::NAN);
        assert!(matches!(
            LuFactors::factor(&m),
            Err(LinalgError::NonFinite { .. })
        ));
    }

    #[test]
    fn inverse_matches_solve() {
        let mut rng = StdRng::seed_from_u64(7);
        let n = 8;
        let m = Mat::from_fn(n, n, |i, j| {
            if i == j {
                2.0 + rng.random::<f64>()
            } else {
                rng.random::<f64>() * 0.2
            }
        });
        let lu = LuFactors::factor(&m).unwrap();
        let inv = lu.inverse();
        let prod = m.matmul(&inv);
        assert!(prod.max_abs_diff(&Mat::identity(n)) < 1e-10);
    }

    #[test]
    fn matvec_vecmat_agree_with_matmul() {
        let m = Mat::from_rows(&[vec![1.0, 2.0, 0.5], vec![0.0, 1.0, 4.0]]);
        let x = vec![1.0, -1.0, 2.0];
        let y = m.matvec(&x);
        assert_eq!(y, vec![1.0 - 2.0 + 1.0, -1.0 + 8.0]);
        let z = m.vecmat(&[1.0, 2.0]);
        assert_eq!(z, vec![1.0, 4.0, 8.5]);
    }
}

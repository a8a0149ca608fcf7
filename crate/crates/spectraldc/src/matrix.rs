//! Dense column-major matrix storage plus the cheap entrywise helpers
//! (norms, Gershgorin bound, transposes, block copies). The blocked
//! compute kernels that report memory traffic live in [`crate::kernels`].

use std::fmt;
use std::ops::Range;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense rectangular matrix in column-major order.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

/// Matrix norm selector for [`Matrix::norm`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    /// Maximum absolute column sum.
    One,
    /// Maximum absolute row sum.
    Inf,
    /// Frobenius norm.
    Fro,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Build from a column-major buffer; `data.len()` must equal `rows*cols`.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "column-major buffer has {} entries, expected {}",
                data.len(),
                rows * cols
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Build from row-major nested slices (test convenience).
    pub fn from_rows(rows: &[&[T]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        Matrix::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn diagonal(entries: &[T]) -> Self {
        let n = entries.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Conjugate transpose (plain transpose over `f64`).
    pub fn adjoint(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|x| x.scale(s))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    /// Copy of the block `rows x cols` (half-open ranges).
    pub fn block(&self, rows: Range<usize>, cols: Range<usize>) -> Self {
        assert!(rows.end <= self.rows && cols.end <= self.cols);
        Matrix::from_fn(rows.len(), cols.len(), |i, j| {
            self[(rows.start + i, cols.start + j)]
        })
    }

    pub fn set_block(&mut self, row0: usize, col0: usize, block: &Matrix<T>) {
        assert!(row0 + block.rows <= self.rows && col0 + block.cols <= self.cols);
        for j in 0..block.cols {
            for i in 0..block.rows {
                self[(row0 + i, col0 + j)] = block[(i, j)];
            }
        }
    }

    pub fn norm(&self, which: Norm) -> f64 {
        match which {
            Norm::One => (0..self.cols)
                .map(|j| self.col(j).iter().map(|x| x.abs()).sum::<f64>())
                .fold(0.0, f64::max),
            Norm::Inf => {
                let mut row_sums = vec![0.0; self.rows];
                for j in 0..self.cols {
                    for (i, x) in self.col(j).iter().enumerate() {
                        row_sums[i] += x.abs();
                    }
                }
                row_sums.into_iter().fold(0.0, f64::max)
            }
            Norm::Fro => self.data.iter().map(|x| x.abs_sq()).sum::<f64>().sqrt(),
        }
    }

    pub fn norm_one(&self) -> f64 {
        self.norm(Norm::One)
    }

    pub fn norm_fro(&self) -> f64 {
        self.norm(Norm::Fro)
    }

    pub fn norm_inf(&self) -> f64 {
        self.norm(Norm::Inf)
    }

    /// Largest entry modulus.
    pub fn norm_max(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Deviation from (conjugate) symmetry, `max |A - A^H|`.
    pub fn symmetry_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for j in 0..self.cols {
            for i in 0..self.rows.min(self.cols) {
                if i < self.cols && j < self.rows {
                    dev = dev.max((self[(i, j)] - self[(j, i)].conj()).abs());
                }
            }
        }
        dev
    }

    /// Promote to complex storage.
    pub fn to_complex(&self) -> Matrix<Complex64> {
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].to_complex())
    }
}

impl Matrix<Complex64> {
    /// Real part as an `f64` matrix.
    pub fn real_part(&self) -> Matrix<f64> {
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].re)
    }

    /// Largest imaginary-part modulus, to check a matrix is numerically real.
    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }
}

impl<T: Scalar> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl<T: Scalar> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

impl<T: Scalar> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        let max_rows = self.rows.min(8);
        let max_cols = self.cols.min(8);
        for i in 0..max_rows {
            write!(f, "  ")?;
            for j in 0..max_cols {
                write!(f, "{:>14} ", format!("{:.4e}", self[(i, j)].to_complex()))?;
            }
            writeln!(f, "{}", if self.cols > max_cols { "..." } else { "" })?;
        }
        if self.rows > max_rows {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

/// Gershgorin upper bound on the spectral radius:
/// `max_i (|a_ii| + sum_{j != i} |a_ij|)` over rows.
pub fn gershgorin_radius<T: Scalar>(a: &Matrix<T>) -> f64 {
    assert!(a.is_square(), "gershgorin_radius needs a square matrix");
    let n = a.rows();
    let mut best: f64 = 0.0;
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..n {
            sum += a[(i, j)].abs();
        }
        best = best.max(sum);
    }
    best
}

/// Gershgorin interval `[lo, hi]` containing the spectrum of a symmetric
/// real matrix: every eigenvalue lies within row-sum distance of a diagonal.
pub fn gershgorin_interval(a: &Matrix<f64>) -> (f64, f64) {
    assert!(a.is_square());
    let n = a.rows();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut r = 0.0;
        for j in 0..n {
            if j != i {
                r += a[(i, j)].abs();
            }
        }
        lo = lo.min(a[(i, i)] - r);
        hi = hi.max(a[(i, i)] + r);
    }
    if n == 0 {
        (0.0, 0.0)
    } else {
        (lo, hi)
    }
}

//! Row-major dense matrices and the entrywise norms used throughout the solvers.

use std::fmt;
use std::num::NonZeroUsize;

use faer::linalg::matmul::matmul;
use faer::{Accum, MatMut, MatRef, Par};

use crate::error::{Error, Result};

/// A dense real matrix stored in row-major order.
///
/// Every constructor rejects NaN and infinite entries, so all values handed
/// out by the public API are finite.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch { rows, cols, len: data.len() });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { row: pos / cols.max(1), col: pos % cols.max(1) });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::dim("from_rows", format!("row {i} has {} entries, expected {cols}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    /// Builds a matrix entry by entry.
    ///
    /// Panics if `f` produces a non-finite value.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let v = f(i, j);
                assert!(v.is_finite(), "non-finite entry at ({i}, {j})");
                data.push(v);
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 })
    }

    /// Wraps a buffer produced by internal arithmetic on finite inputs.
    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        Self::from_vec_unchecked(self.cols, self.rows, out)
    }

    /// Restricts the matrix to the given row and column index lists, in order.
    pub fn select(&self, row_idx: &[usize], col_idx: &[usize]) -> Result<Self> {
        if let Some(&i) = row_idx.iter().find(|&&i| i >= self.rows) {
            return Err(Error::dim("select", format!("row index {i} >= {}", self.rows)));
        }
        if let Some(&j) = col_idx.iter().find(|&&j| j >= self.cols) {
            return Err(Error::dim("select", format!("column index {j} >= {}", self.cols)));
        }
        let mut data = Vec::with_capacity(row_idx.len() * col_idx.len());
        for &i in row_idx {
            let row = self.row(i);
            data.extend(col_idx.iter().map(|&j| row[j]));
        }
        Ok(Self::from_vec_unchecked(row_idx.len(), col_idx.len(), data))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let data: Vec<f64> = self.data.iter().map(|&x| f(x)).collect();
        Self::from_vec_unchecked(self.rows, self.cols, data)
    }

    fn zip_with(&self, other: &Self, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::dim(op, format!("{:?} vs {:?}", self.shape(), other.shape())));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self::from_vec_unchecked(self.rows, self.cols, data))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        self.map(|x| alpha * x)
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::dim("matmul", format!("{:?} * {:?}", self.shape(), rhs.shape())));
        }
        Ok(gemm(self.as_faer(), rhs.as_faer()))
    }

    /// Product `selfᵀ * rhs` without materializing the transpose.
    pub fn t_matmul(&self, rhs: &Self) -> Result<Self> {
        if self.rows != rhs.rows {
            return Err(Error::dim("t_matmul", format!("{:?}ᵀ * {:?}", self.shape(), rhs.shape())));
        }
        Ok(gemm(self.as_faer().transpose(), rhs.as_faer()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(self)
    }

    pub fn l1_norm(&self) -> f64 {
        l1_norm(self)
    }

    pub fn linf_norm(&self) -> f64 {
        linf_norm(self)
    }

    pub(crate) fn as_faer(&self) -> MatRef<'_, f64> {
        MatRef::from_row_major_slice(&self.data, self.rows, self.cols)
    }

    pub(crate) fn as_faer_mut(&mut self) -> MatMut<'_, f64> {
        MatMut::from_row_major_slice_mut(&mut self.data, self.rows, self.cols)
    }

    pub(crate) fn from_faer(m: MatRef<'_, f64>) -> Self {
        let (rows, cols) = (m.nrows(), m.ncols());
        let mut out = Self::zeros(rows, cols);
        out.as_faer_mut().copy_from(m);
        out
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            let row = self.row(i);
            let shown: Vec<String> = row.iter().take(8).map(|x| format!("{x:.6e}")).collect();
            let more = if self.cols > 8 { ", ..." } else { "" };
            writeln!(f, "  [{}{more}]", shown.join(", "))?;
        }
        if self.rows > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

/// Current parallelism setting for the dense kernels.
pub(crate) fn par() -> Par {
    faer::get_global_parallelism()
}

/// Caps the number of threads used by dense factorizations and products.
/// `0` lets the runtime decide, `1` runs sequentially.
pub fn set_dense_threads(threads: usize) {
    let par = match NonZeroUsize::new(threads) {
        Some(n) if n.get() == 1 => Par::Seq,
        Some(n) => Par::Rayon(n),
        None => Par::rayon(0),
    };
    faer::set_global_parallelism(par);
}

pub(crate) fn gemm(lhs: MatRef<'_, f64>, rhs: MatRef<'_, f64>) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(lhs.nrows(), rhs.ncols());
    if lhs.ncols() > 0 {
        matmul(out.as_faer_mut(), Accum::Replace, lhs, rhs, 1.0, par());
    }
    out
}

/// Square root of the sum of squared entries.
pub fn frobenius_norm(m: &DenseMatrix) -> f64 {
    m.data.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Sum of absolute values of the entries.
pub fn l1_norm(m: &DenseMatrix) -> f64 {
    m.data.iter().map(|x| x.abs()).sum()
}

/// Largest absolute entry (0 for an empty matrix).
pub fn linf_norm(m: &DenseMatrix) -> f64 {
    m.data.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Number of entries whose magnitude exceeds `threshold`.
pub fn l0_count(m: &DenseMatrix, threshold: f64) -> usize {
    m.data.iter().filter(|x| x.abs() > threshold).count()
}

/// Default threshold for [`l0_count`] on recovered sparse parts: `1e-6 * linf`.
pub fn default_l0_threshold(m: &DenseMatrix) -> f64 {
    1e-6 * linf_norm(m)
}

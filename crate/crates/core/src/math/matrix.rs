use std::fmt;

use num_traits::{Float, NumAssign, NumCast};

use crate::error::{Error, Result};

/// Scalar types the numeric kernel is generic over. Blanket-implemented for
/// anything float-like; the crate-root aliases pin `f64` for the model stack.
pub trait Scalar: Float + NumAssign + fmt::Debug + fmt::Display + Send + Sync + 'static {
    fn from_f64(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("finite f64 converts to any Scalar")
    }
}

impl<T> Scalar for T where T: Float + NumAssign + fmt::Debug + fmt::Display + Send + Sync + 'static {}

/// Dense row-major 2-D array, the universal numeric carrier.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "data length {} != {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    /// Test/setup helper: build from nested rows.
    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Ok(Mat {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = S::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> S {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: S) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [S] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn fill(&mut self, v: S) {
        self.data.fill(v);
    }

    pub fn transpose(&self) -> Mat<S> {
        let mut out = Mat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// self += other, elementwise.
    pub fn add_assign(&mut self, other: &Mat<S>) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
        Ok(())
    }

    /// self += scale * other, elementwise.
    pub fn add_scaled(&mut self, other: &Mat<S>, scale: S) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * *b;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: S) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    fn check_same_shape(&self, other: &Mat<S>) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

/// Standard product `a[m×k] · b[k×n]`.
///
/// Summation runs over k in ascending order for every output element, so the
/// result is bit-identical to the naive `for i { for j { for k } }` loop and
/// reproducible across runs. The loop nest is i-k-j (axpy inner loop), which
/// preserves that order per element.
pub fn matmul<S: Scalar>(a: &Mat<S>, b: &Mat<S>) -> Result<Mat<S>> {
    if a.cols != b.rows {
        return Err(Error::Shape(format!(
            "matmul {}x{} · {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = Mat::zeros(a.rows, b.cols);
    let n = b.cols;
    for i in 0..a.rows {
        let a_row = a.row(i);
        let out_row = &mut out.data[i * n..(i + 1) * n];
        for (k, &aik) in a_row.iter().enumerate() {
            let b_row = &b.data[k * n..(k + 1) * n];
            for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                *o += aik * bkj;
            }
        }
    }
    debug_assert!(out.is_finite(), "matmul produced non-finite entries");
    Ok(out)
}

/// `a[m×k] · bᵀ` where `b` is `n×k`; returns `m×n`.
///
/// Materializes `bᵀ` so the k-ascending summation order matches `matmul`.
pub fn matmul_bt<S: Scalar>(a: &Mat<S>, b: &Mat<S>) -> Result<Mat<S>> {
    if a.cols != b.cols {
        return Err(Error::Shape(format!(
            "matmul_bt {}x{} · ({}x{})ᵀ",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    matmul(a, &b.transpose())
}

/// `aᵀ · b` where `a` is `k×m` and `b` is `k×n`; returns `m×n`.
///
/// k is the outer loop so every output element accumulates in ascending-k
/// order without materializing `aᵀ`.
pub fn matmul_at<S: Scalar>(a: &Mat<S>, b: &Mat<S>) -> Result<Mat<S>> {
    if a.rows != b.rows {
        return Err(Error::Shape(format!(
            "matmul_at ({}x{})ᵀ · {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let (m, n) = (a.cols, b.cols);
    let mut out = Mat::zeros(m, n);
    for k in 0..a.rows {
        let a_row = a.row(k);
        let b_row = b.row(k);
        for (i, &aki) in a_row.iter().enumerate() {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                *o += aki * bkj;
            }
        }
    }
    debug_assert!(out.is_finite(), "matmul_at produced non-finite entries");
    Ok(out)
}

/// Adds `bias` (a 1×n matrix) to every row of `m`.
pub fn add_bias_rows<S: Scalar>(m: &mut Mat<S>, bias: &Mat<S>) -> Result<()> {
    if bias.rows != 1 || bias.cols != m.cols {
        return Err(Error::Shape(format!(
            "bias 1x{} expected, got {}x{}",
            m.cols, bias.rows, bias.cols
        )));
    }
    let n = m.cols;
    for i in 0..m.rows {
        let row = &mut m.data[i * n..(i + 1) * n];
        for (v, &b) in row.iter_mut().zip(bias.data.iter()) {
            *v += b;
        }
    }
    Ok(())
}

/// Column sums of `m`, returned as a 1×n matrix (ascending-row order).
pub fn col_sums<S: Scalar>(m: &Mat<S>) -> Mat<S> {
    let mut out = Mat::zeros(1, m.cols);
    for r in 0..m.rows {
        let row = m.row(r);
        for (o, &v) in out.data.iter_mut().zip(row) {
            *o += v;
        }
    }
    out
}

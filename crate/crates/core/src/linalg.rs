//! Dense row-major matrices and a jittered Cholesky factorization.
//!
//! Only what the GP engine and the modal projections need: SPD factorization,
//! triangular solves (single and blocked right-hand sides), and the explicit
//! inverse used by the likelihood gradient.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Initial diagonal jitter, relative to the mean of the diagonal.
pub const JITTER_START: f64 = 1e-10;
/// Largest relative jitter tried before giving up.
pub const JITTER_MAX: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length");
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
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != T::zero() {
                    axpy(a, rhs.row(k), out_row);
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len(), "matvec shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// Largest absolute asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..i.min(self.cols) {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Dot product with independent partial sums so the loop vectorizes.
#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [T::zero(); 8];
    let chunks = n / 8;
    for c in 0..chunks {
        let ra = &a[c * 8..c * 8 + 8];
        let rb = &b[c * 8..c * 8 + 8];
        for l in 0..8 {
            acc[l] += ra[l] * rb[l];
        }
    }
    let mut tail = T::zero();
    for k in chunks * 8..n {
        tail += a[k] * b[k];
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// `y += alpha * x`
#[inline]
pub fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Lower Cholesky factor `L` of `A + jitter * I`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    /// Row-major lower triangle; the strict upper part is zero.
    l: Matrix<T>,
    jitter: T,
}

impl<T: Real> Cholesky<T> {
    /// Factorizes `a` with no jitter, failing on any nonpositive pivot.
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        factor(a, T::zero()).map_err(|min_pivot| Error::NotPositiveDefinite {
            size: a.rows(),
            max_jitter: 0.0,
            mean_diag: mean_diag(a).to_f64_lossy(),
            min_pivot: min_pivot.to_f64_lossy(),
        })
    }

    /// Factorizes `a` as is, and on failure `a + jitter * I` starting at
    /// `JITTER_START * mean(diag)` and escalating by ×10 up to
    /// `JITTER_MAX * mean(diag)`.
    pub fn with_jitter(a: &Matrix<T>) -> Result<Self> {
        let md = mean_diag(a);
        let scale = if md > T::zero() { md } else { T::one() };
        let mut last_pivot = match factor(a, T::zero()) {
            Ok(c) => return Ok(c),
            Err(p) => p,
        };
        let mut rel = JITTER_START;
        while rel <= JITTER_MAX * (1.0 + 1e-9) {
            match factor(a, scale * T::of(rel)) {
                Ok(c) => return Ok(c),
                Err(p) => last_pivot = p,
            }
            rel *= 10.0;
        }
        log::debug!("cholesky failed for n = {} at max jitter", a.rows());
        Err(Error::NotPositiveDefinite {
            size: a.rows(),
            max_jitter: JITTER_MAX * scale.to_f64_lossy(),
            mean_diag: md.to_f64_lossy(),
            min_pivot: last_pivot.to_f64_lossy(),
        })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Absolute jitter that was added to the diagonal.
    pub fn jitter(&self) -> T {
        self.jitter
    }

    pub fn factor(&self) -> &Matrix<T> {
        &self.l
    }

    /// `log |A + jitter I|`
    pub fn log_det(&self) -> T {
        let two = T::of(2.0);
        (0..self.dim()).map(|i| two * self.l[(i, i)].ln()).sum()
    }

    /// Solves `L x = b`.
    pub fn solve_lower(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x = vec![T::zero(); n];
        for i in 0..n {
            let row = self.l.row(i);
            x[i] = (b[i] - dot(&row[..i], &x[..i])) / row[i];
        }
        x
    }

    /// Solves `Lᵀ x = y`.
    pub fn solve_upper(&self, y: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(y.len(), n);
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            let row = self.l.row(i);
            x[i] /= row[i];
            let xi = x[i];
            axpy(-xi, &row[..i], &mut x[..i]);
        }
        x
    }

    /// Solves `(A + jitter I) x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// Solves `L X = B` for a block of right-hand sides (`B` is n×m).
    pub fn solve_lower_block(&self, b: &Matrix<T>) -> Matrix<T> {
        let n = self.dim();
        assert_eq!(b.rows(), n);
        let m = b.cols();
        let mut x = b.clone();
        for i in 0..n {
            let (done, rest) = x.data.split_at_mut(i * m);
            let xi = &mut rest[..m];
            let row = self.l.row(i);
            for (j, &lij) in row[..i].iter().enumerate() {
                if lij != T::zero() {
                    axpy(-lij, &done[j * m..(j + 1) * m], xi);
                }
            }
            let inv = T::one() / row[i];
            for v in xi.iter_mut() {
                *v *= inv;
            }
        }
        x
    }

    /// Explicit inverse `(A + jitter I)⁻¹`, symmetric.
    pub fn inverse(&self) -> Matrix<T> {
        let n = self.dim();
        // Row-major lower triangle of L⁻¹.
        let mut linv = Matrix::zeros(n, n);
        for i in 0..n {
            let lrow = self.l.row(i);
            let inv_d = T::one() / lrow[i];
            let (done, rest) = linv.data.split_at_mut(i * n);
            let xi = &mut rest[..n];
            xi[i] = T::one();
            for (j, &lij) in lrow[..i].iter().enumerate() {
                if lij != T::zero() {
                    axpy(-lij, &done[j * n..j * n + j + 1], &mut xi[..j + 1]);
                }
            }
            for v in xi[..=i].iter_mut() {
                *v *= inv_d;
            }
        }
        // A⁻¹ = L⁻ᵀ L⁻¹ accumulated as rank-one updates of the lower triangle.
        let mut out = Matrix::zeros(n, n);
        for k in 0..n {
            let lk = &linv.data[k * n..k * n + k + 1];
            for i in 0..=k {
                let a = lk[i];
                if a != T::zero() {
                    axpy(a, &lk[..=i], &mut out.data[i * n..i * n + i + 1]);
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                out.data[j * n + i] = out.data[i * n + j];
            }
        }
        out
    }
}

fn mean_diag<T: Real>(a: &Matrix<T>) -> T {
    let n = a.rows().min(a.cols());
    if n == 0 {
        return T::zero();
    }
    a.diagonal().into_iter().sum::<T>() / T::of_usize(n)
}

/// Plain Cholesky–Banachiewicz; on failure returns the offending pivot.
fn factor<T: Real>(a: &Matrix<T>, jitter: T) -> std::result::Result<Cholesky<T>, T> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "cholesky of non-square matrix");
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let (upper, lower) = l.data.split_at_mut(i * n);
            let li = &mut lower[..n];
            let s = if j < i {
                dot(&li[..j], &upper[j * n..j * n + j])
            } else {
                dot(&li[..j], &li[..j])
            };
            if i == j {
                let d = a[(i, i)] + jitter - s;
                if !(d > T::zero()) || !d.is_finite() {
                    return Err(d);
                }
                li[i] = d.sqrt();
            } else {
                let ljj = upper[j * n + j];
                li[j] = (a[(i, j)] - s) / ljj;
            }
        }
    }
    Ok(Cholesky { l, jitter })
}

/// Least-squares solution of `A x = b` for every column of `B` via the normal
/// equations. Fails when `AᵀA` is numerically rank deficient.
pub fn least_squares<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if a.rows() < a.cols() {
        return Err(Error::Domain(format!(
            "least squares needs rows >= cols, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let at = a.transpose();
    let ata = at.matmul(a);
    let chol = Cholesky::new(&ata).map_err(|_| Error::Domain("rank-deficient basis".into()))?;
    let n = ata.rows();
    let max_d = ata.diagonal().into_iter().fold(T::zero(), T::max);
    let min_l = (0..n).map(|i| chol.l[(i, i)]).fold(T::infinity(), T::min);
    if min_l * min_l <= max_d * T::epsilon() * T::of_usize(n.max(1) * 16) {
        return Err(Error::Domain("rank-deficient basis".into()));
    }
    let atb = at.matmul(b);
    let y = chol.solve_lower_block(&atb);
    // Back substitution column by column.
    let mut x = Matrix::zeros(n, b.cols());
    for c in 0..b.cols() {
        let col: Vec<T> = (0..n).map(|i| y[(i, c)]).collect();
        let sol = chol.solve_upper(&col);
        for i in 0..n {
            x[(i, c)] = sol[i];
        }
    }
    Ok(x)
}

use std::ops::{Index, IndexMut};

use super::LinalgError;
use crate::Scalar;

/// Dense matrix stored row-major: entry `(i, j)` lives at `values[i * cols + j]`.
///
/// Every matrix in the crate uses this layout, including snapshot matrices
/// (one column per time instant), POD bases and network weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Wraps a row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, values: Vec<T>) -> Result<Self, LinalgError> {
        if values.len() != rows * cols {
            return Err(LinalgError::Shape {
                op: "from_vec",
                expected: (rows, cols),
                found: (values.len(), 1),
            });
        }
        Ok(Self { rows, cols, values })
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(LinalgError::Shape {
                    op: "from_rows",
                    expected: (i, cols),
                    found: (i, r.len()),
                });
            }
            values.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            values,
        })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns<C: AsRef<[T]>>(columns: &[C]) -> Result<Self, LinalgError> {
        let rows = columns.first().map_or(0, |c| c.as_ref().len());
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != rows {
                return Err(LinalgError::Shape {
                    op: "from_columns",
                    expected: (rows, j),
                    found: (c.len(), j),
                });
            }
            for (i, &v) in c.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                values.push(f(i, j));
            }
        }
        Self { rows, cols, values }
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

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[T]) {
        assert_eq!(col.len(), self.rows, "column length");
        for (i, &v) in col.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.values[j * self.rows + i] = self.values[i * self.cols + j];
            }
        }
        t
    }

    /// First `n` columns.
    pub fn leading_columns(&self, n: usize) -> Self {
        let n = n.min(self.cols);
        Self::from_fn(self.rows, n, |i, j| self[(i, j)])
    }

    /// Rows selected by index, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut out = Self::zeros(idx.len(), self.cols);
        for (k, &i) in idx.iter().enumerate() {
            out.row_mut(k).copy_from_slice(self.row(i));
        }
        out
    }

    /// Horizontal concatenation `[self other]`.
    pub fn hstack(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.rows != other.rows {
            return Err(LinalgError::Shape {
                op: "hstack",
                expected: (self.rows, other.cols),
                found: other.shape(),
            });
        }
        let cols = self.cols + other.cols;
        Ok(Self::from_fn(self.rows, cols, |i, j| {
            if j < self.cols {
                self[(i, j)]
            } else {
                other[(i, j - self.cols)]
            }
        }))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        matmul(self, other)
    }

    /// `self · x` for a column vector `x`.
    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::Shape {
                op: "matvec",
                expected: (self.cols, 1),
                found: (x.len(), 1),
            });
        }
        Ok((0..self.rows)
            .map(|i| {
                let mut acc = T::zero();
                for (a, b) in self.row(i).iter().zip(x) {
                    acc += *a * *b;
                }
                acc
            })
            .collect())
    }

    /// `selfᵀ · x` without forming the transpose.
    pub fn tr_matvec(&self, x: &[T]) -> Result<Vec<T>, LinalgError> {
        if x.len() != self.rows {
            return Err(LinalgError::Shape {
                op: "tr_matvec",
                expected: (self.rows, 1),
                found: (x.len(), 1),
            });
        }
        let mut out = vec![T::zero(); self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        Ok(out)
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    fn zip_with(
        &self,
        other: &Self,
        op: &'static str,
        f: impl Fn(T, T) -> T,
    ) -> Result<Self, LinalgError> {
        if self.shape() != other.shape() {
            return Err(LinalgError::Shape {
                op,
                expected: self.shape(),
                found: other.shape(),
            });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn frobenius_norm(&self) -> T {
        self.values.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |m, &v| if v.abs() > m { v.abs() } else { m })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Converts the element type, e.g. `f64` snapshots into an `f32` model.
    pub fn cast<U: Scalar>(&self) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.values[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.values[i * self.cols + j]
    }
}

/// Matrix product `a · b`.
///
/// Loop order is i-k-j, so every output entry accumulates its products in
/// increasing `k`; results are bit-reproducible across runs.
pub fn matmul<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>, LinalgError> {
    if a.cols != b.rows {
        return Err(LinalgError::Shape {
            op: "matmul",
            expected: (a.cols, b.cols),
            found: b.shape(),
        });
    }
    let mut c = DenseMatrix::zeros(a.rows, b.cols);
    matmul_acc(a, b, &mut c);
    Ok(c)
}

/// `c += a · b`; shapes must already agree.
pub(crate) fn matmul_acc<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>, c: &mut DenseMatrix<T>) {
    debug_assert_eq!(a.cols, b.rows);
    debug_assert_eq!((c.rows, c.cols), (a.rows, b.cols));
    let n = b.cols;
    for i in 0..a.rows {
        let crow = &mut c.values[i * n..(i + 1) * n];
        for k in 0..a.cols {
            let aik = a.values[i * a.cols + k];
            if aik == T::zero() {
                continue;
            }
            let brow = &b.values[k * n..(k + 1) * n];
            for (cij, &bkj) in crow.iter_mut().zip(brow) {
                *cij += aik * bkj;
            }
        }
    }
}

/// `aᵀ · b` without materializing the transpose.
pub fn tr_matmul<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>, LinalgError> {
    if a.rows != b.rows {
        return Err(LinalgError::Shape {
            op: "tr_matmul",
            expected: (a.rows, b.cols),
            found: b.shape(),
        });
    }
    let n = b.cols;
    let mut c = DenseMatrix::zeros(a.cols, n);
    for r in 0..a.rows {
        let brow = b.row(r);
        for k in 0..a.cols {
            let ark = a.values[r * a.cols + k];
            if ark == T::zero() {
                continue;
            }
            let crow = &mut c.values[k * n..(k + 1) * n];
            for (ckj, &brj) in crow.iter_mut().zip(brow) {
                *ckj += ark * brj;
            }
        }
    }
    Ok(c)
}

/// `a · bᵀ`; each entry is a contiguous row-row dot product.
pub fn matmul_tr<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>, LinalgError> {
    if a.cols != b.cols {
        return Err(LinalgError::Shape {
            op: "matmul_tr",
            expected: (b.rows, a.cols),
            found: b.shape(),
        });
    }
    let mut c = DenseMatrix::zeros(a.rows, b.rows);
    for i in 0..a.rows {
        let arow = a.row(i);
        for j in 0..b.rows {
            let mut acc = T::zero();
            for (&x, &y) in arow.iter().zip(b.row(j)) {
                acc += x * y;
            }
            c.values[i * b.rows + j] = acc;
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_product() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[[5.0], [6.0]]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.as_slice(), &[17.0, 39.0]);
    }

    #[test]
    fn identity_and_zero() {
        let a = DenseMatrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64 - 2.5);
        assert_eq!(matmul(&DenseMatrix::identity(3), &a).unwrap(), a);
        let z = matmul(&a, &DenseMatrix::zeros(4, 2)).unwrap();
        assert!(z.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shape_mismatch() {
        let a = DenseMatrix::<f64>::zeros(2, 3);
        assert!(matches!(matmul(&a, &a), Err(LinalgError::Shape { .. })));
    }

    #[test]
    fn transposed_product_agrees() {
        let a = DenseMatrix::from_fn(4, 3, |i, j| ((i + 1) * (j + 2)) as f64 * 0.1);
        let b = DenseMatrix::from_fn(4, 2, |i, j| (i as f64) - (j as f64));
        let direct = matmul(&a.transpose(), &b).unwrap();
        assert_eq!(tr_matmul(&a, &b).unwrap(), direct);
    }

    #[test]
    fn product_with_transpose_agrees() {
        let a = DenseMatrix::from_fn(3, 4, |i, j| (i as f64 + 1.0) * 0.5 - j as f64);
        let b = DenseMatrix::from_fn(2, 4, |i, j| (i * j) as f64 + 0.25);
        assert_eq!(matmul_tr(&a, &b).unwrap(), matmul(&a, &b.transpose()).unwrap());
    }
}

use super::{PinnError, ResidualProvider};
use crate::linalg::DenseMatrix;
use crate::Scalar;

/// `∂R/∂y` in compressed sparse row form, with `y` flattened level-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMatrix<T> {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
    /// Epoch at which the entries were computed.
    pub epoch_stamp: usize,
}

impl<T: Scalar> JacobianMatrix<T> {
    /// Empty matrix with the given pattern; `pattern[r]` lists the columns of row `r`.
    pub fn with_pattern(cols: usize, pattern: &[Vec<usize>], epoch_stamp: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(pattern.len() + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in pattern {
            let mut r = row.clone();
            r.sort_unstable();
            r.dedup();
            col_idx.extend(r);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        Self {
            rows: pattern.len(),
            cols,
            row_ptr,
            col_idx,
            values: vec![T::zero(); nnz],
            epoch_stamp,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let span = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        match span.binary_search(&c) {
            Ok(k) => self.values[self.row_ptr[r] + k],
            Err(_) => T::zero(),
        }
    }

    /// Columns and values stored in row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        (0..self.rows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    /// `Jᵀg`.
    pub fn tr_matvec(&self, g: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols];
        for (r, &gr) in g.iter().enumerate().take(self.rows) {
            for (c, v) in self.row(r) {
                out[c] += v * gr;
            }
        }
        out
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                d[(r, c)] = v;
            }
        }
        d
    }
}

/// Finite-difference step `h = relative·max(1, |y_j|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdStep {
    pub relative: f64,
}

impl Default for FdStep {
    fn default() -> Self {
        Self { relative: 1e-6 }
    }
}

/// Central-difference Jacobian, probing only entries inside the provider's
/// sparsity pattern.
pub fn fd_jacobian<T: Scalar, P: ResidualProvider<T> + ?Sized>(
    provider: &P,
    y: &DenseMatrix<T>,
    step: FdStep,
    epoch: usize,
) -> Result<JacobianMatrix<T>, PinnError> {
    let n_rows = provider.residual_len();
    let pattern: Vec<Vec<usize>> = (0..n_rows).map(|r| provider.row_support(r)).collect();
    let mut jac = JacobianMatrix::with_pattern(y.rows() * y.cols(), &pattern, epoch);
    // column -> positions in `values` (with their rows)
    let mut by_col: Vec<Vec<(usize, usize)>> = vec![Vec::new(); jac.cols];
    for r in 0..n_rows {
        for k in jac.row_ptr[r]..jac.row_ptr[r + 1] {
            by_col[jac.col_idx[k]].push((r, k));
        }
    }
    let mut probe = y.clone();
    for (col, entries) in by_col.iter().enumerate() {
        if entries.is_empty() {
            continue;
        }
        let orig = probe.as_slice()[col];
        let h = step.relative * orig.as_f64().abs().max(1.0);
        let ht = T::lit(h);
        probe.as_mut_slice()[col] = orig + ht;
        let up = provider.residual(&probe)?;
        probe.as_mut_slice()[col] = orig - ht;
        let down = provider.residual(&probe)?;
        probe.as_mut_slice()[col] = orig;
        if up.iter().chain(&down).any(|v| !v.is_finite()) {
            return Err(PinnError::Jacobian {
                column: col,
                msg: "non-finite residual while probing".into(),
            });
        }
        let inv = T::lit(0.5 / h);
        for &(r, k) in entries {
            jac.values[k] = (up[r] - down[r]) * inv;
        }
    }
    Ok(jac)
}

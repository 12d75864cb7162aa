//! Minimal dense linear algebra: products, LU solves and a Jacobi SVD.

mod io;
mod lu;
mod matrix;
mod svd;

pub use io::{read_csv, read_csv_from, write_csv, write_csv_to};
pub use lu::{inverse, lu_solve, LuFactor, SINGULAR_PIVOT_RTOL};
pub use matrix::{matmul, matmul_tr, tr_matmul, DenseMatrix};
pub(crate) use matrix::matmul_acc;
pub use svd::{svd, SvdResult, MAX_SWEEPS, OFF_DIAGONAL_TOL};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("{op}: shape mismatch, expected {expected:?}, found {found:?}")]
    Shape {
        op: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("singular matrix: pivot {pivot:e} below threshold {threshold:e}")]
    Singular { pivot: f64, threshold: f64 },
    #[error("jacobi svd did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("{op}: non-finite input")]
    NonFinite { op: &'static str },
    #[error("csv line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

//! POD bases, Galerkin projection and DEIM hyper-reduction.

mod deim;
mod persist;
mod pod;

pub use deim::{build_deim_operator, deim_select, DeimOperator};
pub use persist::{load_rom, save_rom, RomMetadata};
pub use pod::{compute_pod, reconstruction_error, ModeSelector, PodBasis, ReconstructionError};

use thiserror::Error;

use crate::linalg::{DenseMatrix, LinalgError};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum RomError {
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("requested {requested} modes but only {available} are available")]
    Rank { requested: usize, available: usize },
    #[error("DEIM selection failed at step {step}: {msg}")]
    Selection { step: usize, msg: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("metadata: {0}")]
    Metadata(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A block of snapshots taken at one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotBlock {
    pub label: String,
    pub columns: usize,
}

/// Snapshot matrix `U = [U₁ … U_{N_μ}]`, one column per time level.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet<T> {
    pub data: DenseMatrix<T>,
    pub dt: f64,
    /// Node coordinates; empty for lumped systems.
    pub grid: Vec<f64>,
    pub blocks: Vec<SnapshotBlock>,
}

impl<T: Scalar> SnapshotSet<T> {
    pub fn single(data: DenseMatrix<T>, dt: f64, grid: Vec<f64>, label: String, columns: usize) -> Self {
        Self {
            data,
            dt,
            grid,
            blocks: vec![SnapshotBlock { label, columns }],
        }
    }

    /// Bare matrix without time or grid metadata.
    pub fn from_matrix(data: DenseMatrix<T>) -> Self {
        let cols = data.cols();
        Self::single(data, 0.0, Vec::new(), String::new(), cols)
    }

    /// Appends another parameter block with the same row count.
    pub fn append(&mut self, other: SnapshotSet<T>) -> Result<(), RomError> {
        self.data = self.data.hstack(&other.data)?;
        self.blocks.extend(other.blocks);
        Ok(())
    }

    /// Applies `f` to every column, e.g. to collect nonlinear-term snapshots.
    pub fn map_columns(&self, f: impl Fn(&[T]) -> Vec<T>) -> Self {
        let cols: Vec<Vec<T>> = (0..self.data.cols()).map(|j| f(&self.data.column(j))).collect();
        let data = DenseMatrix::from_columns(&cols).expect("mapped columns share a length");
        Self {
            data,
            dt: self.dt,
            grid: self.grid.clone(),
            blocks: self.blocks.clone(),
        }
    }
}

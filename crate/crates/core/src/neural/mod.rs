//! A small network engine: MLP and LSTM forward passes, hand-written reverse
//! mode, sequence windowing and Adam.

mod adam;
mod checkpoint;
mod gradcheck;
mod init;
mod lstm;
mod mlp;
mod scaling;
mod sequence;

pub use adam::AdamState;
pub use checkpoint::{load_checkpoint, save_checkpoint, ArchSpec, Model};
pub use gradcheck::{gradient_check, GradCheckReport};
pub use init::glorot_uniform;
pub use lstm::{LstmCache, LstmParams};
pub use mlp::{DenseLayer, MlpCache, MlpParams};
pub use scaling::MinMaxScaler;
pub use sequence::{make_sequences, SequenceBatch};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{DenseMatrix, LinalgError};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("{op}: shape mismatch, expected {expected}, found {found}")]
    Shape {
        op: &'static str,
        expected: String,
        found: String,
    },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("non-finite gradient in parameter block `{block}`")]
    NonFiniteGradient { block: String },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation output `y = f(x)`.
    #[inline]
    pub fn derivative_from_output<T: Scalar>(self, y: T) -> T {
        match self {
            Activation::Tanh => T::one() - y * y,
            Activation::Identity => T::one(),
        }
    }
}

/// A named, shaped view of one parameter tensor.
#[derive(Debug)]
pub struct ParamBlock<'a, T> {
    pub name: String,
    pub shape: (usize, usize),
    pub data: &'a [T],
}

/// A parameter tree flattened into named blocks in a fixed order.
///
/// Gradients use the same type as the parameters, so shapes always agree.
pub trait ParamSet<T: Scalar> {
    fn blocks(&self) -> Vec<ParamBlock<'_, T>>;
    fn blocks_mut(&mut self) -> Vec<&mut [T]>;

    fn param_count(&self) -> usize {
        self.blocks().iter().map(|b| b.data.len()).sum()
    }

    fn flatten(&self) -> Vec<T> {
        self.blocks().iter().flat_map(|b| b.data.iter().copied()).collect()
    }

    fn set_flat(&mut self, flat: &[T]) {
        let mut it = flat.iter();
        for block in self.blocks_mut() {
            for v in block.iter_mut() {
                *v = *it.next().expect("flat vector matches parameter count");
            }
        }
    }

    fn fill(&mut self, value: T) {
        for block in self.blocks_mut() {
            block.iter_mut().for_each(|v| *v = value);
        }
    }

    fn is_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.data.iter().all(|v| v.is_finite()))
    }
}

/// A differentiable model: the forward pass returns a cache that the
/// backward pass consumes, so a gradient can only be requested for an
/// input that was actually evaluated.
pub trait Network<T: Scalar>: ParamSet<T> + Clone + Send {
    type Input;
    type Cache;

    fn output_dim(&self) -> usize;

    fn forward(&self, input: &Self::Input) -> Result<DenseMatrix<T>, NeuralError> {
        Ok(self.forward_cached(input)?.0)
    }

    fn forward_cached(&self, input: &Self::Input) -> Result<(DenseMatrix<T>, Self::Cache), NeuralError>;

    /// Gradient of `Σ outputs ⊙ upstream` with respect to every parameter.
    fn backward(&self, cache: &Self::Cache, upstream: &DenseMatrix<T>) -> Result<Self, NeuralError>;
}

pub(crate) fn shape_err(op: &'static str, expected: impl std::fmt::Debug, found: impl std::fmt::Debug) -> NeuralError {
    NeuralError::Shape {
        op,
        expected: format!("{expected:?}"),
        found: format!("{found:?}"),
    }
}

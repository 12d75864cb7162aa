//! Discretized-physics losses and training loops.
//!
//! A network predicts a horizon of states `Y` (levels × width). Supervision
//! compares selected levels with reference data, a [`ResidualProvider`]
//! turns `Y` into the stacked discrete residual `R`, and training minimises
//! `w_data·MSE_data + w_phys·ΣR²/N_eqn` either with the residual inside the
//! differentiation graph or through a detached finite-difference Jacobian.

mod cases;
mod horizon;
mod jacobian;
mod provider;
mod train;

pub use cases::{
    build_case, run_case, run_trials, train_model, CaseInput, DataPoints, EqnSpan, Metric, NetSpec, PinnCase,
    ProblemKind, RunResult, RunSpec, TrialSummary,
};
pub use horizon::{Horizon, Supervision};
pub use jacobian::{fd_jacobian, FdStep, JacobianMatrix};
pub use provider::{
    BurgersProvider, ExternalSolver, ReducedBurgersProvider, ResidualProvider, RigidBodyProvider,
};
pub use train::{
    loss_gradients, train, train_detached, train_in_graph, EpochLoss, LDisSchedule, LossReport,
    Objective, PhysicsGradient, TrainConfig, TrainMode,
};

use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::linalg::{DenseMatrix, LinalgError};
use crate::neural::NeuralError;
use crate::rom::RomError;
use crate::Scalar;

#[derive(Debug, Error)]
pub enum PinnError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("training diverged at epoch {epoch}: {msg}")]
    Training { epoch: usize, msg: String },
    #[error("jacobian column {column}: {msg}")]
    Jacobian { column: usize, msg: String },
    #[error("metric undefined: {0}")]
    Metric(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Rom(#[from] RomError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Mean squared error over every column of the rows in `indices`.
pub fn data_loss<T: Scalar>(
    y_pred: &DenseMatrix<T>,
    y_actual: &DenseMatrix<T>,
    indices: &[usize],
) -> Result<T, PinnError> {
    if y_pred.shape() != y_actual.shape() {
        return Err(PinnError::Config(format!(
            "prediction is {:?}, reference is {:?}",
            y_pred.shape(),
            y_actual.shape()
        )));
    }
    if indices.is_empty() {
        return Err(PinnError::Config("no supervision points selected".into()));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= y_pred.rows()) {
        return Err(PinnError::Config(format!(
            "supervision index {bad} outside horizon of {}",
            y_pred.rows()
        )));
    }
    let mut acc = T::zero();
    for &i in indices {
        for (&p, &a) in y_pred.row(i).iter().zip(y_actual.row(i)) {
            acc += (p - a) * (p - a);
        }
    }
    Ok(acc / T::from_usize_lossy(indices.len() * y_pred.cols()))
}

/// `ΣR²/N_eqn`.
pub fn physics_loss<T: Scalar>(residual: &[T], n_eqn: usize) -> T {
    if n_eqn == 0 {
        return T::zero();
    }
    residual.iter().map(|&r| r * r).sum::<T>() / T::from_usize_lossy(n_eqn)
}

/// `‖pred − actual‖₂ / ‖actual‖₂`.
pub fn relative_error<T: Scalar>(pred: &[T], actual: &[T]) -> Result<T, PinnError> {
    if pred.len() != actual.len() {
        return Err(PinnError::Metric(format!(
            "series lengths differ ({} vs {})",
            pred.len(),
            actual.len()
        )));
    }
    let den: T = actual.iter().map(|&a| a * a).sum();
    if den == T::zero() {
        return Err(PinnError::Metric("reference series is identically zero".into()));
    }
    let num: T = pred.iter().zip(actual).map(|(&p, &a)| (p - a) * (p - a)).sum();
    Ok((num / den).sqrt())
}

pub fn max_abs_error<T: Scalar>(pred: &[T], actual: &[T]) -> Result<T, PinnError> {
    if pred.len() != actual.len() {
        return Err(PinnError::Metric(format!(
            "series lengths differ ({} vs {})",
            pred.len(),
            actual.len()
        )));
    }
    Ok(pred
        .iter()
        .zip(actual)
        .fold(T::zero(), |m, (&p, &a)| m.max((p - a).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[[f64; 2]]) -> DenseMatrix<f64> {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn data_loss_examples() {
        let a = m(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
        assert_eq!(data_loss(&a, &a, &[0, 2]).unwrap(), 0.0);
        let p = m(&[[1.0, 2.0], [3.0, 7.0], [5.0, 6.0]]);
        // one row, errors (0, 3) averaged over two columns
        assert_eq!(data_loss(&p, &a, &[1]).unwrap(), 4.5);
        let single = DenseMatrix::from_rows(&[[2.5f64]]).unwrap();
        let zero = DenseMatrix::from_rows(&[[0.0f64]]).unwrap();
        assert_eq!(data_loss(&single, &zero, &[0]).unwrap(), 6.25);
        let two = DenseMatrix::from_rows(&[[1.0f64], [3.0]]).unwrap();
        let z2 = DenseMatrix::<f64>::zeros(2, 1);
        assert_eq!(data_loss(&two, &z2, &[0, 1]).unwrap(), 5.0);
        assert!(matches!(data_loss(&a, &a, &[]), Err(PinnError::Config(_))));
        assert!(data_loss(&a, &a, &[3]).is_err());
    }

    #[test]
    fn physics_loss_examples() {
        assert_eq!(physics_loss(&[0.0f64; 5], 5), 0.0);
        assert_eq!(physics_loss(&[2.0f64], 1), 4.0);
        assert_eq!(physics_loss(&[1.0f64, 3.0], 2), 5.0);
    }

    #[test]
    fn relative_error_examples() {
        let a = [1.0f64, -2.0, 0.5];
        assert_eq!(relative_error(&a, &a).unwrap(), 0.0);
        assert_eq!(relative_error(&[0.0; 3], &a).unwrap(), 1.0);
        let twice: Vec<f64> = a.iter().map(|v| 2.0 * v).collect();
        assert!((relative_error(&twice, &a).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(relative_error(&a, &[0.0; 3]), Err(PinnError::Metric(_))));
        assert!(relative_error(&a, &[1.0]).is_err());
    }

    #[test]
    fn max_abs_error_picks_worst_entry() {
        assert_eq!(max_abs_error(&[1.0f64, 2.0, 3.0], &[1.5, 2.0, 2.0]).unwrap(), 1.0);
    }
}

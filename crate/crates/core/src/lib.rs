//! Discretized-physics-informed neural networks.
//!
//! Finite-difference forward solvers provide residuals, in full order or
//! after POD-Galerkin/DEIM reduction, that serve as physics loss terms for
//! small MLP and LSTM surrogates. Training runs either with the residual
//! differentiated analytically inside the graph or against a detached solver
//! that only hands back residual values and a finite-difference Jacobian.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the element type to `f64`, which the documented
//! tolerances assume.

pub mod dynamics;
pub mod linalg;
pub mod neural;
pub mod pinn;
pub mod rom;
mod scalar;

pub use scalar::Scalar;

pub type Matrix = linalg::DenseMatrix<f64>;
pub type Svd = linalg::SvdResult<f64>;
pub type Snapshots = rom::SnapshotSet<f64>;
pub type Basis = rom::PodBasis<f64>;
pub type Deim = rom::DeimOperator<f64>;
pub type BurgersTrajectory = dynamics::Trajectory<f64>;
pub type Mlp = neural::MlpParams<f64>;
pub type Lstm = neural::LstmParams<f64>;

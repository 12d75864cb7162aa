//! Forward finite-difference solvers and their discrete residual operators.
//!
//! Every solver here has a residual twin built from the same stencil, so a
//! marched trajectory has zero residual up to rounding.

mod burgers;
mod reduced;
mod rigid_body;

pub use burgers::{
    burgers_march, burgers_residual, burgers_step, convective_term, BurgersConfig, InitialCondition,
    Stencil,
};
pub use reduced::{burgers_residual_reduced, reduced_march, ReducedBurgers};
pub(crate) use burgers::StencilCoeffs;
pub use rigid_body::{
    harmonic_response, periodic_amplitude_bound, rigid_body_assemble, rigid_body_march, rigid_body_residual, rigid_body_residual_first,
    ForcingSeries, RigidBodyOperators, RigidBodyParams, RigidBodyState, SinusoidalForcing,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{DenseMatrix, LinalgError};
use crate::rom::SnapshotSet;
use crate::Scalar;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("solution became non-finite at step {step}")]
    Unstable { step: usize },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// States over time, one column per time level.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub states: DenseMatrix<T>,
    pub times: Vec<T>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn new(states: DenseMatrix<T>, times: Vec<T>) -> Self {
        debug_assert!(states.cols() == times.len() || times.is_empty() && states.cols() == 0);
        Self { states, times }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, k: usize) -> Vec<T> {
        self.states.column(k)
    }
}

/// How the rigid body starts moving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Zero displacement with the velocity of the undamped periodic response.
    #[default]
    Periodic,
    Rest,
}

/// A forward problem whose trajectory provides snapshots and training targets.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Burgers(BurgersConfig),
    RigidBody {
        params: RigidBodyParams,
        forcing: SinusoidalForcing,
        initial: InitialState,
    },
}

impl ProblemSpec {
    pub fn march<T: Scalar>(&self) -> Result<Trajectory<T>, DynamicsError> {
        match self {
            ProblemSpec::Burgers(cfg) => burgers_march(cfg),
            ProblemSpec::RigidBody {
                params,
                forcing,
                initial,
            } => {
                let series = ForcingSeries::sinusoidal(forcing, params.n_steps);
                let z0 = match initial {
                    InitialState::Periodic => RigidBodyState::periodic_start(params, forcing)?,
                    InitialState::Rest => RigidBodyState::rest(),
                };
                rigid_body_march(params, &series, &z0)
            }
        }
    }
}

/// Marches the problem and packs the states as a snapshot matrix.
pub fn generate_snapshots<T: Scalar>(spec: &ProblemSpec) -> Result<SnapshotSet<T>, DynamicsError> {
    let tr = spec.march::<T>()?;
    let n = tr.len();
    let (dt, grid, label) = match spec {
        ProblemSpec::Burgers(cfg) => (cfg.dt, cfg.grid(), "burgers"),
        ProblemSpec::RigidBody { params, .. } => (params.dtau, Vec::new(), "rigid_body"),
    };
    Ok(SnapshotSet::single(tr.states, dt, grid, label.to_string(), n))
}

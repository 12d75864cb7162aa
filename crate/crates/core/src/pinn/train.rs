use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{physics_loss, Horizon, JacobianMatrix, PinnError, ResidualProvider, Supervision};
use crate::linalg::DenseMatrix;
use crate::neural::{AdamState, Network, NeuralError};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    /// Residual gradients flow through the analytic stencil adjoint.
    #[default]
    InGraph,
    /// Residual values arrive detached; the gradient uses a finite-difference
    /// Jacobian refreshed every `jacobian_interval` epochs.
    Detached,
}

/// When the detached physics term contributes a gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LDisSchedule {
    /// Every epoch, with the most recent Jacobian.
    #[default]
    EveryEpoch,
    /// Only on epochs where the Jacobian is refreshed.
    RefreshOnly,
}

fn default_weight() -> f64 {
    1.0
}

fn default_interval() -> usize {
    1
}

fn default_stale_window() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    #[serde(default = "default_weight")]
    pub w_data: f64,
    #[serde(default = "default_weight")]
    pub w_phys: f64,
    #[serde(default)]
    pub mode: TrainMode,
    #[serde(default = "default_interval")]
    pub jacobian_interval: usize,
    #[serde(default)]
    pub l_dis_schedule: LDisSchedule,
    /// Consecutive rises of `mse_physics` that trigger a stale-Jacobian warning.
    #[serde(default = "default_stale_window")]
    pub stale_window: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 6000,
            learning_rate: 0.006,
            w_data: 1.0,
            w_phys: 1.0,
            mode: TrainMode::InGraph,
            jacobian_interval: 1,
            l_dis_schedule: LDisSchedule::EveryEpoch,
            stale_window: 200,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), PinnError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(PinnError::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.jacobian_interval == 0 {
            return Err(PinnError::Config("jacobian_interval must be at least 1".into()));
        }
        for (name, w) in [("w_data", self.w_data), ("w_phys", self.w_phys)] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(PinnError::Config(format!("{name} must be a non-negative number, got {w}")));
            }
        }
        Ok(())
    }
}

/// What the trainer optimises: the layout of network outputs, the
/// supervision, and the physics.
#[derive(Clone, Copy)]
pub struct Objective<'a, T> {
    pub horizon: &'a Horizon<T>,
    pub data: &'a Supervision<T>,
    pub provider: &'a dyn ResidualProvider<T>,
}

impl<T: Scalar> Objective<'_, T> {
    pub fn validate(&self, w_data: f64) -> Result<(), PinnError> {
        self.horizon.validate()?;
        let shape = (self.horizon.levels(), self.horizon.width());
        if self.provider.shape() != shape {
            return Err(PinnError::Config(format!(
                "provider expects a {:?} horizon, layout is {shape:?}",
                self.provider.shape()
            )));
        }
        if self.data.reference.shape() != shape {
            return Err(PinnError::Config("reference data does not match the horizon".into()));
        }
        if let Some(&bad) = self.data.levels.iter().find(|&&l| l >= shape.0) {
            return Err(PinnError::Config(format!("data level {bad} outside horizon")));
        }
        if w_data > 0.0 && self.data.levels.is_empty() {
            return Err(PinnError::Config("data loss weighted but no supervision points selected".into()));
        }
        Ok(())
    }
}

/// How the physics term enters the parameter gradient.
#[derive(Debug, Clone, Copy)]
pub enum PhysicsGradient<'a, T> {
    Off,
    InGraph,
    Detached(&'a JacobianMatrix<T>),
}

/// Loss values at one epoch, measured before that epoch's update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub mse_data: f64,
    pub mse_physics: f64,
    /// `(2/N_eqn)·(JᵀR)·y`; only meaningful in detached mode.
    pub l_dis: Option<f64>,
    /// Milliseconds since training started.
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub epochs: Vec<EpochLoss>,
    pub jacobian_refreshes: Vec<usize>,
    pub stale_warnings: Vec<usize>,
}

impl LossReport {
    pub fn last(&self) -> Option<&EpochLoss> {
        self.epochs.last()
    }

    pub fn total_ms(&self) -> f64 {
        self.last().map_or(0.0, |e| e.wall_ms)
    }

    pub fn write_csv_to<W: Write>(&self, w: W) -> Result<(), PinnError> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| PinnError::Io(std::io::Error::other(e));
        wr.write_record(["epoch", "mse_data", "mse_physics", "l_dis", "wall_ms"])
            .map_err(io)?;
        for e in &self.epochs {
            wr.write_record([
                e.epoch.to_string(),
                format!("{:e}", e.mse_data),
                format!("{:e}", e.mse_physics),
                e.l_dis.map_or(String::new(), |v| format!("{v:e}")),
                format!("{:.3}", e.wall_ms),
            ])
            .map_err(io)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), PinnError> {
        self.write_csv_to(std::fs::File::create(path)?)
    }
}

/// Loss values and gradient with respect to `Y` at a given horizon.
pub(crate) struct YGradient<T> {
    pub mse_data: T,
    pub mse_physics: T,
    pub l_dis: Option<T>,
    pub g_y: DenseMatrix<T>,
}

pub(crate) fn y_gradient<T: Scalar>(
    y: &DenseMatrix<T>,
    obj: &Objective<'_, T>,
    w_data: T,
    w_phys: T,
    physics: PhysicsGradient<'_, T>,
) -> Result<YGradient<T>, PinnError> {
    let (mse_data, mut g_y) = obj.data.loss_and_grad(y, obj.horizon, w_data);
    let r = obj.provider.residual(y)?;
    let n = r.len();
    let mse_physics = physics_loss(&r, n);
    let mut l_dis = None;
    if n > 0 && w_phys > T::zero() {
        let coef = T::lit(2.0) * w_phys / T::from_usize_lossy(n);
        let cot: Vec<T> = r.iter().map(|&v| coef * v).collect();
        let g_phys = match physics {
            PhysicsGradient::Off => None,
            PhysicsGradient::InGraph => Some(obj.provider.vjp(y, &cot)?),
            PhysicsGradient::Detached(j) => {
                let g = j.tr_matvec(&cot);
                l_dis = Some(g.iter().zip(y.as_slice()).map(|(&a, &b)| a * b).sum());
                Some(DenseMatrix::from_vec(y.rows(), y.cols(), g)?)
            }
        };
        if let Some(gp) = g_phys {
            g_y.as_mut_slice()
                .iter_mut()
                .zip(gp.as_slice())
                .for_each(|(a, &b)| *a += b);
        }
    }
    Ok(YGradient {
        mse_data,
        mse_physics,
        l_dis,
        g_y,
    })
}

/// Parameter gradient of `w_data·L_data + w_phys·(physics term)` at the
/// current parameters, with the horizon it was evaluated on.
pub fn loss_gradients<T: Scalar, N: Network<T>>(
    net: &N,
    input: &N::Input,
    obj: &Objective<'_, T>,
    w_data: T,
    w_phys: T,
    physics: PhysicsGradient<'_, T>,
) -> Result<(N, DenseMatrix<T>), PinnError> {
    let (out, cache) = net.forward_cached(input)?;
    let y = obj.horizon.assemble(&out)?;
    let yg = y_gradient(&y, obj, w_data, w_phys, physics)?;
    let grads = net.backward(&cache, &obj.horizon.pullback(&yg.g_y))?;
    Ok((grads, y))
}

/// Adam training of `net` on `obj`; the network is updated in place.
pub fn train<T: Scalar, N: Network<T>>(
    cfg: &TrainConfig,
    net: &mut N,
    input: &N::Input,
    obj: &Objective<'_, T>,
) -> Result<LossReport, PinnError> {
    cfg.validate()?;
    obj.validate(cfg.w_data)?;
    if cfg.mode == TrainMode::InGraph && cfg.w_phys > 0.0 && !obj.provider.graph_attached() {
        return Err(PinnError::Config(
            "in-graph training needs a graph-attached residual provider; use detached mode".into(),
        ));
    }
    if obj.horizon.output_shape().1 != net.output_dim() {
        return Err(PinnError::Config(format!(
            "network emits {} columns, horizon expects {}",
            net.output_dim(),
            obj.horizon.output_shape().1
        )));
    }
    let w_data = T::lit(cfg.w_data);
    let w_phys = T::lit(cfg.w_phys);
    let k = cfg.jacobian_interval;
    let mut opt = AdamState::new(T::lit(cfg.learning_rate));
    let mut report = LossReport::default();
    let mut jac: Option<JacobianMatrix<T>> = None;
    let mut rises = 0usize;
    let start = Instant::now();
    for epoch in 0..cfg.epochs {
        let (out, cache) = net.forward_cached(input)?;
        let y = obj.horizon.assemble(&out)?;
        let physics = match cfg.mode {
            TrainMode::InGraph => PhysicsGradient::InGraph,
            TrainMode::Detached => {
                let refresh = epoch % k == 0;
                if refresh && cfg.w_phys > 0.0 {
                    jac = Some(obj.provider.jacobian(&y, epoch)?);
                    report.jacobian_refreshes.push(epoch);
                }
                match (&jac, cfg.l_dis_schedule) {
                    (Some(j), LDisSchedule::EveryEpoch) => PhysicsGradient::Detached(j),
                    (Some(j), LDisSchedule::RefreshOnly) if refresh => PhysicsGradient::Detached(j),
                    _ => PhysicsGradient::Off,
                }
            }
        };
        let yg = y_gradient(&y, obj, w_data, w_phys, physics)?;
        if !(yg.mse_data.is_finite() && yg.mse_physics.is_finite()) {
            return Err(PinnError::Training {
                epoch,
                msg: format!("loss became non-finite (data {}, physics {})", yg.mse_data, yg.mse_physics),
            });
        }
        let grads = net.backward(&cache, &obj.horizon.pullback(&yg.g_y))?;
        opt.step(net, &grads).map_err(|e| match e {
            NeuralError::NonFiniteGradient { block } => PinnError::Training {
                epoch,
                msg: format!("non-finite gradient in `{block}`"),
            },
            other => PinnError::Neural(other),
        })?;

        let mse_physics = yg.mse_physics.as_f64();
        if cfg.mode == TrainMode::Detached {
            match report.last() {
                Some(prev) if mse_physics > prev.mse_physics => rises += 1,
                _ => rises = 0,
            }
            if rises == cfg.stale_window {
                log::warn!(
                    "mse_physics rose for {rises} consecutive epochs at epoch {epoch}; \
                     the Jacobian may be stale (jacobian_interval k = {k})"
                );
                report.stale_warnings.push(epoch);
            }
        }
        report.epochs.push(EpochLoss {
            epoch,
            mse_data: yg.mse_data.as_f64(),
            mse_physics,
            l_dis: yg.l_dis.map(|v| v.as_f64()),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        if epoch % 1000 == 0 {
            log::debug!(
                "epoch {epoch}: mse_data {:.3e}, mse_physics {:.3e}",
                yg.mse_data.as_f64(),
                mse_physics
            );
        }
    }
    Ok(report)
}

pub fn train_in_graph<T: Scalar, N: Network<T>>(
    cfg: &TrainConfig,
    net: &mut N,
    input: &N::Input,
    obj: &Objective<'_, T>,
) -> Result<LossReport, PinnError> {
    let cfg = TrainConfig {
        mode: TrainMode::InGraph,
        ..cfg.clone()
    };
    train(&cfg, net, input, obj)
}

pub fn train_detached<T: Scalar, N: Network<T>>(
    cfg: &TrainConfig,
    net: &mut N,
    input: &N::Input,
    obj: &Objective<'_, T>,
) -> Result<LossReport, PinnError> {
    let cfg = TrainConfig {
        mode: TrainMode::Detached,
        ..cfg.clone()
    };
    train(&cfg, net, input, obj)
}

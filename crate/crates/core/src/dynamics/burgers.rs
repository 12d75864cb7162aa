//! Explicit finite differences for `u_t + u u_x = ν u_xx` on `[0, L]`.

use serde::{Deserialize, Serialize};

use super::{DynamicsError, Trajectory};
use crate::linalg::DenseMatrix;
use crate::Scalar;

/// Spatial stencil shared by the stepper and the residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stencil {
    /// Backward-difference convection, `+ν` central diffusion in the update.
    #[default]
    StandardUpwind,
    /// The residual exactly as printed in the source: forward-difference
    /// convection with the opposite sign and `−ν` diffusion in the update.
    /// Unstable for most settings; kept for auditing.
    PaperExact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// `A sin(kπx/L)`.
    Sine { amplitude: f64, half_waves: u32 },
    /// `A exp(−((x − c)/w)²)`.
    Gaussian { amplitude: f64, center: f64, width: f64 },
    Zero,
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::Sine {
            amplitude: 1.0,
            half_waves: 1,
        }
    }
}

impl InitialCondition {
    fn eval(&self, x: f64, length: f64) -> f64 {
        match *self {
            InitialCondition::Sine {
                amplitude,
                half_waves,
            } => amplitude * (half_waves as f64 * std::f64::consts::PI * x / length).sin(),
            InitialCondition::Gaussian {
                amplitude,
                center,
                width,
            } => amplitude * (-((x - center) / width).powi(2)).exp(),
            InitialCondition::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurgersConfig {
    pub n_x: usize,
    /// Number of time levels, including the initial one.
    pub n_t: usize,
    pub length: f64,
    pub nu: f64,
    pub dt: f64,
    #[serde(default)]
    pub stencil: Stencil,
    #[serde(default)]
    pub initial_condition: InitialCondition,
    /// Dirichlet values `(u(0, t), u(L, t))`.
    #[serde(default)]
    pub bc: [f64; 2],
}

impl Default for BurgersConfig {
    fn default() -> Self {
        Self {
            n_x: 20,
            n_t: 100,
            length: 1.0,
            nu: 0.01,
            dt: 0.01,
            stencil: Stencil::StandardUpwind,
            initial_condition: InitialCondition::default(),
            bc: [0.0, 0.0],
        }
    }
}

impl BurgersConfig {
    pub fn dx(&self) -> f64 {
        self.length / (self.n_x as f64 - 1.0)
    }

    pub fn grid(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n_x).map(|i| i as f64 * dx).collect()
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if self.n_x < 3 {
            return Err(DynamicsError::Param(format!("n_x must be at least 3, got {}", self.n_x)));
        }
        if self.n_t < 1 {
            return Err(DynamicsError::Param("n_t must be at least 1".into()));
        }
        if !(self.length > 0.0) || !self.length.is_finite() {
            return Err(DynamicsError::Param(format!("length must be positive, got {}", self.length)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(DynamicsError::Param(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.nu >= 0.0) || !self.nu.is_finite() {
            return Err(DynamicsError::Param(format!("nu must be non-negative, got {}", self.nu)));
        }
        Ok(())
    }

    /// `dt (max|u₀|/dx + 2ν/dx²)`; explicit marching wants this at most 1.
    pub fn stability_number(&self) -> f64 {
        let dx = self.dx();
        let umax = self
            .initial_field::<f64>()
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        self.dt * (umax / dx + 2.0 * self.nu / (dx * dx))
    }

    /// Initial profile sampled on the grid with the boundary values imposed.
    pub fn initial_field<T: Scalar>(&self) -> Vec<T> {
        let mut u: Vec<T> = self
            .grid()
            .iter()
            .map(|&x| T::lit(self.initial_condition.eval(x, self.length)))
            .collect();
        if let Some(last) = u.len().checked_sub(1) {
            u[0] = T::lit(self.bc[0]);
            u[last] = T::lit(self.bc[1]);
        }
        u
    }
}

/// Per-call constants in the working precision.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StencilCoeffs<T> {
    pub inv_dx: T,
    /// Signed diffusion coefficient `±ν/dx²`.
    pub diff: T,
    pub dt: T,
    pub stencil: Stencil,
}

impl<T: Scalar> StencilCoeffs<T> {
    pub fn new(cfg: &BurgersConfig) -> Self {
        let dx = cfg.dx();
        let sign = match cfg.stencil {
            Stencil::StandardUpwind => 1.0,
            Stencil::PaperExact => -1.0,
        };
        Self {
            inv_dx: T::lit(1.0 / dx),
            diff: T::lit(sign * cfg.nu / (dx * dx)),
            dt: T::lit(cfg.dt),
            stencil: cfg.stencil,
        }
    }

    /// Convective contribution at interior node `i` from `(u_{i−1}, u_i, u_{i+1})`.
    #[inline]
    pub fn conv(&self, um: T, u: T, up: T) -> T {
        match self.stencil {
            Stencil::StandardUpwind => -u * (u - um) * self.inv_dx,
            Stencil::PaperExact => u * (up - u) * self.inv_dx,
        }
    }

    /// Partial derivatives of [`Self::conv`] with respect to `(u_{i−1}, u_i, u_{i+1})`.
    #[inline]
    pub fn conv_partials(&self, um: T, u: T, up: T) -> [T; 3] {
        let two = T::lit(2.0);
        match self.stencil {
            Stencil::StandardUpwind => [u * self.inv_dx, -(two * u - um) * self.inv_dx, T::zero()],
            Stencil::PaperExact => [T::zero(), (up - two * u) * self.inv_dx, u * self.inv_dx],
        }
    }

    #[inline]
    pub fn rhs(&self, um: T, u: T, up: T) -> T {
        self.conv(um, u, up) + self.diff * (up - T::lit(2.0) * u + um)
    }

    /// Partials of [`Self::rhs`] with respect to `(u_{i−1}, u_i, u_{i+1})`.
    #[inline]
    pub fn rhs_partials(&self, um: T, u: T, up: T) -> [T; 3] {
        let c = self.conv_partials(um, u, up);
        [c[0] + self.diff, c[1] - T::lit(2.0) * self.diff, c[2] + self.diff]
    }
}

/// Nonlinear convective term at every node (zero on the boundary).
pub fn convective_term<T: Scalar>(cfg: &BurgersConfig, u: &[T]) -> Vec<T> {
    let c = StencilCoeffs::new(cfg);
    let n = u.len();
    let mut out = vec![T::zero(); n];
    for i in 1..n.saturating_sub(1) {
        out[i] = c.conv(u[i - 1], u[i], u[i + 1]);
    }
    out
}

fn check_len<T>(cfg: &BurgersConfig, v: &[T], what: &str) -> Result<(), DynamicsError> {
    if v.len() != cfg.n_x {
        return Err(DynamicsError::Dimension(format!(
            "{what} has length {}, grid has {} points",
            v.len(),
            cfg.n_x
        )));
    }
    Ok(())
}

/// One explicit step; boundary values are reimposed from `cfg.bc`.
pub fn burgers_step<T: Scalar>(cfg: &BurgersConfig, u_n: &[T]) -> Result<Vec<T>, DynamicsError> {
    check_len(cfg, u_n, "u_n")?;
    let c = StencilCoeffs::new(cfg);
    let n = u_n.len();
    let mut out = vec![T::zero(); n];
    out[0] = T::lit(cfg.bc[0]);
    out[n - 1] = T::lit(cfg.bc[1]);
    for i in 1..n - 1 {
        out[i] = u_n[i] + c.dt * c.rhs(u_n[i - 1], u_n[i], u_n[i + 1]);
    }
    Ok(out)
}

/// `r_i = (u⁺_i − u_i)/dt − rhs_i(u)` on interior nodes, zero on the boundary.
pub fn burgers_residual<T: Scalar>(
    cfg: &BurgersConfig,
    u_n: &[T],
    u_np1: &[T],
) -> Result<Vec<T>, DynamicsError> {
    check_len(cfg, u_n, "u_n")?;
    check_len(cfg, u_np1, "u_np1")?;
    let c = StencilCoeffs::new(cfg);
    let n = u_n.len();
    let mut r = vec![T::zero(); n];
    for i in 1..n - 1 {
        r[i] = (u_np1[i] - u_n[i]) / c.dt - c.rhs(u_n[i - 1], u_n[i], u_n[i + 1]);
    }
    Ok(r)
}

/// Full-order trajectory over `cfg.n_t` levels starting from the configured profile.
pub fn burgers_march<T: Scalar>(cfg: &BurgersConfig) -> Result<Trajectory<T>, DynamicsError> {
    cfg.validate()?;
    let s = cfg.stability_number();
    if s > 1.0 {
        log::warn!("explicit Burgers step may be unstable: stability number {s:.3} > 1");
    }
    let mut states = DenseMatrix::zeros(cfg.n_x, cfg.n_t);
    let mut u = cfg.initial_field::<T>();
    states.set_column(0, &u);
    for k in 1..cfg.n_t {
        u = burgers_step(cfg, &u)?;
        if u.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::Unstable { step: k });
        }
        states.set_column(k, &u);
    }
    let times = (0..cfg.n_t).map(|k| T::lit(k as f64 * cfg.dt)).collect();
    Ok(Trajectory::new(states, times))
}

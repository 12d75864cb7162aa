//! Two-degree-of-freedom pitch-plunge section, `M Ẍ + K X = F`, marched with
//! second-order backward differences in nondimensional time τ.
//!
//! The state is the stacked first-order vector `z = [h, α, ḣ, α̇]`.

use serde::{Deserialize, Serialize};

use super::{DynamicsError, Trajectory};
use crate::linalg::{DenseMatrix, LuFactor};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigidBodyParams {
    /// Static unbalance x_α.
    pub x_alpha: f64,
    /// Squared radius of gyration r_α².
    pub r_alpha_sq: f64,
    /// Frequency ratio ω_h/ω_α.
    pub omega_ratio: f64,
    /// Reduced velocity V*; the force coefficient is V*²/π.
    pub v_star: f64,
    /// Nondimensional step Δτ.
    pub dtau: f64,
    pub n_steps: usize,
}

impl Default for RigidBodyParams {
    fn default() -> Self {
        Self {
            x_alpha: 0.25,
            r_alpha_sq: 0.5,
            omega_ratio: 0.5,
            v_star: std::f64::consts::PI.sqrt(),
            dtau: std::f64::consts::PI / 18.0,
            n_steps: 1000,
        }
    }
}

impl RigidBodyParams {
    pub fn force_coefficient(&self) -> f64 {
        self.v_star * self.v_star / std::f64::consts::PI
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let finite = [self.x_alpha, self.r_alpha_sq, self.omega_ratio, self.v_star, self.dtau]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(DynamicsError::Param("non-finite rigid-body parameter".into()));
        }
        if !(self.dtau > 0.0) {
            return Err(DynamicsError::Param(format!("dtau must be positive, got {}", self.dtau)));
        }
        if self.r_alpha_sq <= self.x_alpha * self.x_alpha {
            return Err(DynamicsError::Param(format!(
                "mass matrix singular or indefinite: r_alpha_sq = {} <= x_alpha^2 = {}",
                self.r_alpha_sq,
                self.x_alpha * self.x_alpha
            )));
        }
        Ok(())
    }
}

/// Sinusoidal aerodynamic coefficients sampled on the dimensional clock,
/// `C_l = sin(ω_l t)`, `C_m = sin(ω_m t)` with `t_n = n·dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinusoidalForcing {
    pub cl_frequency: f64,
    pub cm_frequency: f64,
    /// Dimensional time step; `dtau / dt` is ω_α.
    pub dt: f64,
}

impl Default for SinusoidalForcing {
    fn default() -> Self {
        Self {
            cl_frequency: 10.0,
            cm_frequency: 20.0,
            dt: std::f64::consts::PI / 1800.0,
        }
    }
}

/// Lift and moment coefficient histories, one entry per time level.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSeries<T> {
    pub cl: Vec<T>,
    pub cm: Vec<T>,
}

impl<T: Scalar> ForcingSeries<T> {
    pub fn new(cl: Vec<T>, cm: Vec<T>) -> Result<Self, DynamicsError> {
        if cl.len() != cm.len() {
            return Err(DynamicsError::Param(format!(
                "forcing lengths differ: cl {} vs cm {}",
                cl.len(),
                cm.len()
            )));
        }
        if cl.iter().chain(&cm).any(|v| !v.is_finite()) {
            return Err(DynamicsError::Param("non-finite forcing".into()));
        }
        Ok(Self { cl, cm })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            cl: vec![T::zero(); n],
            cm: vec![T::zero(); n],
        }
    }

    pub fn sinusoidal(spec: &SinusoidalForcing, n: usize) -> Self {
        let t = |k: usize| k as f64 * spec.dt;
        Self {
            cl: (0..n).map(|k| T::lit((spec.cl_frequency * t(k)).sin())).collect(),
            cm: (0..n).map(|k| T::lit((spec.cm_frequency * t(k)).sin())).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.cl.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cl.is_empty()
    }

    /// Network input matrix, one row `[C_l, C_m]` per time level.
    pub fn as_matrix(&self) -> DenseMatrix<T> {
        DenseMatrix::from_fn(self.len(), 2, |i, j| if j == 0 { self.cl[i] } else { self.cm[i] })
    }
}

/// Stacked state `[h, α, ḣ, α̇]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidBodyState<T> {
    pub z: [T; 4],
}

impl<T: Scalar> RigidBodyState<T> {
    pub fn rest() -> Self {
        Self { z: [T::zero(); 4] }
    }

    /// State at τ = 0 of the undamped periodic response to sinusoidal forcing.
    ///
    /// Starting here suppresses the free-vibration transient, so the response
    /// is a function of the forcing phase alone.
    pub fn periodic_start(
        params: &RigidBodyParams,
        forcing: &SinusoidalForcing,
    ) -> Result<Self, DynamicsError> {
        let mut vel = [0.0; 2];
        for (w, x) in harmonic_response(params, forcing)? {
            vel[0] += w * x[0];
            vel[1] += w * x[1];
        }
        Ok(Self {
            z: [T::zero(), T::zero(), T::lit(vel[0]), T::lit(vel[1])],
        })
    }
}

/// Undamped steady response `x(τ) = Σ X_k sin(w_k τ)`, one `(w_k, X_k)` per
/// forcing harmonic, with `w_k` in nondimensional time.
pub fn harmonic_response(
    params: &RigidBodyParams,
    forcing: &SinusoidalForcing,
) -> Result<Vec<(f64, [f64; 2])>, DynamicsError> {
    let ops = RigidBodyOperators::<f64>::assemble(params)?;
    let omega_alpha = params.dtau / forcing.dt;
    let coeff = params.force_coefficient();
    let mut out = Vec::with_capacity(2);
    for (freq, amp) in [
        (forcing.cl_frequency, [-coeff, 0.0]),
        (forcing.cm_frequency, [0.0, -2.0 * coeff]),
    ] {
        let w = freq / omega_alpha;
        let dyn_stiff = ops.stiffness.sub(&ops.mass.scaled(w * w))?;
        let x = crate::linalg::lu_solve(&dyn_stiff, &amp)?;
        out.push((w, [x[0], x[1]]));
    }
    Ok(out)
}

/// Bound `Σ_k |X_k|` on each displacement of the periodic response.
pub fn periodic_amplitude_bound(
    params: &RigidBodyParams,
    forcing: &SinusoidalForcing,
) -> Result<[f64; 2], DynamicsError> {
    let mut b = [0.0; 2];
    for (_, x) in harmonic_response(params, forcing)? {
        b[0] += x[0].abs();
        b[1] += x[1].abs();
    }
    Ok(b)
}

/// Structural matrices and the 4×4 companion operator
/// `A = [[0, −I], [M⁻¹K, 0]]`, so that `ż + A z = [0; M⁻¹F]`.
#[derive(Debug, Clone)]
pub struct RigidBodyOperators<T> {
    pub mass: DenseMatrix<T>,
    pub stiffness: DenseMatrix<T>,
    pub mass_inv: DenseMatrix<T>,
    pub mass_inv_stiffness: DenseMatrix<T>,
    pub companion: DenseMatrix<T>,
    pub force_coefficient: T,
}

impl<T: Scalar> RigidBodyOperators<T> {
    pub fn assemble(params: &RigidBodyParams) -> Result<Self, DynamicsError> {
        params.validate()?;
        let xa = T::lit(params.x_alpha);
        let ra2 = T::lit(params.r_alpha_sq);
        let wr = T::lit(params.omega_ratio);
        let mass = DenseMatrix::from_rows(&[[T::one(), xa], [xa, ra2]])?;
        let stiffness = DenseMatrix::from_rows(&[[wr * wr, T::zero()], [T::zero(), ra2]])?;
        let mass_inv = crate::linalg::inverse(&mass)
            .map_err(|e| DynamicsError::Param(format!("singular mass matrix: {e}")))?;
        let mass_inv_stiffness = mass_inv.matmul(&stiffness)?;
        let mut companion = DenseMatrix::zeros(4, 4);
        companion[(0, 2)] = -T::one();
        companion[(1, 3)] = -T::one();
        for i in 0..2 {
            for j in 0..2 {
                companion[(2 + i, j)] = mass_inv_stiffness[(i, j)];
            }
        }
        Ok(Self {
            mass,
            stiffness,
            mass_inv,
            mass_inv_stiffness,
            companion,
            force_coefficient: T::lit(params.force_coefficient()),
        })
    }

    /// `M⁻¹F` at one time level, `F = (V*²/π)(−C_l, −2C_m)`.
    pub fn accel_forcing(&self, cl: T, cm: T) -> [T; 2] {
        let f = [-self.force_coefficient * cl, -T::lit(2.0) * self.force_coefficient * cm];
        [
            self.mass_inv[(0, 0)] * f[0] + self.mass_inv[(0, 1)] * f[1],
            self.mass_inv[(1, 0)] * f[0] + self.mass_inv[(1, 1)] * f[1],
        ]
    }

    /// Load vector `b = [0, 0, M⁻¹F]`.
    pub fn load(&self, forcing: &ForcingSeries<T>, n: usize) -> [T; 4] {
        let a = self.accel_forcing(forcing.cl[n], forcing.cm[n]);
        [T::zero(), T::zero(), a[0], a[1]]
    }

    fn apply(&self, z: &[T; 4]) -> [T; 4] {
        let mut out = [T::zero(); 4];
        for (i, o) in out.iter_mut().enumerate() {
            for (j, &zj) in z.iter().enumerate() {
                *o += self.companion[(i, j)] * zj;
            }
        }
        out
    }
}

pub fn rigid_body_assemble<T: Scalar>(
    params: &RigidBodyParams,
) -> Result<RigidBodyOperators<T>, DynamicsError> {
    RigidBodyOperators::assemble(params)
}

/// Marches `params.n_steps` levels (including the initial one).
///
/// Level 1 uses backward Euler; every later level solves
/// `(3/(2Δτ) I + A) z⁺ = (4zⁿ − zⁿ⁻¹)/(2Δτ) + b⁺`.
pub fn rigid_body_march<T: Scalar>(
    params: &RigidBodyParams,
    forcing: &ForcingSeries<T>,
    z0: &RigidBodyState<T>,
) -> Result<Trajectory<T>, DynamicsError> {
    let ops = RigidBodyOperators::assemble(params)?;
    let n = params.n_steps;
    if forcing.len() < n {
        return Err(DynamicsError::Param(format!(
            "forcing has {} levels, need {n}",
            forcing.len()
        )));
    }
    let dtau = T::lit(params.dtau);
    let mut states = DenseMatrix::zeros(4, n);
    if n == 0 {
        return Ok(Trajectory::new(states, Vec::new()));
    }
    states.set_column(0, &z0.z);
    let eye = DenseMatrix::<T>::identity(4);
    if n > 1 {
        let be = LuFactor::new(&eye.scaled(T::one() / dtau).add(&ops.companion)?)
            .map_err(|e| DynamicsError::Numeric(format!("backward Euler system: {e}")))?;
        let b = ops.load(forcing, 1);
        let rhs: Vec<T> = (0..4).map(|i| z0.z[i] / dtau + b[i]).collect();
        states.set_column(1, &be.solve(&rhs)?);
    }
    if n > 2 {
        let bdf = LuFactor::new(&eye.scaled(T::lit(1.5) / dtau).add(&ops.companion)?)
            .map_err(|e| DynamicsError::Numeric(format!("BDF2 system: {e}")))?;
        let two_dtau = T::lit(2.0) * dtau;
        for k in 2..n {
            let b = ops.load(forcing, k);
            let rhs: Vec<T> = (0..4)
                .map(|i| (T::lit(4.0) * states[(i, k - 1)] - states[(i, k - 2)]) / two_dtau + b[i])
                .collect();
            let z = bdf.solve(&rhs)?;
            if z.iter().any(|v| !v.is_finite()) {
                return Err(DynamicsError::Unstable { step: k });
            }
            states.set_column(k, &z);
        }
    }
    let times = (0..n).map(|k| T::lit(k as f64 * params.dtau)).collect();
    Ok(Trajectory::new(states, times))
}

/// BDF2 residual at level `step` (the index of `z_np1`):
/// `r = (3z⁺ − 4zⁿ + zⁿ⁻¹)/(2Δτ) + A z⁺ − b⁺`.
pub fn rigid_body_residual<T: Scalar>(
    ops: &RigidBodyOperators<T>,
    dtau: T,
    forcing: &ForcingSeries<T>,
    z_nm1: &[T; 4],
    z_n: &[T; 4],
    z_np1: &[T; 4],
    step: usize,
) -> [T; 4] {
    let az = ops.apply(z_np1);
    let b = ops.load(forcing, step);
    let two_dtau = T::lit(2.0) * dtau;
    let mut r = [T::zero(); 4];
    for i in 0..4 {
        r[i] = (T::lit(3.0) * z_np1[i] - T::lit(4.0) * z_n[i] + z_nm1[i]) / two_dtau + az[i] - b[i];
    }
    r
}

/// Backward-Euler residual of the bootstrap level:
/// `r = (z¹ − z⁰)/Δτ + A z¹ − b¹`.
pub fn rigid_body_residual_first<T: Scalar>(
    ops: &RigidBodyOperators<T>,
    dtau: T,
    forcing: &ForcingSeries<T>,
    z0: &[T; 4],
    z1: &[T; 4],
) -> [T; 4] {
    let az = ops.apply(z1);
    let b = ops.load(forcing, 1);
    let mut r = [T::zero(); 4];
    for i in 0..4 {
        r[i] = (z1[i] - z0[i]) / dtau + az[i] - b[i];
    }
    r
}

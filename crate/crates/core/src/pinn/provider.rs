use super::{fd_jacobian, FdStep, JacobianMatrix, PinnError};
use crate::dynamics::{
    BurgersConfig, ForcingSeries, ReducedBurgers, RigidBodyOperators, RigidBodyParams, StencilCoeffs,
};
use crate::linalg::DenseMatrix;
use crate::rom::{DeimOperator, PodBasis};
use crate::Scalar;

/// Source of discrete residuals for a predicted horizon `y` (levels × width).
///
/// Residual rows are stacked level by level over [`Self::eqn_levels`], each
/// level contributing [`Self::rows_per_level`] rows. Providers exchange plain
/// values only, so an out-of-process solver can implement this trait.
pub trait ResidualProvider<T: Scalar>: Send + Sync {
    /// `(levels, width)` of the horizon the provider reads.
    fn shape(&self) -> (usize, usize);
    /// Levels whose update equation is evaluated.
    fn eqn_levels(&self) -> &[usize];
    fn rows_per_level(&self) -> usize;

    fn residual_len(&self) -> usize {
        self.eqn_levels().len() * self.rows_per_level()
    }

    fn residual(&self, y: &DenseMatrix<T>) -> Result<Vec<T>, PinnError>;

    /// Whether [`Self::vjp`] is available, i.e. the residual can sit inside
    /// the differentiation graph.
    fn graph_attached(&self) -> bool {
        true
    }

    /// `(∂R/∂y)ᵀ g`, shaped like `y`.
    fn vjp(&self, y: &DenseMatrix<T>, g: &[T]) -> Result<DenseMatrix<T>, PinnError>;

    /// Flat indices `level·width + column` read by residual row `row`.
    fn row_support(&self, row: usize) -> Vec<usize>;

    fn jacobian(&self, y: &DenseMatrix<T>, epoch: usize) -> Result<JacobianMatrix<T>, PinnError> {
        fd_jacobian(self, y, FdStep::default(), epoch)
    }
}

impl<T: Scalar, P: ResidualProvider<T> + ?Sized> ResidualProvider<T> for &P {
    fn shape(&self) -> (usize, usize) {
        (**self).shape()
    }
    fn eqn_levels(&self) -> &[usize] {
        (**self).eqn_levels()
    }
    fn rows_per_level(&self) -> usize {
        (**self).rows_per_level()
    }
    fn residual(&self, y: &DenseMatrix<T>) -> Result<Vec<T>, PinnError> {
        (**self).residual(y)
    }
    fn graph_attached(&self) -> bool {
        (**self).graph_attached()
    }
    fn vjp(&self, y: &DenseMatrix<T>, g: &[T]) -> Result<DenseMatrix<T>, PinnError> {
        (**self).vjp(y, g)
    }
    fn row_support(&self, row: usize) -> Vec<usize> {
        (**self).row_support(row)
    }
}

fn check_levels(eqn: &[usize], first: usize, levels: usize) -> Result<(), PinnError> {
    if let Some(&bad) = eqn.iter().find(|&&m| m < first || m >= levels) {
        return Err(PinnError::Config(format!(
            "equation level {bad} needs levels {first}..{levels} of history"
        )));
    }
    Ok(())
}

fn check_shape<T: Scalar>(expected: (usize, usize), y: &DenseMatrix<T>) -> Result<(), PinnError> {
    if y.shape() != expected {
        return Err(PinnError::Config(format!(
            "horizon is {:?}, provider expects {expected:?}",
            y.shape()
        )));
    }
    Ok(())
}

/// Full-order Burgers update residual on interior nodes.
#[derive(Debug, Clone)]
pub struct BurgersProvider<T> {
    coeffs: StencilCoeffs<T>,
    n_x: usize,
    levels: usize,
    eqn: Vec<usize>,
}

impl<T: Scalar> BurgersProvider<T> {
    pub fn new(cfg: &BurgersConfig, eqn_levels: Vec<usize>) -> Result<Self, PinnError> {
        cfg.validate()?;
        check_levels(&eqn_levels, 1, cfg.n_t)?;
        Ok(Self {
            coeffs: StencilCoeffs::new(cfg),
            n_x: cfg.n_x,
            levels: cfg.n_t,
            eqn: eqn_levels,
        })
    }
}

impl<T: Scalar> ResidualProvider<T> for BurgersProvider<T> {
    fn shape(&self) -> (usize, usize) {
        (self.levels, self.n_x)
    }

    fn eqn_levels(&self) -> &[usize] {
        &self.eqn
    }

    fn rows_per_level(&self) -> usize {
        self.n_x - 2
    }

    fn residual(&self, y: &DenseMatrix<T>) -> Result<Vec<T>, PinnError> {
        check_shape(self.shape(), y)?;
        let c = &self.coeffs;
        let mut r = Vec::with_capacity(self.residual_len());
        for &m in &self.eqn {
            let (un, up) = (y.row(m - 1), y.row(m));
            for i in 1..self.n_x - 1 {
                r.push((up[i] - un[i]) / c.dt - c.rhs(un[i - 1], un[i], un[i + 1]));
            }
        }
        Ok(r)
    }

    fn vjp(&self, y: &DenseMatrix<T>, g: &[T]) -> Result<DenseMatrix<T>, PinnError> {
        check_shape(self.shape(), y)?;
        let c = &self.coeffs;
        let inv_dt = T::one() / c.dt;
        let mut out = DenseMatrix::zeros(self.levels, self.n_x);
        let w = self.rows_per_level();
        for (k, &m) in self.eqn.iter().enumerate() {
            let un = y.row(m - 1);
            let gk = &g[k * w..(k + 1) * w];
            let mut prev = vec![T::zero(); self.n_x];
            for i in 1..self.n_x - 1 {
                let gi = gk[i - 1];
                out[(m, i)] += gi * inv_dt;
                let p = c.rhs_partials(un[i - 1], un[i], un[i + 1]);
                prev[i - 1] -= gi * p[0];
                prev[i] -= gi * (p[1] + inv_dt);
                prev[i + 1] -= gi * p[2];
            }
            for (o, v) in out.row_mut(m - 1).iter_mut().zip(prev) {
                *o += v;
            }
        }
        Ok(out)
    }

    fn row_support(&self, row: usize) -> Vec<usize> {
        let w = self.rows_per_level();
        let m = self.eqn[row / w];
        let i = row % w + 1;
        let nx = self.n_x;
        vec![(m - 1) * nx + i - 1, (m - 1) * nx + i, (m - 1) * nx + i + 1, m * nx + i]
    }
}

/// Galerkin (optionally DEIM) Burgers residual in POD coordinates.
#[derive(Debug, Clone)]
pub struct ReducedBurgersProvider<T> {
    model: ReducedBurgers<T>,
    levels: usize,
    eqn: Vec<usize>,
}

impl<T: Scalar> ReducedBurgersProvider<T> {
    pub fn new(
        cfg: &BurgersConfig,
        basis: &PodBasis<T>,
        hyper: Option<&DeimOperator<T>>,
        eqn_levels: Vec<usize>,
    ) -> Result<Self, PinnError> {
        check_levels(&eqn_levels, 1, cfg.n_t)?;
        Ok(Self {
            model: ReducedBurgers::new(cfg, basis, hyper)?,
            levels: cfg.n_t,
            eqn: eqn_levels,
        })
    }

    pub fn model(&self) -> &ReducedBurgers<T> {
        &self.model
    }

    fn level_pairs(&self, y: &DenseMatrix<T>) -> (DenseMatrix<T>, DenseMatrix<T>) {
        let prev: Vec<usize> = self.eqn.iter().map(|&m| m - 1).collect();
        (y.select_rows(&prev), y.select_rows(&self.eqn))
    }
}

impl<T: Scalar> ResidualProvider<T> for ReducedBurgersProvider<T> {
    fn shape(&self) -> (usize, usize) {
        (self.levels, self.model.n_modes())
    }

    fn eqn_levels(&self) -> &[usize] {
        &self.eqn
    }

    fn rows_per_level(&self) -> usize {
        self.model.n_modes()
    }

    fn residual(&self, y: &DenseMatrix<T>) -> Result<Vec<T>, PinnError> {
        check_shape(self.shape(), y)?;
        let (prev, next) = self.level_pairs(y);
        Ok(self.model.residual_rows(&prev, &next)?.into_vec())
    }

    fn vjp(&self, y: &DenseMatrix<T>, g: &[T]) -> Result<DenseMatrix<T>, PinnError> {
        check_shape(self.shape(), y)?;
        let n = self.model.n_modes();
        let g = DenseMatrix::from_vec(self.eqn.len(), n, g.to_vec())?;
        let (prev, _) = self.level_pairs(y);
        let cur = self.model.residual_vjp_current_rows(&prev, &g)?;
        let inv_dt = T::one() / self.model.dt();
        let mut out = DenseMatrix::zeros(self.levels, n);
        for (k, &m) in self.eqn.iter().enumerate() {
            for (o, &v) in out.row_mut(m - 1).iter_mut().zip(cur.row(k)) {
                *o += v;
            }
            for (o, &v) in out.row_mut(m).iter_mut().zip(g.row(k)) {
                *o += v * inv_dt;
            }
        }
        Ok(out)
    }

    fn row_support(&self, row: usize) -> Vec<usize> {
        let n = self.model.n_modes();
        let m = self.eqn[row / n];
        ((m - 1) * n..(m + 1) * n).collect()
    }
}

/// Rigid-body residual in terms of predicted positions only.
///
/// Velocities are recovered from positions with the same difference
/// formulas the marcher uses for its displacement rows: `v⁰` is the initial
/// velocity, `v¹ = (x¹ − x⁰)/Δτ` and `vⁿ = (3xⁿ − 4xⁿ⁻¹ + xⁿ⁻²)/(2Δτ)`. The
/// residual rows are the velocity rows of the update, so a marched
/// trajectory satisfies them to round-off.
#[derive(Debug, Clone)]
pub struct RigidBodyProvider<T> {
    mik: DenseMatrix<T>,
    accel: DenseMatrix<T>,
    v0: [T; 2],
    dtau: T,
    levels: usize,
    eqn: Vec<usize>,
}

impl<T: Scalar> RigidBodyProvider<T> {
    pub fn new(
        params: &RigidBodyParams,
        forcing: &ForcingSeries<T>,
        v0: [T; 2],
        eqn_levels: Vec<usize>,
    ) -> Result<Self, PinnError> {
        let ops = RigidBodyOperators::<T>::assemble(params)?;
        let levels = params.n_steps;
        if forcing.len() < levels {
            return Err(PinnError::Config(format!(
                "forcing has {} levels, horizon has {levels}",
                forcing.len()
            )));
        }
        check_levels(&eqn_levels, 1, levels)?;
        let accel = DenseMatrix::from_fn(levels, 2, |n, c| ops.accel_forcing(forcing.cl[n], forcing.cm[n])[c]);
        Ok(Self {
            mik: ops.mass_inv_stiffness,
            accel,
            v0,
            dtau: T::lit(params.dtau),
            levels,
            eqn: eqn_levels,
        })
    }

    fn velocities(&self, y: &DenseMatrix<T>, upto: usize) -> DenseMatrix<T> {
        let mut v = DenseMatrix::zeros(upto + 1, 2);
        let h2 = T::lit(2.0) * self.dtau;
        for n in 0..=upto {
            for c in 0..2 {
                v[(n, c)] = match n {
                    0 => self.v0[c],
                    1 => (y[(1, c)] - y[(0, c)]) / self.dtau,
                    _ => (T::lit(3.0) * y[(n, c)] - T::lit(4.0) * y[(n - 1, c)] + y[(n - 2, c)]) / h2,
                };
            }
        }
        v
    }
}

impl<T: Scalar> ResidualProvider<T> for RigidBodyProvider<T> {
    fn shape(&self) -> (usize, usize) {
        (self.levels, 2)
    }

    fn eqn_levels(&self) -> &[usize] {
        &self.eqn
    }

    fn rows_per_level(&self) -> usize {
        2
    }

    fn residual(&self, y: &DenseMatrix<T>) -> Result<Vec<T>, PinnError> {
        check_shape(self.shape(), y)?;
        let last = self.eqn.iter().copied().max().unwrap_or(0);
        let v = self.velocities(y, last);
        let h2 = T::lit(2.0) * self.dtau;
        let mut r = Vec::with_capacity(self.residual_len());
        for &m in &self.eqn {
            for c in 0..2 {
                let dv = if m == 1 {
                    (v[(1, c)] - v[(0, c)]) / self.dtau
                } else {
                    (T::lit(3.0) * v[(m, c)] - T::lit(4.0) * v[(m - 1, c)] + v[(m - 2, c)]) / h2
                };
                let kx = self.mik[(c, 0)] * y[(m, 0)] + self.mik[(c, 1)] * y[(m, 1)];
                r.push(dv + kx - self.accel[(m, c)]);
            }
        }
        Ok(r)
    }

    fn vjp(&self, y: &DenseMatrix<T>, g: &[T]) -> Result<DenseMatrix<T>, PinnError> {
        check_shape(self.shape(), y)?;
        let mut gx = DenseMatrix::zeros(self.levels, 2);
        let mut gv = DenseMatrix::zeros(self.levels, 2);
        let h2 = T::lit(2.0) * self.dtau;
        let (three, four) = (T::lit(3.0), T::lit(4.0));
        for (k, &m) in self.eqn.iter().enumerate() {
            let gm = [g[2 * k], g[2 * k + 1]];
            for c in 0..2 {
                gx[(m, c)] += self.mik[(0, c)] * gm[0] + self.mik[(1, c)] * gm[1];
                if m == 1 {
                    gv[(1, c)] += gm[c] / self.dtau;
                } else {
                    gv[(m, c)] += three * gm[c] / h2;
                    gv[(m - 1, c)] -= four * gm[c] / h2;
                    gv[(m - 2, c)] += gm[c] / h2;
                }
            }
        }
        for n in 1..self.levels {
            for c in 0..2 {
                let gvn = gv[(n, c)];
                if n == 1 {
                    gx[(1, c)] += gvn / self.dtau;
                    gx[(0, c)] -= gvn / self.dtau;
                } else {
                    gx[(n, c)] += three * gvn / h2;
                    gx[(n - 1, c)] -= four * gvn / h2;
                    gx[(n - 2, c)] += gvn / h2;
                }
            }
        }
        Ok(gx)
    }

    fn row_support(&self, row: usize) -> Vec<usize> {
        let m = self.eqn[row / 2];
        (2 * m.saturating_sub(4)..2 * (m + 1)).collect()
    }
}

/// Wraps a provider so that only residual values cross the boundary, the
/// way an external solver would deliver them.
#[derive(Debug, Clone)]
pub struct ExternalSolver<P>(pub P);

impl<T: Scalar, P: ResidualProvider<T>> ResidualProvider<T> for ExternalSolver<P> {
    fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    fn eqn_levels(&self) -> &[usize] {
        self.0.eqn_levels()
    }

    fn rows_per_level(&self) -> usize {
        self.0.rows_per_level()
    }

    fn residual(&self, y: &DenseMatrix<T>) -> Result<Vec<T>, PinnError> {
        self.0.residual(y)
    }

    fn graph_attached(&self) -> bool {
        false
    }

    fn vjp(&self, _y: &DenseMatrix<T>, _g: &[T]) -> Result<DenseMatrix<T>, PinnError> {
        Err(PinnError::Config(
            "residual comes from a detached solver and has no graph gradient".into(),
        ))
    }

    fn row_support(&self, row: usize) -> Vec<usize> {
        self.0.row_support(row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{
        burgers_march, convective_term, rigid_body_march, RigidBodyState, SinusoidalForcing, Stencil,
    };
    use crate::rom::{build_deim_operator, compute_pod, ModeSelector, SnapshotSet};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn burgers_truth(cfg: &BurgersConfig) -> DenseMatrix<f64> {
        burgers_march::<f64>(cfg).unwrap().states.transpose()
    }

    fn all_levels(n: usize, first: usize) -> Vec<usize> {
        (first..n).collect()
    }

    fn rigid_setup(eqn: Vec<usize>) -> (RigidBodyProvider<f64>, DenseMatrix<f64>) {
        let params = RigidBodyParams::default();
        let forcing = SinusoidalForcing::default();
        let series = ForcingSeries::sinusoidal(&forcing, params.n_steps);
        let z0 = RigidBodyState::periodic_start(&params, &forcing).unwrap();
        let tr = rigid_body_march(&params, &series, &z0).unwrap();
        let y = DenseMatrix::from_fn(params.n_steps, 2, |n, c| tr.states[(c, n)]);
        let p = RigidBodyProvider::new(&params, &series, [z0.z[2], z0.z[3]], eqn).unwrap();
        (p, y)
    }

    /// Checks `vjp` against the finite-difference Jacobian on a random state.
    fn vjp_matches_fd<P: ResidualProvider<f64>>(p: &P, y: &DenseMatrix<f64>, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g: Vec<f64> = (0..p.residual_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = p.vjp(y, &g).unwrap();
        let j = p.jacobian(y, 0).unwrap();
        let b = j.tr_matvec(&g);
        let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (x, z) in a.as_slice().iter().zip(&b) {
            assert!((x - z).abs() <= 1e-6 * scale, "{x} vs {z}");
        }
    }

    #[test]
    fn marched_trajectories_have_zero_residual() {
        for stencil in [Stencil::StandardUpwind, Stencil::PaperExact] {
            let cfg = BurgersConfig {
                stencil,
                ..Default::default()
            };
            let y = burgers_truth(&cfg);
            let p = BurgersProvider::new(&cfg, all_levels(cfg.n_t, 1)).unwrap();
            let r = p.residual(&y).unwrap();
            assert_eq!(r.len(), 99 * 18);
            assert!(r.iter().all(|v| v.abs() <= 1e-10));
        }
        let (p, y) = rigid_setup(all_levels(1000, 1));
        assert!(p.residual(&y).unwrap().iter().all(|v| v.abs() <= 1e-10));
    }

    #[test]
    fn burgers_perturbation_touches_stencil_rows_only() {
        let cfg = BurgersConfig::default();
        let y = burgers_truth(&cfg);
        let p = BurgersProvider::new(&cfg, all_levels(cfg.n_t, 1)).unwrap();
        let base = p.residual(&y).unwrap();
        let (lvl, node) = (40, 7);
        let mut y2 = y.clone();
        y2[(lvl, node)] += 1e-3;
        let r2 = p.residual(&y2).unwrap();
        for (row, (a, b)) in base.iter().zip(&r2).enumerate() {
            let m = row / 18 + 1;
            let i = row % 18 + 1;
            let adjacent = (m == lvl && i == node) || (m == lvl + 1 && i.abs_diff(node) <= 1);
            if !adjacent {
                assert_eq!(a, b, "row {row}");
            }
        }
    }

    #[test]
    fn burgers_jacobian_sparsity_and_directional_derivative() {
        let cfg = BurgersConfig::default();
        let y = burgers_truth(&cfg);
        let p = BurgersProvider::new(&cfg, all_levels(cfg.n_t, 1)).unwrap();
        let j = p.jacobian(&y, 0).unwrap();
        // at most 4 entries per row, all on the spatial tridiagonal bands
        assert!(j.nnz() <= 4 * p.residual_len());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let delta: Vec<f64> = (0..y.rows() * y.cols()).map(|_| rng.gen_range(-1e-5..1e-5)).collect();
        let mut yd = y.clone();
        yd.as_mut_slice().iter_mut().zip(&delta).for_each(|(a, d)| *a += d);
        let dr: Vec<f64> = p
            .residual(&yd)
            .unwrap()
            .iter()
            .zip(p.residual(&y).unwrap())
            .map(|(a, b)| a - b)
            .collect();
        let jd = j.matvec(&delta);
        let num: f64 = jd.iter().zip(&dr).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = dr.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(num <= 1e-4 * den, "{num} vs {den}");
    }

    #[test]
    fn dense_jacobian_outside_pattern_is_zero() {
        // brute-force every entry and compare with the stored pattern
        let cfg = BurgersConfig {
            n_x: 8,
            n_t: 5,
            ..Default::default()
        };
        let y = burgers_truth(&cfg);
        let p = BurgersProvider::new(&cfg, all_levels(cfg.n_t, 1)).unwrap();
        let j = p.jacobian(&y, 0).unwrap();
        let base = p.residual(&y).unwrap();
        for col in 0..y.rows() * y.cols() {
            let mut y2 = y.clone();
            y2.as_mut_slice()[col] += 1e-6;
            let r2 = p.residual(&y2).unwrap();
            for (row, (a, b)) in r2.iter().zip(&base).enumerate() {
                let fd = (a - b) / 1e-6;
                if !p.row_support(row).contains(&col) {
                    assert!(fd.abs() <= 1e-12);
                } else {
                    assert!((fd - j.get(row, col)).abs() <= 1e-3 * fd.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn analytic_vjps_match_finite_differences() {
        for stencil in [Stencil::StandardUpwind, Stencil::PaperExact] {
            let cfg = BurgersConfig {
                stencil,
                ..Default::default()
            };
            let mut y = burgers_truth(&cfg);
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            y.as_mut_slice().iter_mut().for_each(|v| *v += rng.gen_range(-0.1..0.1));
            vjp_matches_fd(&BurgersProvider::new(&cfg, vec![1, 5, 50, 99]).unwrap(), &y, 2);

            let snaps = SnapshotSet::from_matrix(burgers_truth(&cfg).transpose());
            let basis = compute_pod(&snaps, ModeSelector::NModes(6)).unwrap();
            let nl = snaps.map_columns(|u| convective_term(&cfg, u));
            let deim = build_deim_operator(&basis, &nl, 6).unwrap();
            let yr = DenseMatrix::from_fn(cfg.n_t, 6, |_, _| rng.gen_range(-1.0..1.0));
            for hyper in [None, Some(&deim)] {
                let p = ReducedBurgersProvider::new(&cfg, &basis, hyper, all_levels(cfg.n_t, 1)).unwrap();
                vjp_matches_fd(&p, &yr, 3);
            }
        }
        let (p, mut y) = rigid_setup(vec![1, 2, 3, 4, 10, 999]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        y.as_mut_slice().iter_mut().for_each(|v| *v += rng.gen_range(-0.1..0.1));
        vjp_matches_fd(&p, &y, 5);
    }

    #[test]
    fn complete_basis_reduced_residual_is_projected_full_residual() {
        let cfg = BurgersConfig::default();
        let y = burgers_truth(&cfg);
        let snaps = SnapshotSet::from_matrix(y.transpose());
        let basis = compute_pod(&snaps, ModeSelector::NModes(18)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        // a horizon inside span(Φ) that is not a solution
        let yr = DenseMatrix::from_fn(cfg.n_t, 18, |_, _| rng.gen_range(-0.2..0.2));
        let yf = crate::linalg::matmul_tr(&yr, &basis.phi).unwrap();
        let full = BurgersProvider::new(&cfg, all_levels(cfg.n_t, 1)).unwrap().residual(&yf).unwrap();
        let red = ReducedBurgersProvider::new(&cfg, &basis, None, all_levels(cfg.n_t, 1))
            .unwrap()
            .residual(&yr)
            .unwrap();
        for m in 0..cfg.n_t - 1 {
            let mut padded = vec![0.0; 20];
            padded[1..19].copy_from_slice(&full[m * 18..(m + 1) * 18]);
            let proj = basis.project(&padded);
            for k in 0..18 {
                assert!((proj[k] - red[m * 18 + k]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn level_range_validated() {
        let cfg = BurgersConfig::default();
        assert!(BurgersProvider::<f64>::new(&cfg, vec![0]).is_err());
        assert!(BurgersProvider::<f64>::new(&cfg, vec![100]).is_err());
    }

    #[test]
    fn external_solver_has_no_graph_gradient() {
        let cfg = BurgersConfig::default();
        let p = ExternalSolver(BurgersProvider::<f64>::new(&cfg, vec![1]).unwrap());
        assert!(!p.graph_attached());
        let y = burgers_truth(&cfg);
        assert!(p.vjp(&y, &[0.0; 18]).is_err());
        assert_eq!(p.jacobian(&y, 3).unwrap().epoch_stamp, 3);
    }
}

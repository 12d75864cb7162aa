//! Galerkin-projected Burgers dynamics in POD coordinates, optionally with
//! DEIM sampling of the convective term.

use super::burgers::StencilCoeffs;
use super::{BurgersConfig, DynamicsError, Trajectory};
use crate::linalg::{matmul, matmul_tr, tr_matmul, DenseMatrix};
use crate::rom::{DeimOperator, PodBasis};
use crate::Scalar;

/// Precomputed reduced operators.
///
/// The reduced right-hand side is `Ñ(û) + A_R û` with `A_R = Φᵀ(±νD_xx)Φ` and
/// `Ñ(û) = Π·N_S(Φ_L û)`: the convective term is evaluated only at the sample
/// nodes `S` from the lifted values on their stencil rows `L`, then mapped
/// back by `Π` (`Φᵀ` without hyper-reduction, the DEIM projector with it).
#[derive(Debug, Clone)]
pub struct ReducedBurgers<T> {
    coeffs: StencilCoeffs<T>,
    /// Grid rows of Φ needed by the samples.
    phi_local: DenseMatrix<T>,
    /// Per sample, local row positions of `(i−1, i, i+1)`; `None` on the boundary.
    samples: Vec<Option<[usize; 3]>>,
    projector: DenseMatrix<T>,
    a_r: DenseMatrix<T>,
    hyper: bool,
}

impl<T: Scalar> ReducedBurgers<T> {
    pub fn new(
        cfg: &BurgersConfig,
        basis: &PodBasis<T>,
        hyper: Option<&DeimOperator<T>>,
    ) -> Result<Self, DynamicsError> {
        cfg.validate()?;
        let n_x = cfg.n_x;
        if basis.dim() != n_x {
            return Err(DynamicsError::Dimension(format!(
                "basis has {} rows, grid has {n_x} points",
                basis.dim()
            )));
        }
        let coeffs = StencilCoeffs::<T>::new(cfg);
        let phi = &basis.phi;

        // A_R = Φᵀ (±ν D_xx Φ)
        let mut dphi = DenseMatrix::zeros(n_x, basis.n_modes());
        for i in 1..n_x - 1 {
            for k in 0..basis.n_modes() {
                dphi[(i, k)] =
                    coeffs.diff * (phi[(i + 1, k)] - T::lit(2.0) * phi[(i, k)] + phi[(i - 1, k)]);
            }
        }
        let a_r = tr_matmul(phi, &dphi)?;

        let (sample_nodes, local_rows, projector) = match hyper {
            None => ((0..n_x).collect::<Vec<_>>(), (0..n_x).collect::<Vec<_>>(), phi.transpose()),
            Some(h) => {
                if h.projector.shape() != (basis.n_modes(), h.m_h()) {
                    return Err(DynamicsError::Dimension(format!(
                        "DEIM projector is {:?}, expected ({}, {})",
                        h.projector.shape(),
                        basis.n_modes(),
                        h.m_h()
                    )));
                }
                if h.indices.iter().chain(&h.sample_stencil).any(|&i| i >= n_x) {
                    return Err(DynamicsError::Dimension("DEIM index outside the grid".into()));
                }
                (h.indices.clone(), h.sample_stencil.clone(), h.projector.clone())
            }
        };
        let position = |g: usize| local_rows.iter().position(|&r| r == g);
        let mut samples = Vec::with_capacity(sample_nodes.len());
        for &i in &sample_nodes {
            if i == 0 || i + 1 == n_x {
                samples.push(None);
                continue;
            }
            let locs = [position(i - 1), position(i), position(i + 1)];
            match locs {
                [Some(a), Some(b), Some(c)] => samples.push(Some([a, b, c])),
                _ => {
                    return Err(DynamicsError::Dimension(format!(
                        "sample stencil misses a neighbour of node {i}"
                    )))
                }
            }
        }
        Ok(Self {
            coeffs,
            phi_local: phi.select_rows(&local_rows),
            samples,
            projector,
            a_r,
            hyper: hyper.is_some(),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.a_r.rows()
    }

    pub fn is_hyper_reduced(&self) -> bool {
        self.hyper
    }

    pub fn dt(&self) -> T {
        self.coeffs.dt
    }

    pub fn a_r(&self) -> &DenseMatrix<T> {
        &self.a_r
    }

    fn check(&self, v: &[T], what: &str) -> Result<(), DynamicsError> {
        if v.len() != self.n_modes() {
            return Err(DynamicsError::Dimension(format!(
                "{what} has {} coordinates, basis has {} modes",
                v.len(),
                self.n_modes()
            )));
        }
        Ok(())
    }

    /// `Ñ(û)`.
    pub fn nonlinear(&self, u_hat: &[T]) -> Vec<T> {
        let u = self.phi_local.matvec(u_hat).expect("checked length");
        let nl: Vec<T> = self
            .samples
            .iter()
            .map(|s| match *s {
                Some([a, b, c]) => self.coeffs.conv(u[a], u[b], u[c]),
                None => T::zero(),
            })
            .collect();
        self.projector.matvec(&nl).expect("projector matches samples")
    }

    /// `Ñ(û) + A_R û`.
    pub fn rhs(&self, u_hat: &[T]) -> Vec<T> {
        let mut out = self.nonlinear(u_hat);
        let lin = self.a_r.matvec(u_hat).expect("checked length");
        out.iter_mut().zip(lin).for_each(|(o, l)| *o += l);
        out
    }

    pub fn step(&self, u_hat: &[T]) -> Result<Vec<T>, DynamicsError> {
        self.check(u_hat, "u_hat")?;
        let rhs = self.rhs(u_hat);
        Ok(u_hat.iter().zip(rhs).map(|(&u, r)| u + self.coeffs.dt * r).collect())
    }

    /// `r̂ = (û⁺ − û)/dt − Ñ(û) − A_R û`.
    pub fn residual(&self, u_hat_n: &[T], u_hat_np1: &[T]) -> Result<Vec<T>, DynamicsError> {
        self.check(u_hat_n, "u_hat_n")?;
        self.check(u_hat_np1, "u_hat_np1")?;
        let rhs = self.rhs(u_hat_n);
        Ok(u_hat_np1
            .iter()
            .zip(u_hat_n)
            .zip(rhs)
            .map(|((&p, &c), r)| (p - c) / self.coeffs.dt - r)
            .collect())
    }

    /// `(∂r̂/∂ûⁿ)ᵀ g`; the derivative with respect to `û⁺` is simply `g/dt`.
    pub fn residual_vjp_current(&self, u_hat_n: &[T], g: &[T]) -> Vec<T> {
        let u = self.phi_local.matvec(u_hat_n).expect("checked length");
        let w = self.projector.tr_matvec(g).expect("projector rows match modes");
        let mut du = vec![T::zero(); u.len()];
        for (s, &ws) in self.samples.iter().zip(&w) {
            if let Some([a, b, c]) = *s {
                let p = self.coeffs.conv_partials(u[a], u[b], u[c]);
                du[a] += ws * p[0];
                du[b] += ws * p[1];
                du[c] += ws * p[2];
            }
        }
        let nl = self.phi_local.tr_matvec(&du).expect("local rows");
        let lin = self.a_r.tr_matvec(g).expect("square");
        g.iter()
            .zip(nl.iter().zip(lin))
            .map(|(&gi, (&n, l))| -gi / self.coeffs.dt - n - l)
            .collect()
    }

    /// Row-wise [`residual`](Self::residual) for many level pairs at once.
    pub fn residual_rows(
        &self,
        prev: &DenseMatrix<T>,
        next: &DenseMatrix<T>,
    ) -> Result<DenseMatrix<T>, DynamicsError> {
        self.check_rows(prev, next.rows())?;
        self.check_rows(next, prev.rows())?;
        let u = matmul_tr(prev, &self.phi_local)?;
        let nl = DenseMatrix::from_fn(prev.rows(), self.samples.len(), |r, s| match self.samples[s] {
            Some([a, b, c]) => {
                let u = u.row(r);
                self.coeffs.conv(u[a], u[b], u[c])
            }
            None => T::zero(),
        });
        let nl = matmul_tr(&nl, &self.projector)?;
        let lin = matmul_tr(prev, &self.a_r)?;
        let inv_dt = T::one() / self.coeffs.dt;
        Ok(DenseMatrix::from_fn(prev.rows(), self.n_modes(), |r, k| {
            (next[(r, k)] - prev[(r, k)]) * inv_dt - nl[(r, k)] - lin[(r, k)]
        }))
    }

    /// Row-wise [`residual_vjp_current`](Self::residual_vjp_current).
    pub fn residual_vjp_current_rows(
        &self,
        prev: &DenseMatrix<T>,
        g: &DenseMatrix<T>,
    ) -> Result<DenseMatrix<T>, DynamicsError> {
        self.check_rows(prev, g.rows())?;
        self.check_rows(g, prev.rows())?;
        let u = matmul_tr(prev, &self.phi_local)?;
        let w = matmul(g, &self.projector)?;
        let mut du = DenseMatrix::zeros(prev.rows(), self.phi_local.rows());
        for r in 0..prev.rows() {
            let (u, w) = (u.row(r), w.row(r));
            let d = du.row_mut(r);
            for (s, &ws) in self.samples.iter().zip(w) {
                if let Some([a, b, c]) = *s {
                    let p = self.coeffs.conv_partials(u[a], u[b], u[c]);
                    d[a] += ws * p[0];
                    d[b] += ws * p[1];
                    d[c] += ws * p[2];
                }
            }
        }
        let nl = matmul(&du, &self.phi_local)?;
        let lin = matmul(g, &self.a_r)?;
        let inv_dt = T::one() / self.coeffs.dt;
        Ok(DenseMatrix::from_fn(prev.rows(), self.n_modes(), |r, k| {
            -g[(r, k)] * inv_dt - nl[(r, k)] - lin[(r, k)]
        }))
    }

    fn check_rows(&self, m: &DenseMatrix<T>, rows: usize) -> Result<(), DynamicsError> {
        if m.shape() != (rows, self.n_modes()) {
            return Err(DynamicsError::Dimension(format!(
                "expected {rows} x {} reduced coordinates, got {:?}",
                self.n_modes(),
                m.shape()
            )));
        }
        Ok(())
    }
}

/// One-shot reduced residual; build a [`ReducedBurgers`] when calling repeatedly.
pub fn burgers_residual_reduced<T: Scalar>(
    cfg: &BurgersConfig,
    basis: &PodBasis<T>,
    u_hat_n: &[T],
    u_hat_np1: &[T],
    hyper: Option<&DeimOperator<T>>,
) -> Result<Vec<T>, DynamicsError> {
    ReducedBurgers::new(cfg, basis, hyper)?.residual(u_hat_n, u_hat_np1)
}

/// Marches `cfg.n_t` levels in reduced coordinates from `û₀`.
pub fn reduced_march<T: Scalar>(
    cfg: &BurgersConfig,
    basis: &PodBasis<T>,
    hyper: Option<&DeimOperator<T>>,
    u_hat_0: &[T],
) -> Result<Trajectory<T>, DynamicsError> {
    let op = ReducedBurgers::new(cfg, basis, hyper)?;
    op.check(u_hat_0, "u_hat_0")?;
    let mut states = DenseMatrix::zeros(op.n_modes(), cfg.n_t);
    let mut u = u_hat_0.to_vec();
    states.set_column(0, &u);
    for k in 1..cfg.n_t {
        u = op.step(&u)?;
        if u.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::Unstable { step: k });
        }
        states.set_column(k, &u);
    }
    let times = (0..cfg.n_t).map(|k| T::lit(k as f64 * cfg.dt)).collect();
    Ok(Trajectory::new(states, times))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{burgers_march, convective_term, Stencil};
    use crate::linalg::matmul;
    use crate::rom::{build_deim_operator, compute_pod, ModeSelector, SnapshotSet};

    fn setup(n: usize) -> (BurgersConfig, SnapshotSet<f64>, PodBasis<f64>) {
        let cfg = BurgersConfig::default();
        let tr = burgers_march::<f64>(&cfg).unwrap();
        let set = SnapshotSet::from_matrix(tr.states);
        let basis = compute_pod(&set, ModeSelector::NModes(n)).unwrap();
        (cfg, set, basis)
    }

    #[test]
    fn row_forms_match_single_level_forms() {
        let (cfg, set, basis) = setup(8);
        let nl = set.map_columns(|u| convective_term(&cfg, u));
        let deim = build_deim_operator(&basis, &nl, 8).unwrap();
        for hyper in [None, Some(&deim)] {
            let op = ReducedBurgers::new(&cfg, &basis, hyper).unwrap();
            let level = |k: usize| basis.project(&set.data.column(k));
            let prev = DenseMatrix::from_rows(&(0..30).map(level).collect::<Vec<_>>()).unwrap();
            let next = DenseMatrix::from_rows(&(1..31).map(level).collect::<Vec<_>>()).unwrap();
            let g = DenseMatrix::from_fn(30, 8, |r, k| ((r * 8 + k) as f64 * 0.37).sin());
            let r = op.residual_rows(&prev, &next).unwrap();
            let v = op.residual_vjp_current_rows(&prev, &g).unwrap();
            for i in 0..30 {
                let r1 = op.residual(prev.row(i), next.row(i)).unwrap();
                let v1 = op.residual_vjp_current(prev.row(i), g.row(i));
                for k in 0..8 {
                    assert!((r[(i, k)] - r1[k]).abs() <= 1e-10 * (1.0 + r1[k].abs()));
                    assert!((v[(i, k)] - v1[k]).abs() <= 1e-10 * (1.0 + v1[k].abs()));
                }
            }
        }
    }

    #[test]
    fn complete_basis_residual_vanishes() {
        for stencil in [Stencil::StandardUpwind, Stencil::PaperExact] {
            let cfg = BurgersConfig {
                stencil,
                ..BurgersConfig::default()
            };
            let tr = burgers_march::<f64>(&cfg).unwrap();
            let set = SnapshotSet::from_matrix(tr.states.clone());
            let basis = compute_pod(&set, ModeSelector::NModes(cfg.n_x)).unwrap();
            let op = ReducedBurgers::new(&cfg, &basis, None).unwrap();
            for k in 0..cfg.n_t - 1 {
                let a = basis.project(&tr.state(k));
                let b = basis.project(&tr.state(k + 1));
                let r = op.residual(&a, &b).unwrap();
                assert!(r.iter().all(|v| v.abs() <= 1e-10), "step {k}: {r:?}");
            }
        }
    }

    #[test]
    fn complete_basis_march_matches_full_order() {
        let (cfg, set, basis) = setup(20);
        let u0 = basis.project(&set.data.column(0));
        let red = reduced_march(&cfg, &basis, None, &u0).unwrap();
        let lifted = matmul(&basis.phi, &red.states).unwrap();
        assert!(lifted.sub(&set.data).unwrap().max_abs() <= 1e-8);
    }

    #[test]
    fn truncated_residual_bounded_by_tail() {
        let (cfg, set, basis) = setup(5);
        let op = ReducedBurgers::new(&cfg, &basis, None).unwrap();
        let rec = basis.reconstruct(&set.data);
        let proj_err = set.data.sub(&rec).unwrap().max_abs();
        let mut worst = 0.0f64;
        for k in 0..cfg.n_t - 1 {
            let a = basis.project(&set.data.column(k));
            let b = basis.project(&set.data.column(k + 1));
            let r = op.residual(&a, &b).unwrap();
            worst = r.iter().fold(worst, |m, v| m.max(v.abs()));
        }
        // the discarded part enters through rhs, amplified by the stencil's 1/dx and ν/dx² factors
        let c = 2.0 / cfg.dx() + 4.0 * cfg.nu / cfg.dx().powi(2);
        let tail = basis.discarded_energy.sqrt();
        assert!(worst > 0.0);
        assert!(worst <= c * tail * 4.0, "{worst} vs tail {tail}, proj {proj_err}");
    }

    #[test]
    fn zero_coordinates_zero_residual() {
        let (cfg, _, basis) = setup(10);
        let z = vec![0.0; 10];
        let r = burgers_residual_reduced(&cfg, &basis, &z, &z, None).unwrap();
        assert!(r.iter().all(|&v| v == 0.0));
        let tr = reduced_march(&cfg, &basis, None, &z).unwrap();
        assert_eq!(tr.states.max_abs(), 0.0);
    }

    #[test]
    fn hyper_reduced_march_tracks_full_order() {
        let (cfg, set, basis) = setup(10);
        let nl = set.map_columns(|u| convective_term(&cfg, u));
        let deim = build_deim_operator(&basis, &nl, 10).unwrap();
        let u0 = basis.project(&set.data.column(0));
        let red = reduced_march(&cfg, &basis, Some(&deim), &u0).unwrap();
        let lifted = matmul(&basis.phi, &red.states).unwrap();
        let dev = lifted.sub(&set.data).unwrap().max_abs();
        assert!(dev <= 1e-4, "deviation {dev:e}");
    }

    #[test]
    fn hyper_and_galerkin_residuals_agree() {
        let (cfg, set, basis) = setup(10);
        let nl = set.map_columns(|u| convective_term(&cfg, u));
        let deim = build_deim_operator(&basis, &nl, 10).unwrap();
        let plain = ReducedBurgers::new(&cfg, &basis, None).unwrap();
        let hyper = ReducedBurgers::new(&cfg, &basis, Some(&deim)).unwrap();
        for k in 0..cfg.n_t - 1 {
            let a = basis.project(&set.data.column(k));
            let b = basis.project(&set.data.column(k + 1));
            let r1 = plain.residual(&a, &b).unwrap();
            let r2 = hyper.residual(&a, &b).unwrap();
            for (x, y) in r1.iter().zip(&r2) {
                assert!((x - y).abs() <= 1e-3);
            }
        }
    }

    #[test]
    fn vjp_matches_difference_quotients() {
        let (cfg, set, basis) = setup(6);
        let nl = set.map_columns(|u| convective_term(&cfg, u));
        let deim = build_deim_operator(&basis, &nl, 6).unwrap();
        for hyper in [None, Some(&deim)] {
            let op = ReducedBurgers::new(&cfg, &basis, hyper).unwrap();
            let a = basis.project(&set.data.column(30));
            let b = basis.project(&set.data.column(31));
            let g: Vec<f64> = (0..6).map(|i| (i as f64 * 0.7).cos()).collect();
            let v = op.residual_vjp_current(&a, &g);
            for j in 0..6 {
                let h = 1e-6;
                let mut p = a.clone();
                let mut m = a.clone();
                p[j] += h;
                m[j] -= h;
                let rp = op.residual(&p, &b).unwrap();
                let rm = op.residual(&m, &b).unwrap();
                let fd: f64 = (0..6).map(|i| g[i] * (rp[i] - rm[i]) / (2.0 * h)).sum();
                assert!((fd - v[j]).abs() <= 1e-6 * (1.0 + fd.abs()), "{fd} vs {}", v[j]);
            }
        }
    }
}

use super::{compute_pod, ModeSelector, PodBasis, RomError, SnapshotSet};
use crate::linalg::{matmul, tr_matmul, DenseMatrix, LuFactor};
use crate::Scalar;

/// Hyper-reduction of a nonlinear term `F(Φû)` by discrete empirical interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct DeimOperator<T> {
    /// Sampled grid indices ρ₁..ρ_{m_h}, in selection order.
    pub indices: Vec<usize>,
    pub phi_h: DenseMatrix<T>,
    /// `ΦᵀΦʰ(PᵀΦʰ)⁻¹`, `n × m_h`.
    pub projector: DenseMatrix<T>,
    /// Sorted union of `{ρ−1, ρ, ρ+1}` clipped to the grid.
    pub sample_stencil: Vec<usize>,
}

impl<T: Scalar> DeimOperator<T> {
    pub fn m_h(&self) -> usize {
        self.indices.len()
    }

    /// `Φʰ(PᵀΦʰ)⁻¹Pᵀf`: the interpolant of `f` from its sampled entries.
    pub fn interpolate(&self, f: &[T]) -> Result<Vec<T>, RomError> {
        let pt_phi = self.phi_h.select_rows(&self.indices);
        let sampled: Vec<T> = self.indices.iter().map(|&i| f[i]).collect();
        let c = LuFactor::new(&pt_phi)?.solve(&sampled)?;
        Ok(self.phi_h.matvec(&c)?)
    }
}

/// Greedy DEIM index selection; ties go to the lowest index.
pub fn deim_select<T: Scalar>(phi_h: &DenseMatrix<T>) -> Result<Vec<usize>, RomError> {
    let (n, m) = phi_h.shape();
    if m > n {
        return Err(RomError::Rank {
            requested: m,
            available: n,
        });
    }
    let mut idx: Vec<usize> = Vec::with_capacity(m);
    for k in 0..m {
        let col = phi_h.column(k);
        let resid = if k == 0 {
            col
        } else {
            let basis = phi_h.leading_columns(k);
            let sampled = basis.select_rows(&idx);
            let rhs: Vec<T> = idx.iter().map(|&i| col[i]).collect();
            let c = LuFactor::new(&sampled)
                .and_then(|lu| lu.solve(&rhs))
                .map_err(|e| RomError::Selection {
                    step: k,
                    msg: e.to_string(),
                })?;
            let approx = basis.matvec(&c)?;
            col.iter().zip(&approx).map(|(&a, &b)| a - b).collect()
        };
        let (best, val) = argmax_abs(&resid);
        if val == T::zero() || idx.contains(&best) {
            return Err(RomError::Selection {
                step: k,
                msg: "interpolation residual vanished; basis columns dependent".into(),
            });
        }
        idx.push(best);
    }
    Ok(idx)
}

fn argmax_abs<T: Scalar>(v: &[T]) -> (usize, T) {
    let mut best = (0, T::zero());
    for (i, &x) in v.iter().enumerate() {
        // strict comparison keeps the first maximiser
        if x.abs() > best.1 {
            best = (i, x.abs());
        }
    }
    best
}

/// Φʰ from the POD of nonlinear-term snapshots, DEIM indices, and the
/// precomputed projector onto the state basis.
pub fn build_deim_operator<T: Scalar>(
    basis: &PodBasis<T>,
    nonlinear: &SnapshotSet<T>,
    m_h: usize,
) -> Result<DeimOperator<T>, RomError> {
    if nonlinear.data.rows() != basis.dim() {
        return Err(RomError::Dimension(format!(
            "nonlinear snapshots have {} rows, basis has {}",
            nonlinear.data.rows(),
            basis.dim()
        )));
    }
    let nl_basis = compute_pod(nonlinear, ModeSelector::NModes(m_h.min(nonlinear.data.rows().min(nonlinear.data.cols()))))?;
    let first = nl_basis.singulars.first().copied().unwrap_or_else(T::zero);
    let rank = nl_basis
        .singulars
        .iter()
        .filter(|&&s| s > first * T::lit(1e-10))
        .count();
    if m_h > rank {
        return Err(RomError::Rank {
            requested: m_h,
            available: rank,
        });
    }
    let phi_h = nl_basis.phi;
    let indices = deim_select(&phi_h)?;
    let pt_phi = phi_h.select_rows(&indices);
    let inv = LuFactor::new(&pt_phi)?.inverse()?;
    let projector = matmul(&tr_matmul(&basis.phi, &phi_h)?, &inv)?;
    let n = basis.dim();
    let mut stencil: Vec<usize> = indices
        .iter()
        .flat_map(|&i| [i.checked_sub(1), Some(i), (i + 1 < n).then_some(i + 1)])
        .flatten()
        .collect();
    stencil.sort_unstable();
    stencil.dedup();
    Ok(DeimOperator {
        indices,
        phi_h,
        projector,
        sample_stencil: stencil,
    })
}

use serde::{Deserialize, Serialize};

use super::{RomError, SnapshotSet};
use crate::linalg::{matmul, svd, tr_matmul, DenseMatrix};
use crate::Scalar;

/// How many POD modes to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSelector {
    NModes(usize),
    /// Smallest `k` whose cumulative energy `Σ₁ᵏσᵢ²/Σσᵢ²` reaches the fraction.
    EnergyFraction(f64),
}

/// Truncated orthonormal basis Φ (`N × n`).
#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis<T> {
    pub phi: DenseMatrix<T>,
    pub singulars: Vec<T>,
    /// `Σ_{i>n} σᵢ²`.
    pub discarded_energy: T,
}

impl<T: Scalar> PodBasis<T> {
    pub fn n_modes(&self) -> usize {
        self.phi.cols()
    }

    pub fn dim(&self) -> usize {
        self.phi.rows()
    }

    /// `Φᵀu`.
    pub fn project(&self, u: &[T]) -> Vec<T> {
        self.phi.tr_matvec(u).expect("basis and field share the grid")
    }

    /// `Φû`.
    pub fn lift(&self, u_hat: &[T]) -> Vec<T> {
        self.phi.matvec(u_hat).expect("coordinate count matches basis")
    }

    /// `ΦΦᵀU`.
    pub fn reconstruct(&self, data: &DenseMatrix<T>) -> DenseMatrix<T> {
        let coeffs = tr_matmul(&self.phi, data).expect("basis rows match snapshot rows");
        matmul(&self.phi, &coeffs).expect("inner dimensions agree")
    }
}

/// POD of the snapshot matrix: the leading left singular vectors.
pub fn compute_pod<T: Scalar>(
    snapshots: &SnapshotSet<T>,
    selector: ModeSelector,
) -> Result<PodBasis<T>, RomError> {
    let data = &snapshots.data;
    if data.max_abs() == T::zero() {
        return Err(RomError::Degenerate("snapshot matrix is identically zero".into()));
    }
    let dec = svd(data)?;
    let energies: Vec<T> = dec.singulars.iter().map(|&s| s * s).collect();
    let total: T = energies.iter().copied().sum();
    let available = dec.left.cols();
    let n = match selector {
        ModeSelector::NModes(n) => {
            if n > available {
                return Err(RomError::Rank {
                    requested: n,
                    available,
                });
            }
            n
        }
        ModeSelector::EnergyFraction(e) => {
            if !(e > 0.0 && e <= 1.0) {
                return Err(RomError::Degenerate(format!("energy fraction {e} outside (0, 1]")));
            }
            let target = T::lit(e) * total;
            let mut acc = T::zero();
            let mut k = available;
            for (i, &en) in energies.iter().enumerate() {
                acc += en;
                // tolerate rounding in the last ulp of the cumulative sum
                if acc >= target * (T::one() - T::epsilon() * T::lit(16.0)) {
                    k = i + 1;
                    break;
                }
            }
            k
        }
    };
    let discarded = energies[n..].iter().copied().sum();
    Ok(PodBasis {
        phi: dec.left.leading_columns(n),
        singulars: dec.singulars[..n].to_vec(),
        discarded_energy: discarded,
    })
}

/// Errors of the projection `ΦΦᵀU` against `U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionError<T> {
    pub max_abs: T,
    /// `‖U − ΦΦᵀU‖_F / ‖U‖_F`.
    pub frobenius_rel: T,
}

pub fn reconstruction_error<T: Scalar>(
    basis: &PodBasis<T>,
    snapshots: &SnapshotSet<T>,
) -> Result<ReconstructionError<T>, RomError> {
    let data = &snapshots.data;
    if basis.dim() != data.rows() {
        return Err(RomError::Dimension(format!(
            "basis has {} rows, snapshots have {}",
            basis.dim(),
            data.rows()
        )));
    }
    let diff = data.sub(&basis.reconstruct(data))?;
    let norm = data.frobenius_norm();
    Ok(ReconstructionError {
        max_abs: diff.max_abs(),
        frobenius_rel: if norm == T::zero() {
            T::zero()
        } else {
            diff.frobenius_norm() / norm
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::tr_matmul;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_set(seed: u64, m: usize, n: usize) -> SnapshotSet<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SnapshotSet::from_matrix(DenseMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0)))
    }

    fn orthonormality_defect(phi: &DenseMatrix<f64>) -> f64 {
        let g = tr_matmul(phi, phi).unwrap();
        g.sub(&DenseMatrix::identity(g.rows())).unwrap().max_abs()
    }

    #[test]
    fn repeated_column_is_rank_one() {
        let c = [1.0f64, 2.0, -2.0];
        let set = SnapshotSet::from_matrix(DenseMatrix::from_fn(3, 4, |i, _| c[i]));
        let b = compute_pod(&set, ModeSelector::EnergyFraction(0.999_999)).unwrap();
        assert_eq!(b.n_modes(), 1);
        let sign = b.phi[(0, 0)].signum();
        for i in 0..3 {
            assert!((b.phi[(i, 0)] - sign * c[i] / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn full_rank_reconstruction() {
        let set = random_set(3, 8, 5);
        let b = compute_pod(&set, ModeSelector::NModes(5)).unwrap();
        let e = reconstruction_error(&b, &set).unwrap();
        assert!(e.frobenius_rel <= 1e-8);
        assert!(e.max_abs <= 1e-8);
    }

    #[test]
    fn zero_snapshots_rejected() {
        let set = SnapshotSet::from_matrix(DenseMatrix::<f64>::zeros(4, 3));
        assert!(matches!(
            compute_pod(&set, ModeSelector::NModes(1)),
            Err(RomError::Degenerate(_))
        ));
    }

    #[test]
    fn empty_basis_reconstructs_nothing() {
        let set = random_set(4, 6, 6);
        let b = compute_pod(&set, ModeSelector::NModes(0)).unwrap();
        let e = reconstruction_error(&b, &set).unwrap();
        assert!((e.frobenius_rel - 1.0).abs() < 1e-15);
    }

    #[test]
    fn too_many_modes_rejected() {
        let set = random_set(5, 4, 3);
        assert!(matches!(
            compute_pod(&set, ModeSelector::NModes(4)),
            Err(RomError::Rank { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn tail_energy_identity_and_monotone_error(seed in 0u64..1000, m in 3usize..12, n in 2usize..12) {
            let set = random_set(seed, m, n);
            let total = set.data.frobenius_norm().powi(2);
            let mut last = f64::INFINITY;
            for k in 0..=m.min(n) {
                let b = compute_pod(&set, ModeSelector::NModes(k)).unwrap();
                prop_assert!(orthonormality_defect(&b.phi) <= 1e-10);
                let e = reconstruction_error(&b, &set).unwrap();
                let resid_sq = (e.frobenius_rel.powi(2)) * total;
                prop_assert!((resid_sq - b.discarded_energy).abs() <= 1e-8 * total);
                prop_assert!(e.frobenius_rel <= last + 1e-12);
                last = e.frobenius_rel;
            }
        }
    }
}

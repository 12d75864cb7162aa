use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DeimOperator, PodBasis, RomError};
use crate::linalg::{read_csv, write_csv, DenseMatrix};
use crate::Scalar;

/// Contents of `rom.toml` next to the CSV matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RomMetadata {
    pub n_modes: usize,
    pub singulars: Vec<f64>,
    pub discarded_energy: f64,
    #[serde(default)]
    pub deim_indices: Vec<usize>,
    #[serde(default)]
    pub sample_stencil: Vec<usize>,
}

/// Writes `phi.csv`, `rom.toml` and, with hyper-reduction, `phi_h.csv` and
/// `deim_projector.csv` into `dir`.
pub fn save_rom<T: Scalar>(
    dir: impl AsRef<Path>,
    basis: &PodBasis<T>,
    hyper: Option<&DeimOperator<T>>,
) -> Result<(), RomError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    write_csv(dir.join("phi.csv"), &basis.phi)?;
    let mut meta = RomMetadata {
        n_modes: basis.n_modes(),
        singulars: basis.singulars.iter().map(|s| s.as_f64()).collect(),
        discarded_energy: basis.discarded_energy.as_f64(),
        deim_indices: Vec::new(),
        sample_stencil: Vec::new(),
    };
    if let Some(h) = hyper {
        write_csv(dir.join("phi_h.csv"), &h.phi_h)?;
        write_csv(dir.join("deim_projector.csv"), &h.projector)?;
        meta.deim_indices = h.indices.clone();
        meta.sample_stencil = h.sample_stencil.clone();
    }
    let text = toml::to_string(&meta).map_err(|e| RomError::Metadata(e.to_string()))?;
    fs::write(dir.join("rom.toml"), text)?;
    Ok(())
}

pub fn load_rom<T: Scalar>(
    dir: impl AsRef<Path>,
) -> Result<(PodBasis<T>, Option<DeimOperator<T>>), RomError> {
    let dir = dir.as_ref();
    let text = fs::read_to_string(dir.join("rom.toml"))?;
    let meta: RomMetadata = toml::from_str(&text).map_err(|e| RomError::Metadata(e.to_string()))?;
    let phi: DenseMatrix<T> = read_csv(dir.join("phi.csv"))?;
    if phi.cols() != meta.n_modes {
        return Err(RomError::Metadata(format!(
            "phi.csv has {} columns, metadata says {}",
            phi.cols(),
            meta.n_modes
        )));
    }
    let basis = PodBasis {
        phi,
        singulars: meta.singulars.iter().map(|&s| T::lit(s)).collect(),
        discarded_energy: T::lit(meta.discarded_energy),
    };
    let hyper = if meta.deim_indices.is_empty() {
        None
    } else {
        Some(DeimOperator {
            indices: meta.deim_indices,
            phi_h: read_csv(dir.join("phi_h.csv"))?,
            projector: read_csv(dir.join("deim_projector.csv"))?,
            sample_stencil: meta.sample_stencil,
        })
    };
    Ok((basis, hyper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rom::{build_deim_operator, compute_pod, ModeSelector, SnapshotSet};

    #[test]
    fn round_trip() {
        let data = DenseMatrix::from_fn(6, 5, |i, j| ((i + 1) as f64 * (j + 1) as f64 * 0.37).sin());
        let set = SnapshotSet::from_matrix(data);
        let basis = compute_pod(&set, ModeSelector::NModes(3)).unwrap();
        let hyper = build_deim_operator(&basis, &set, 3).unwrap();
        let dir = std::env::temp_dir().join(format!("dispinn-rom-{}", std::process::id()));
        save_rom(&dir, &basis, Some(&hyper)).unwrap();
        let (b2, h2) = load_rom::<f64>(&dir).unwrap();
        fs::remove_dir_all(&dir).ok();
        assert_eq!(b2, basis);
        assert_eq!(h2.unwrap(), hyper);
    }
}

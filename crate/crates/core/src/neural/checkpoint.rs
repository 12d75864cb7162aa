use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Activation, LstmParams, MlpParams, NeuralError, ParamBlock, ParamSet};
use crate::linalg::{read_csv, write_csv, DenseMatrix};
use crate::Scalar;

/// Network architecture as recorded in a checkpoint manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArchSpec {
    Mlp {
        sizes: Vec<usize>,
        #[serde(default)]
        activation: Activation,
    },
    Lstm {
        features: usize,
        hidden: usize,
        outputs: usize,
        seq_len: usize,
    },
}

impl ArchSpec {
    pub fn build<T: Scalar, R: Rng + ?Sized>(&self, rng: &mut R) -> Model<T> {
        match self {
            ArchSpec::Mlp { sizes, activation } => Model::Mlp(MlpParams::init(sizes, *activation, rng)),
            ArchSpec::Lstm {
                features,
                hidden,
                outputs,
                seq_len,
            } => Model::Lstm(LstmParams::init(*features, *hidden, *outputs, *seq_len, rng)),
        }
    }

    fn zeros<T: Scalar>(&self) -> Model<T> {
        match self {
            ArchSpec::Mlp { sizes, activation } => Model::Mlp(MlpParams::zeros(sizes, *activation)),
            ArchSpec::Lstm {
                features,
                hidden,
                outputs,
                seq_len,
            } => Model::Lstm(LstmParams::zeros(*features, *hidden, *outputs, *seq_len)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model<T> {
    Mlp(MlpParams<T>),
    Lstm(LstmParams<T>),
}

impl<T: Scalar> Model<T> {
    pub fn arch(&self) -> ArchSpec {
        match self {
            Model::Mlp(m) => ArchSpec::Mlp {
                sizes: m.sizes(),
                activation: m.activation,
            },
            Model::Lstm(l) => ArchSpec::Lstm {
                features: l.features(),
                hidden: l.hidden(),
                outputs: l.w_out.cols(),
                seq_len: l.seq_len,
            },
        }
    }
}

impl<T: Scalar> ParamSet<T> for Model<T> {
    fn blocks(&self) -> Vec<ParamBlock<'_, T>> {
        match self {
            Model::Mlp(m) => m.blocks(),
            Model::Lstm(l) => l.blocks(),
        }
    }

    fn blocks_mut(&mut self) -> Vec<&mut [T]> {
        match self {
            Model::Mlp(m) => m.blocks_mut(),
            Model::Lstm(l) => l.blocks_mut(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    arch: ArchSpec,
    epoch: usize,
    blocks: Vec<BlockEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BlockEntry {
    name: String,
    file: String,
    rows: usize,
    cols: usize,
}

fn file_name(block: &str) -> String {
    format!("{}.csv", block.replace('.', "_"))
}

/// Writes one CSV per parameter block plus `manifest.toml` into `dir`.
pub fn save_checkpoint<T: Scalar>(dir: impl AsRef<Path>, model: &Model<T>, epoch: usize) -> Result<(), NeuralError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for b in model.blocks() {
        let file = file_name(&b.name);
        let m = DenseMatrix::from_vec(b.shape.0, b.shape.1, b.data.to_vec())?;
        write_csv(dir.join(&file), &m)?;
        entries.push(BlockEntry {
            name: b.name,
            file,
            rows: b.shape.0,
            cols: b.shape.1,
        });
    }
    let manifest = Manifest {
        arch: model.arch(),
        epoch,
        blocks: entries,
    };
    let text = toml::to_string(&manifest).map_err(|e| NeuralError::Checkpoint(e.to_string()))?;
    fs::write(dir.join("manifest.toml"), text)?;
    Ok(())
}

/// Restores a model and the epoch it was saved at.
pub fn load_checkpoint<T: Scalar>(dir: impl AsRef<Path>) -> Result<(Model<T>, usize), NeuralError> {
    let dir = dir.as_ref();
    let text = fs::read_to_string(dir.join("manifest.toml"))?;
    let manifest: Manifest = toml::from_str(&text).map_err(|e| NeuralError::Checkpoint(e.to_string()))?;
    let mut model = manifest.arch.zeros::<T>();
    let expected: Vec<(String, (usize, usize))> = model.blocks().into_iter().map(|b| (b.name, b.shape)).collect();
    if expected.len() != manifest.blocks.len() {
        return Err(NeuralError::Checkpoint(format!(
            "architecture has {} blocks, manifest lists {}",
            expected.len(),
            manifest.blocks.len()
        )));
    }
    let mut flat = Vec::with_capacity(model.param_count());
    for ((name, shape), entry) in expected.iter().zip(&manifest.blocks) {
        if *name != entry.name || *shape != (entry.rows, entry.cols) {
            return Err(NeuralError::Checkpoint(format!(
                "block `{}` {:?} does not match expected `{name}` {shape:?}",
                entry.name,
                (entry.rows, entry.cols)
            )));
        }
        let m: DenseMatrix<T> = read_csv(dir.join(&entry.file))?;
        if m.shape() != *shape {
            return Err(NeuralError::Checkpoint(format!(
                "{} holds {:?}, expected {shape:?}",
                entry.file,
                m.shape()
            )));
        }
        flat.extend_from_slice(m.as_slice());
    }
    model.set_flat(&flat);
    Ok((model, manifest.epoch))
}

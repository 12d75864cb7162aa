use super::{shape_err, NeuralError};
use crate::linalg::DenseMatrix;
use crate::Scalar;

/// Sliding windows over a series.
///
/// Window `w` holds input levels `w..w+s` and is paired with the output at
/// level `w + s`, so a series of `N_t` levels yields `N_t − s` windows.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceBatch<T> {
    /// One `windows × features` matrix per position inside the window.
    steps: Vec<DenseMatrix<T>>,
    /// `windows × out_dim`; zero columns when built without targets.
    pub targets: DenseMatrix<T>,
}

impl<T: Scalar> SequenceBatch<T> {
    pub fn windows(&self) -> usize {
        self.targets.rows()
    }

    pub fn seq_len(&self) -> usize {
        self.steps.len()
    }

    pub fn features(&self) -> usize {
        self.steps.first().map_or(0, |m| m.cols())
    }

    /// Inputs at window position `t` for every window.
    pub fn step(&self, t: usize) -> &DenseMatrix<T> {
        &self.steps[t]
    }

    /// Level whose output window `w` predicts.
    pub fn target_level(&self, w: usize) -> usize {
        w + self.seq_len()
    }

    /// `windows × s × features` in window-major order.
    pub fn to_tensor(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.windows() * self.seq_len() * self.features());
        for w in 0..self.windows() {
            for s in &self.steps {
                out.extend_from_slice(s.row(w));
            }
        }
        out
    }

    /// Windows over `inputs` without targets.
    pub fn from_inputs(inputs: &DenseMatrix<T>, s: usize) -> Result<Self, NeuralError> {
        make_sequences(inputs, &DenseMatrix::zeros(inputs.rows(), 0), s)
    }
}

pub fn make_sequences<T: Scalar>(
    inputs: &DenseMatrix<T>,
    outputs: &DenseMatrix<T>,
    s: usize,
) -> Result<SequenceBatch<T>, NeuralError> {
    let n = inputs.rows();
    if outputs.rows() != n {
        return Err(shape_err("make_sequences", (n, outputs.cols()), outputs.shape()));
    }
    if s == 0 || n <= s {
        return Err(NeuralError::Input(format!(
            "series of {n} levels is too short for sequence length {s}"
        )));
    }
    let windows = n - s;
    let steps = (0..s)
        .map(|t| DenseMatrix::from_fn(windows, inputs.cols(), |w, f| inputs[(w + t, f)]))
        .collect();
    let targets = DenseMatrix::from_fn(windows, outputs.cols(), |w, j| outputs[(w + s, j)]);
    Ok(SequenceBatch { steps, targets })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize, f: usize) -> DenseMatrix<f64> {
        DenseMatrix::from_fn(n, f, |i, j| (i * 10 + j) as f64)
    }

    #[test]
    fn window_counts() {
        assert_eq!(make_sequences(&ramp(1000, 2), &ramp(1000, 2), 10).unwrap().windows(), 990);
        assert_eq!(make_sequences(&ramp(100, 1), &ramp(100, 20), 10).unwrap().windows(), 90);
        let b = make_sequences(&ramp(7, 1), &ramp(7, 1), 1).unwrap();
        assert_eq!((b.windows(), b.seq_len()), (6, 1));
    }

    #[test]
    fn layout_and_alignment() {
        let b = make_sequences(&ramp(6, 2), &ramp(6, 1), 3).unwrap();
        assert_eq!(b.step(0).row(1), &[10.0, 11.0]);
        assert_eq!(b.step(2).row(1), &[30.0, 31.0]);
        assert_eq!(b.targets[(1, 0)], 40.0);
        assert_eq!(b.target_level(1), 4);
        assert_eq!(&b.to_tensor()[..6], &[0.0, 1.0, 10.0, 11.0, 20.0, 21.0]);
    }

    #[test]
    fn too_short_rejected() {
        assert!(matches!(make_sequences(&ramp(10, 1), &ramp(10, 1), 10), Err(NeuralError::Input(_))));
    }
}

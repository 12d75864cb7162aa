use serde::{Deserialize, Serialize};

use super::NeuralError;
use crate::linalg::DenseMatrix;
use crate::Scalar;

/// Column-wise affine map of `[min, max]` onto `[−1, 1]`.
///
/// Constant columns map to zero and invert back to the constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit<T: Scalar>(data: &DenseMatrix<T>) -> Result<Self, NeuralError> {
        if data.rows() == 0 {
            return Err(NeuralError::Input("cannot fit a scaler on zero rows".into()));
        }
        if !data.is_finite() {
            return Err(NeuralError::Input("scaler data contains non-finite values".into()));
        }
        let mut min = vec![f64::INFINITY; data.cols()];
        let mut max = vec![f64::NEG_INFINITY; data.cols()];
        for r in 0..data.rows() {
            for (j, v) in data.row(r).iter().enumerate() {
                let v = v.as_f64();
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(Self { min, max })
    }

    /// Fixed range for every one of `cols` columns.
    pub fn uniform(cols: usize, min: f64, max: f64) -> Self {
        Self {
            min: vec![min; cols],
            max: vec![max; cols],
        }
    }

    fn half_range(&self, j: usize) -> f64 {
        let h = 0.5 * (self.max[j] - self.min[j]);
        if h > 0.0 {
            h
        } else {
            1.0
        }
    }

    fn mid(&self, j: usize) -> f64 {
        0.5 * (self.max[j] + self.min[j])
    }

    fn check<T: Scalar>(&self, data: &DenseMatrix<T>) -> Result<(), NeuralError> {
        if data.cols() != self.min.len() {
            return Err(super::shape_err("scaler", self.min.len(), data.cols()));
        }
        Ok(())
    }

    pub fn transform<T: Scalar>(&self, data: &DenseMatrix<T>) -> Result<DenseMatrix<T>, NeuralError> {
        self.check(data)?;
        Ok(DenseMatrix::from_fn(data.rows(), data.cols(), |i, j| {
            (data[(i, j)] - T::lit(self.mid(j))) / T::lit(self.half_range(j))
        }))
    }

    pub fn inverse<T: Scalar>(&self, data: &DenseMatrix<T>) -> Result<DenseMatrix<T>, NeuralError> {
        self.check(data)?;
        Ok(DenseMatrix::from_fn(data.rows(), data.cols(), |i, j| {
            data[(i, j)] * T::lit(self.half_range(j)) + T::lit(self.mid(j))
        }))
    }
}

use super::PinnError;
use crate::linalg::DenseMatrix;
use crate::Scalar;

/// Maps network outputs onto the state horizon `Y` (levels × width).
///
/// Network row `r` predicts level `out_levels[r]`, network column `j`
/// predicts state column `out_cols[j]`, both multiplied by `scale`. Entries
/// marked fixed (hard initial or boundary values, sequence context) keep
/// their stored value and receive no gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Horizon<T> {
    base: DenseMatrix<T>,
    fixed: Vec<bool>,
    out_levels: Vec<usize>,
    out_cols: Vec<usize>,
    scale: T,
}

impl<T: Scalar> Horizon<T> {
    pub fn new(
        levels: usize,
        width: usize,
        out_levels: Vec<usize>,
        out_cols: Vec<usize>,
        scale: T,
    ) -> Result<Self, PinnError> {
        if out_levels.iter().any(|&l| l >= levels) || out_cols.iter().any(|&c| c >= width) {
            return Err(PinnError::Config("network output mapped outside the horizon".into()));
        }
        if !(scale > T::zero()) {
            return Err(PinnError::Config(format!("output scale must be positive, got {scale}")));
        }
        Ok(Self {
            base: DenseMatrix::zeros(levels, width),
            fixed: vec![false; levels * width],
            out_levels,
            out_cols,
            scale,
        })
    }

    pub fn levels(&self) -> usize {
        self.base.rows()
    }

    pub fn width(&self) -> usize {
        self.base.cols()
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn out_levels(&self) -> &[usize] {
        &self.out_levels
    }

    /// `(rows, cols)` the network must produce.
    pub fn output_shape(&self) -> (usize, usize) {
        (self.out_levels.len(), self.out_cols.len())
    }

    pub fn is_fixed(&self, level: usize, col: usize) -> bool {
        self.fixed[level * self.width() + col]
    }

    pub fn fix(&mut self, level: usize, col: usize, value: T) {
        let w = self.width();
        self.base[(level, col)] = value;
        self.fixed[level * w + col] = true;
    }

    pub fn fix_level(&mut self, level: usize, values: &[T]) {
        for (c, &v) in values.iter().enumerate() {
            self.fix(level, c, v);
        }
    }

    /// Pins column `col` to `values[level]` at every level.
    pub fn fix_column(&mut self, col: usize, values: &[T]) {
        for (l, &v) in values.iter().enumerate() {
            self.fix(l, col, v);
        }
    }

    /// Every entry is either fixed or predicted.
    pub fn validate(&self) -> Result<(), PinnError> {
        let mut covered = self.fixed.clone();
        let w = self.width();
        for &l in &self.out_levels {
            for &c in &self.out_cols {
                covered[l * w + c] = true;
            }
        }
        if let Some(k) = covered.iter().position(|&c| !c) {
            return Err(PinnError::Config(format!(
                "horizon entry (level {}, column {}) is neither fixed nor predicted",
                k / w,
                k % w
            )));
        }
        Ok(())
    }

    pub fn assemble(&self, out: &DenseMatrix<T>) -> Result<DenseMatrix<T>, PinnError> {
        if out.shape() != self.output_shape() {
            return Err(PinnError::Config(format!(
                "network produced {:?}, horizon expects {:?}",
                out.shape(),
                self.output_shape()
            )));
        }
        let mut y = self.base.clone();
        for (r, &l) in self.out_levels.iter().enumerate() {
            for (j, &c) in self.out_cols.iter().enumerate() {
                if !self.is_fixed(l, c) {
                    y[(l, c)] = self.scale * out[(r, j)];
                }
            }
        }
        Ok(y)
    }

    /// Gradient with respect to the network outputs given `∂L/∂Y`.
    pub fn pullback(&self, g_y: &DenseMatrix<T>) -> DenseMatrix<T> {
        let (rows, cols) = self.output_shape();
        let mut g = DenseMatrix::zeros(rows, cols);
        for (r, &l) in self.out_levels.iter().enumerate() {
            for (j, &c) in self.out_cols.iter().enumerate() {
                if !self.is_fixed(l, c) {
                    g[(r, j)] = self.scale * g_y[(l, c)];
                }
            }
        }
        g
    }
}

/// Reference values at a subset of levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Supervision<T> {
    pub levels: Vec<usize>,
    /// Full reference horizon; only `levels` are read.
    pub reference: DenseMatrix<T>,
}

impl<T: Scalar> Supervision<T> {
    /// Number of supervised entries the network can still change.
    pub fn free_count(&self, horizon: &Horizon<T>) -> usize {
        self.levels
            .iter()
            .map(|&l| (0..horizon.width()).filter(|&c| !horizon.is_fixed(l, c)).count())
            .sum()
    }

    /// Mean squared error over free supervised entries and its gradient
    /// with respect to `Y`, scaled by `weight`.
    pub fn loss_and_grad(
        &self,
        y: &DenseMatrix<T>,
        horizon: &Horizon<T>,
        weight: T,
    ) -> (T, DenseMatrix<T>) {
        let mut g = DenseMatrix::zeros(y.rows(), y.cols());
        let n = self.free_count(horizon);
        if n == 0 {
            return (T::zero(), g);
        }
        let inv = T::one() / T::from_usize_lossy(n);
        let mut acc = T::zero();
        for &l in &self.levels {
            for c in 0..y.cols() {
                if horizon.is_fixed(l, c) {
                    continue;
                }
                let e = y[(l, c)] - self.reference[(l, c)];
                acc += e * e;
                g[(l, c)] = weight * T::lit(2.0) * e * inv;
            }
        }
        (acc * inv, g)
    }
}

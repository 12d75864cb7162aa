use super::{NeuralError, ParamSet};
use crate::Scalar;

/// Adam with bias correction. Moments are kept per parameter block.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(lr: T) -> Self {
        Self {
            lr,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
            m: Vec::new(),
            v: Vec::new(),
            t: 0,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    /// One update `p ← p − α m̂/(√v̂ + ε)`.
    ///
    /// Gradients are checked first so a non-finite entry leaves both the
    /// parameters and the moments untouched.
    pub fn step<P: ParamSet<T>>(&mut self, params: &mut P, grads: &P) -> Result<(), NeuralError> {
        let gblocks = grads.blocks();
        if let Some(bad) = gblocks.iter().find(|b| b.data.iter().any(|g| !g.is_finite())) {
            return Err(NeuralError::NonFiniteGradient {
                block: bad.name.clone(),
            });
        }
        if self.m.is_empty() {
            self.m = gblocks.iter().map(|b| vec![T::zero(); b.data.len()]).collect();
            self.v = self.m.clone();
        }
        self.t += 1;
        let t = self.t as i32;
        let c1 = T::one() - self.beta1.powi(t);
        let c2 = T::one() - self.beta2.powi(t);
        let (b1, b2) = (self.beta1, self.beta2);
        for (((p, g), m), v) in params
            .blocks_mut()
            .into_iter()
            .zip(gblocks.iter())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            for i in 0..p.len() {
                let gi = g.data[i];
                m[i] = b1 * m[i] + (T::one() - b1) * gi;
                v[i] = b2 * v[i] + (T::one() - b2) * gi * gi;
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p[i] -= self.lr * mh / (vh.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

use rand::Rng;

use super::{glorot_uniform, shape_err, Activation, Network, NeuralError, ParamBlock, ParamSet};
use crate::linalg::{matmul_acc, matmul_tr, tr_matmul, DenseMatrix};
use crate::Scalar;

/// Affine layer `y = x W + b` with `W` stored `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<T> {
    pub w: DenseMatrix<T>,
    pub b: Vec<T>,
}

impl<T: Scalar> DenseLayer<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            w: DenseMatrix::zeros(inputs, outputs),
            b: vec![T::zero(); outputs],
        }
    }

    pub fn inputs(&self) -> usize {
        self.w.rows()
    }

    pub fn outputs(&self) -> usize {
        self.w.cols()
    }

    fn apply(&self, x: &DenseMatrix<T>) -> DenseMatrix<T> {
        let mut y = DenseMatrix::from_fn(x.rows(), self.outputs(), |_, j| self.b[j]);
        matmul_acc(x, &self.w, &mut y);
        y
    }
}

/// Fully connected network; every hidden layer uses `activation`, the
/// output layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams<T> {
    pub layers: Vec<DenseLayer<T>>,
    pub activation: Activation,
}

/// Post-activation values of every layer, input first.
#[derive(Debug, Clone)]
pub struct MlpCache<T> {
    activations: Vec<DenseMatrix<T>>,
}

impl<T: Scalar> MlpParams<T> {
    /// `sizes = [in, h₁, …, out]`.
    pub fn zeros(sizes: &[usize], activation: Activation) -> Self {
        Self {
            layers: sizes.windows(2).map(|w| DenseLayer::zeros(w[0], w[1])).collect(),
            activation,
        }
    }

    /// Glorot-uniform weights and zero biases.
    pub fn init<R: Rng + ?Sized>(sizes: &[usize], activation: Activation, rng: &mut R) -> Self {
        Self {
            layers: sizes
                .windows(2)
                .map(|w| DenseLayer {
                    w: glorot_uniform(w[0], w[1], w[0], w[1], rng),
                    b: vec![T::zero(); w[1]],
                })
                .collect(),
            activation,
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.layers.iter().map(|l| l.inputs()).collect();
        if let Some(last) = self.layers.last() {
            s.push(last.outputs());
        }
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs())
    }

    fn act(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            Activation::Identity
        } else {
            self.activation
        }
    }
}

impl<T: Scalar> ParamSet<T> for MlpParams<T> {
    fn blocks(&self) -> Vec<ParamBlock<'_, T>> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, l)| {
                [
                    ParamBlock {
                        name: format!("layer{i}.w"),
                        shape: l.w.shape(),
                        data: l.w.as_slice(),
                    },
                    ParamBlock {
                        name: format!("layer{i}.b"),
                        shape: (1, l.b.len()),
                        data: &l.b[..],
                    },
                ]
            })
            .collect()
    }

    fn blocks_mut(&mut self) -> Vec<&mut [T]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.w.as_mut_slice(), &mut l.b[..]])
            .collect()
    }
}

impl<T: Scalar> Network<T> for MlpParams<T> {
    type Input = DenseMatrix<T>;
    type Cache = MlpCache<T>;

    fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs())
    }

    fn forward_cached(&self, input: &DenseMatrix<T>) -> Result<(DenseMatrix<T>, MlpCache<T>), NeuralError> {
        if input.cols() != self.input_dim() {
            return Err(shape_err("mlp_forward", (input.rows(), self.input_dim()), input.shape()));
        }
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.clone());
        for (i, layer) in self.layers.iter().enumerate() {
            let act = self.act(i);
            let mut z = layer.apply(acts.last().expect("non-empty"));
            if act != Activation::Identity {
                z.as_mut_slice().iter_mut().for_each(|v| *v = act.apply(*v));
            }
            acts.push(z);
        }
        let out = acts.pop().expect("at least the input");
        let cache_out = out.clone();
        acts.push(cache_out);
        Ok((out, MlpCache { activations: acts }))
    }

    fn backward(&self, cache: &MlpCache<T>, upstream: &DenseMatrix<T>) -> Result<Self, NeuralError> {
        let out = cache.activations.last().expect("cache holds the output");
        if upstream.shape() != out.shape() {
            return Err(shape_err("mlp_backward", out.shape(), upstream.shape()));
        }
        let mut grads = MlpParams::zeros(&self.sizes(), self.activation);
        let mut delta = upstream.clone();
        for i in (0..self.layers.len()).rev() {
            let a_in = &cache.activations[i];
            grads.layers[i].w = tr_matmul(a_in, &delta)?;
            let gb = &mut grads.layers[i].b;
            for r in 0..delta.rows() {
                for (g, &d) in gb.iter_mut().zip(delta.row(r)) {
                    *g += d;
                }
            }
            if i > 0 {
                let mut prev = matmul_tr(&delta, &self.layers[i].w)?;
                let act = self.act(i - 1);
                for (p, &a) in prev.as_mut_slice().iter_mut().zip(a_in.as_slice()) {
                    *p *= act.derivative_from_output(a);
                }
                delta = prev;
            }
        }
        Ok(grads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::gradient_check;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_outputs_zero() {
        let net = MlpParams::<f64>::zeros(&[3, 5, 4, 2], Activation::Tanh);
        let x = DenseMatrix::from_fn(4, 3, |i, j| (i + j) as f64);
        assert_eq!(net.forward(&x).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn identity_layer() {
        let mut net = MlpParams::<f64>::zeros(&[3, 3], Activation::Tanh);
        net.layers[0].w = DenseMatrix::identity(3);
        let x = DenseMatrix::from_fn(2, 3, |i, j| i as f64 - j as f64 * 0.5);
        assert_eq!(net.forward(&x).unwrap(), x);
    }

    #[test]
    fn two_layer_hand_evaluation() {
        // 1 → 2 → 1: y = v₁ tanh(w₁x + b₁) + v₂ tanh(w₂x + b₂) + c
        let mut net = MlpParams::<f64>::zeros(&[1, 2, 1], Activation::Tanh);
        net.layers[0].w = DenseMatrix::from_rows(&[[0.5, -1.0]]).unwrap();
        net.layers[0].b = vec![0.1, 0.2];
        net.layers[1].w = DenseMatrix::from_rows(&[[2.0], [3.0]]).unwrap();
        net.layers[1].b = vec![-0.5];
        let x = 0.8f64;
        let expect = 2.0 * (0.5 * x + 0.1).tanh() + 3.0 * (-x + 0.2).tanh() - 0.5;
        let y = net.forward(&DenseMatrix::from_rows(&[[x]]).unwrap()).unwrap();
        assert!((y[(0, 0)] - expect).abs() < 1e-15);
    }

    #[test]
    fn zero_upstream_zero_gradient() {
        let net = MlpParams::<f64>::init(&[2, 4, 1], Activation::Tanh, &mut ChaCha8Rng::seed_from_u64(0));
        let x = DenseMatrix::from_fn(3, 2, |i, j| (i * 2 + j) as f64 * 0.1);
        let (_, cache) = net.forward_cached(&x).unwrap();
        let g = net.backward(&cache, &DenseMatrix::zeros(3, 1)).unwrap();
        assert!(g.flatten().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_least_squares_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = MlpParams::<f64>::init(&[3, 2], Activation::Tanh, &mut rng);
        let x = DenseMatrix::from_fn(5, 3, |_, _| rng.gen_range(-1.0..1.0));
        let y = DenseMatrix::from_fn(5, 2, |_, _| rng.gen_range(-1.0..1.0));
        let (pred, cache) = net.forward_cached(&x).unwrap();
        // L = Σ(XW − Y)²/batch ⇒ ∂L/∂W = 2Xᵀ(XW − Y)/batch
        let resid = pred.sub(&y).unwrap();
        let upstream = resid.scaled(2.0 / 5.0);
        let g = net.backward(&cache, &upstream).unwrap();
        let expect = tr_matmul(&x, &resid).unwrap().scaled(2.0 / 5.0);
        assert!(g.layers[0].w.sub(&expect).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn finite_difference_agreement() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let net = MlpParams::<f64>::init(&[2, 6, 5, 3], Activation::Tanh, &mut rng);
        let x = DenseMatrix::from_fn(4, 2, |_, _| rng.gen_range(-1.0..1.0));
        let up = DenseMatrix::from_fn(4, 3, |_, _| rng.gen_range(-1.0..1.0));
        let report = gradient_check(&net, &x, &up).unwrap();
        assert!(report.passes(1e-5, 1e-7), "{report:?}");
    }

    #[test]
    fn input_width_checked() {
        let net = MlpParams::<f64>::zeros(&[3, 2], Activation::Tanh);
        assert!(net.forward(&DenseMatrix::zeros(1, 2)).is_err());
    }
}

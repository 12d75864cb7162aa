use rand::Rng;

use super::{glorot_uniform, shape_err, Network, NeuralError, ParamBlock, ParamSet, SequenceBatch};
use crate::linalg::{matmul_acc, matmul_tr, tr_matmul, DenseMatrix};
use crate::Scalar;

/// Single-layer LSTM with a dense readout of the last hidden state.
///
/// Gate pre-activations are `z = x W_x + h W_h + b`, with the four gates laid
/// out column-wise as `[input | forget | cell | output]`, each `hidden` wide.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams<T> {
    pub w_x: DenseMatrix<T>,
    pub w_h: DenseMatrix<T>,
    pub b: Vec<T>,
    pub w_out: DenseMatrix<T>,
    pub b_out: Vec<T>,
    pub seq_len: usize,
}

#[derive(Debug, Clone)]
struct StepCache<T> {
    x: DenseMatrix<T>,
    h_prev: DenseMatrix<T>,
    c_prev: DenseMatrix<T>,
    /// Post-activation gates `[i f g o]`.
    gates: DenseMatrix<T>,
    tanh_c: DenseMatrix<T>,
}

#[derive(Debug, Clone)]
pub struct LstmCache<T> {
    steps: Vec<StepCache<T>>,
    h_last: DenseMatrix<T>,
}

fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

impl<T: Scalar> LstmParams<T> {
    pub fn zeros(features: usize, hidden: usize, outputs: usize, seq_len: usize) -> Self {
        Self {
            w_x: DenseMatrix::zeros(features, 4 * hidden),
            w_h: DenseMatrix::zeros(hidden, 4 * hidden),
            b: vec![T::zero(); 4 * hidden],
            w_out: DenseMatrix::zeros(hidden, outputs),
            b_out: vec![T::zero(); outputs],
            seq_len,
        }
    }

    /// Glorot-uniform weights (fan counted per gate) and zero biases.
    pub fn init<R: Rng + ?Sized>(
        features: usize,
        hidden: usize,
        outputs: usize,
        seq_len: usize,
        rng: &mut R,
    ) -> Self {
        Self {
            w_x: glorot_uniform(features, 4 * hidden, features, hidden, rng),
            w_h: glorot_uniform(hidden, 4 * hidden, hidden, hidden, rng),
            b: vec![T::zero(); 4 * hidden],
            w_out: glorot_uniform(hidden, outputs, hidden, outputs, rng),
            b_out: vec![T::zero(); outputs],
            seq_len,
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_h.rows()
    }

    pub fn features(&self) -> usize {
        self.w_x.rows()
    }
}

impl<T: Scalar> ParamSet<T> for LstmParams<T> {
    fn blocks(&self) -> Vec<ParamBlock<'_, T>> {
        vec![
            ParamBlock {
                name: "lstm.w_x".into(),
                shape: self.w_x.shape(),
                data: self.w_x.as_slice(),
            },
            ParamBlock {
                name: "lstm.w_h".into(),
                shape: self.w_h.shape(),
                data: self.w_h.as_slice(),
            },
            ParamBlock {
                name: "lstm.b".into(),
                shape: (1, self.b.len()),
                data: &self.b[..],
            },
            ParamBlock {
                name: "readout.w".into(),
                shape: self.w_out.shape(),
                data: self.w_out.as_slice(),
            },
            ParamBlock {
                name: "readout.b".into(),
                shape: (1, self.b_out.len()),
                data: &self.b_out[..],
            },
        ]
    }

    fn blocks_mut(&mut self) -> Vec<&mut [T]> {
        vec![
            self.w_x.as_mut_slice(),
            self.w_h.as_mut_slice(),
            &mut self.b[..],
            self.w_out.as_mut_slice(),
            &mut self.b_out[..],
        ]
    }
}

impl<T: Scalar> Network<T> for LstmParams<T> {
    type Input = SequenceBatch<T>;
    type Cache = LstmCache<T>;

    fn output_dim(&self) -> usize {
        self.w_out.cols()
    }

    fn forward_cached(&self, batch: &SequenceBatch<T>) -> Result<(DenseMatrix<T>, LstmCache<T>), NeuralError> {
        if batch.seq_len() != self.seq_len || batch.features() != self.features() {
            return Err(shape_err(
                "lstm_forward",
                (self.seq_len, self.features()),
                (batch.seq_len(), batch.features()),
            ));
        }
        let nw = batch.windows();
        let hd = self.hidden();
        let mut h = DenseMatrix::zeros(nw, hd);
        let mut c = DenseMatrix::zeros(nw, hd);
        let mut steps = Vec::with_capacity(self.seq_len);
        for t in 0..self.seq_len {
            let x = batch.step(t);
            let mut z = DenseMatrix::from_fn(nw, 4 * hd, |_, j| self.b[j]);
            matmul_acc(x, &self.w_x, &mut z);
            matmul_acc(&h, &self.w_h, &mut z);
            let mut c_new = DenseMatrix::zeros(nw, hd);
            let mut tanh_c = DenseMatrix::zeros(nw, hd);
            let mut h_new = DenseMatrix::zeros(nw, hd);
            for w in 0..nw {
                let zr = z.row_mut(w);
                for k in 0..hd {
                    zr[k] = sigmoid(zr[k]);
                    zr[hd + k] = sigmoid(zr[hd + k]);
                    zr[2 * hd + k] = zr[2 * hd + k].tanh();
                    zr[3 * hd + k] = sigmoid(zr[3 * hd + k]);
                }
                for k in 0..hd {
                    let zr = z.row(w);
                    let cv = zr[hd + k] * c[(w, k)] + zr[k] * zr[2 * hd + k];
                    let tc = cv.tanh();
                    c_new[(w, k)] = cv;
                    tanh_c[(w, k)] = tc;
                    h_new[(w, k)] = zr[3 * hd + k] * tc;
                }
            }
            steps.push(StepCache {
                x: x.clone(),
                h_prev: h,
                c_prev: c,
                gates: z,
                tanh_c,
            });
            h = h_new;
            c = c_new;
        }
        let mut y = DenseMatrix::from_fn(nw, self.output_dim(), |_, j| self.b_out[j]);
        matmul_acc(&h, &self.w_out, &mut y);
        Ok((y, LstmCache { steps, h_last: h }))
    }

    fn backward(&self, cache: &LstmCache<T>, upstream: &DenseMatrix<T>) -> Result<Self, NeuralError> {
        let nw = cache.h_last.rows();
        if upstream.shape() != (nw, self.output_dim()) {
            return Err(shape_err("lstm_backward", (nw, self.output_dim()), upstream.shape()));
        }
        let hd = self.hidden();
        let mut g = LstmParams::zeros(self.features(), hd, self.output_dim(), self.seq_len);
        g.w_out = tr_matmul(&cache.h_last, upstream)?;
        for r in 0..nw {
            for (gb, &u) in g.b_out.iter_mut().zip(upstream.row(r)) {
                *gb += u;
            }
        }
        let mut dh = matmul_tr(upstream, &self.w_out)?;
        let mut dc = DenseMatrix::<T>::zeros(nw, hd);
        let one = T::one();
        for st in cache.steps.iter().rev() {
            let mut dz = DenseMatrix::zeros(nw, 4 * hd);
            for w in 0..nw {
                let gr = st.gates.row(w);
                let dzr = dz.row_mut(w);
                for k in 0..hd {
                    let (i, f, gg, o) = (gr[k], gr[hd + k], gr[2 * hd + k], gr[3 * hd + k]);
                    let tc = st.tanh_c[(w, k)];
                    let dhv = dh[(w, k)];
                    let dcv = dc[(w, k)] + dhv * o * (one - tc * tc);
                    dzr[k] = dcv * gg * i * (one - i);
                    dzr[hd + k] = dcv * st.c_prev[(w, k)] * f * (one - f);
                    dzr[2 * hd + k] = dcv * i * (one - gg * gg);
                    dzr[3 * hd + k] = dhv * tc * o * (one - o);
                    dc[(w, k)] = dcv * f;
                }
            }
            let gx = tr_matmul(&st.x, &dz)?;
            let gh = tr_matmul(&st.h_prev, &dz)?;
            for (a, &b) in g.w_x.as_mut_slice().iter_mut().zip(gx.as_slice()) {
                *a += b;
            }
            for (a, &b) in g.w_h.as_mut_slice().iter_mut().zip(gh.as_slice()) {
                *a += b;
            }
            for r in 0..nw {
                for (gb, &d) in g.b.iter_mut().zip(dz.row(r)) {
                    *gb += d;
                }
            }
            dh = matmul_tr(&dz, &self.w_h)?;
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{gradient_check, make_sequences};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn batch(n: usize, f: usize, s: usize, seed: u64) -> SequenceBatch<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DenseMatrix::from_fn(n, f, |_, _| rng.gen_range(-1.0..1.0));
        make_sequences(&x, &DenseMatrix::zeros(n, 0), s).unwrap()
    }

    #[test]
    fn zero_params_emit_readout_bias() {
        let mut net = LstmParams::<f64>::zeros(2, 10, 2, 10);
        net.b_out = vec![0.25, -1.5];
        let y = net.forward(&batch(30, 2, 10, 0)).unwrap();
        assert_eq!(y.rows(), 20);
        for r in 0..20 {
            assert_eq!(y.row(r), &[0.25, -1.5]);
        }
    }

    #[test]
    fn reference_window_count() {
        let net = LstmParams::<f64>::init(2, 10, 2, 10, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(net.forward(&batch(1000, 2, 10, 1)).unwrap().rows(), 990);
    }

    #[test]
    fn scalar_recurrence_by_hand() {
        let mut net = LstmParams::<f64>::zeros(1, 1, 1, 2);
        net.w_x = DenseMatrix::from_rows(&[[0.5, -0.3, 0.8, 0.2]]).unwrap();
        net.w_h = DenseMatrix::from_rows(&[[0.1, 0.4, -0.6, 0.7]]).unwrap();
        net.b = vec![0.05, 0.1, -0.05, 0.0];
        net.w_out = DenseMatrix::from_rows(&[[1.5]]).unwrap();
        net.b_out = vec![0.1];
        let xs = [0.9, -0.4];
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let (mut h, mut c) = (0.0f64, 0.0f64);
        for &x in &xs {
            let i = sig(0.5 * x + 0.1 * h + 0.05);
            let f = sig(-0.3 * x + 0.4 * h + 0.1);
            let g = (0.8 * x - 0.6 * h - 0.05).tanh();
            let o = sig(0.2 * x + 0.7 * h);
            c = f * c + i * g;
            h = o * c.tanh();
        }
        let expect = 1.5 * h + 0.1;
        let series = DenseMatrix::from_rows(&[[0.9], [-0.4], [0.0]]).unwrap();
        let b = make_sequences(&series, &DenseMatrix::zeros(3, 0), 2).unwrap();
        let y = net.forward(&b).unwrap();
        assert!((y[(0, 0)] - expect).abs() < 1e-15);
    }

    #[test]
    fn zero_upstream_zero_gradient() {
        let net = LstmParams::<f64>::init(2, 3, 2, 4, &mut ChaCha8Rng::seed_from_u64(2));
        let b = batch(9, 2, 4, 2);
        let (_, cache) = net.forward_cached(&b).unwrap();
        let g = net.backward(&cache, &DenseMatrix::zeros(5, 2)).unwrap();
        assert!(g.flatten().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn finite_difference_agreement() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = LstmParams::<f64>::init(2, 4, 3, 5, &mut rng);
        net.b.iter_mut().for_each(|v| *v = rng.gen_range(-0.5..0.5));
        let b = batch(12, 2, 5, 3);
        let up = DenseMatrix::from_fn(7, 3, |_, _| rng.gen_range(-1.0..1.0));
        let report = gradient_check(&net, &b, &up).unwrap();
        assert!(report.passes(1e-5, 1e-7), "{:?}", report.worst(1e-5, 1e-7));
    }

    #[test]
    fn wrong_window_rejected() {
        let net = LstmParams::<f64>::zeros(2, 3, 1, 4);
        assert!(net.forward(&batch(10, 2, 3, 0)).is_err());
    }
}

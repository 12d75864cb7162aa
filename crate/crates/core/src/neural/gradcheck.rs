use super::{Network, NeuralError};
use crate::linalg::DenseMatrix;
use crate::Scalar;

/// Reverse-mode gradients paired with central finite differences of
/// `L(p) = Σ f(x; p) ⊙ upstream`.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// `(block name, analytic, finite difference)` for every parameter.
    pub entries: Vec<(String, f64, f64)>,
}

impl GradCheckReport {
    /// Every entry satisfies `|a − f| ≤ rel·max(|a|, |f|)` or `|a − f| ≤ abs_floor`.
    pub fn passes(&self, rel: f64, abs_floor: f64) -> bool {
        self.worst(rel, abs_floor).is_none()
    }

    /// First entry violating the tolerance, if any.
    pub fn worst(&self, rel: f64, abs_floor: f64) -> Option<&(String, f64, f64)> {
        self.entries
            .iter()
            .filter(|(_, a, f)| {
                let d = (a - f).abs();
                d > abs_floor && d > rel * a.abs().max(f.abs())
            })
            .max_by(|x, y| (x.1 - x.2).abs().total_cmp(&(y.1 - y.2).abs()))
    }

    pub fn max_rel_error(&self, abs_floor: f64) -> f64 {
        self.entries
            .iter()
            .map(|(_, a, f)| {
                let d = (a - f).abs();
                if d <= abs_floor {
                    0.0
                } else {
                    d / a.abs().max(f.abs())
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Step `1e-5·max(1, |p|)` per parameter.
pub fn gradient_check<T: Scalar, N: Network<T>>(
    net: &N,
    input: &N::Input,
    upstream: &DenseMatrix<T>,
) -> Result<GradCheckReport, NeuralError> {
    let (_, cache) = net.forward_cached(input)?;
    let analytic = net.backward(&cache, upstream)?.flatten();
    let names: Vec<String> = net
        .blocks()
        .iter()
        .flat_map(|b| std::iter::repeat_n(b.name.clone(), b.data.len()))
        .collect();
    let base = net.flatten();
    let objective = |p: &[T]| -> Result<f64, NeuralError> {
        let mut probe = net.clone();
        probe.set_flat(p);
        let out = probe.forward(input)?;
        Ok(out
            .as_slice()
            .iter()
            .zip(upstream.as_slice())
            .map(|(&o, &u)| o.as_f64() * u.as_f64())
            .sum())
    };
    let mut entries = Vec::with_capacity(base.len());
    let mut p = base.clone();
    for k in 0..base.len() {
        let h = 1e-5 * base[k].as_f64().abs().max(1.0);
        p[k] = base[k] + T::lit(h);
        let up = objective(&p)?;
        p[k] = base[k] - T::lit(h);
        let down = objective(&p)?;
        p[k] = base[k];
        entries.push((names[k].clone(), analytic[k].as_f64(), (up - down) / (2.0 * h)));
    }
    Ok(GradCheckReport { entries })
}

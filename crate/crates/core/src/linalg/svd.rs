use super::{DenseMatrix, LinalgError};
use crate::Scalar;

/// Sweep cap for the one-sided Jacobi iteration.
pub const MAX_SWEEPS: usize = 100;
/// Off-diagonal tolerance: columns `p, q` count as orthogonal once
/// `|b_p·b_q| <= tol·‖b_p‖‖b_q‖`.
pub const OFF_DIAGONAL_TOL: f64 = 1e-12;

/// Thin singular value decomposition `A = W Σ Vᵀ`.
///
/// `left` is `m × k`, `right` is `n × k` with `k = min(m, n)`; when `m < n`
/// the left factor is square and therefore a complete orthonormal basis.
#[derive(Debug, Clone)]
pub struct SvdResult<T> {
    pub left: DenseMatrix<T>,
    pub singulars: Vec<T>,
    pub right: DenseMatrix<T>,
}

impl<T: Scalar> SvdResult<T> {
    /// `Σ_{i<rank} σᵢ wᵢ vᵢᵀ`; `rank = k` gives the full reconstruction.
    pub fn reconstruct(&self, rank: usize) -> DenseMatrix<T> {
        let (m, n) = (self.left.rows(), self.right.rows());
        let rank = rank.min(self.singulars.len());
        let mut out = DenseMatrix::zeros(m, n);
        for r in 0..rank {
            let s = self.singulars[r];
            for i in 0..m {
                let wi = self.left[(i, r)] * s;
                if wi == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += wi * self.right[(j, r)];
                }
            }
        }
        out
    }

    /// Number of singular values above `rtol · σ₁`.
    pub fn numerical_rank(&self, rtol: T) -> usize {
        let first = self.singulars.first().copied().unwrap_or_else(T::zero);
        if first == T::zero() {
            return 0;
        }
        self.singulars.iter().filter(|&&s| s > rtol * first).count()
    }
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd<T: Scalar>(a: &DenseMatrix<T>) -> Result<SvdResult<T>, LinalgError> {
    if !a.is_finite() {
        return Err(LinalgError::NonFinite { op: "svd" });
    }
    if a.rows() < a.cols() {
        let t = jacobi_tall(&a.transpose())?;
        return Ok(SvdResult {
            left: t.right,
            singulars: t.singulars,
            right: t.left,
        });
    }
    jacobi_tall(a)
}

/// Orthogonalizes the columns of a tall (`m >= n`) matrix.
fn jacobi_tall<T: Scalar>(a: &DenseMatrix<T>) -> Result<SvdResult<T>, LinalgError> {
    let (m, n) = a.shape();
    // column-major working copies: columns are contiguous
    let mut cols: Vec<Vec<T>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|j| {
            let mut e = vec![T::zero(); n];
            e[j] = T::one();
            e
        })
        .collect();
    let tol = T::lit(OFF_DIAGONAL_TOL).max(T::epsilon() * T::lit(8.0));

    let mut converged = n < 2;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(LinalgError::NoConvergence { sweeps });
        }
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = dots(&cols[p], &cols[q]);
                if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        converged = !rotated;
    }

    let norms: Vec<T> = cols
        .iter()
        .map(|c| c.iter().map(|&x| x * x).sum::<T>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps ties in column order
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).expect("finite norms"));

    let smax = order.first().map_or(T::zero(), |&i| norms[i]);
    let negligible = smax * T::epsilon() * T::from_usize_lossy(m.max(n));
    let mut left = DenseMatrix::zeros(m, n);
    let mut right = DenseMatrix::zeros(n, n);
    let mut singulars = Vec::with_capacity(n);
    let mut filled: Vec<Vec<T>> = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let s = norms[j];
        singulars.push(s);
        let u = if s > negligible && s > T::zero() {
            cols[j].iter().map(|&x| x / s).collect()
        } else {
            complete_basis(&filled, m)
        };
        left.set_column(k, &u);
        right.set_column(k, &v[j]);
        filled.push(u);
    }
    Ok(SvdResult {
        left,
        singulars,
        right,
    })
}

fn dots<T: Scalar>(x: &[T], y: &[T]) -> (T, T, T) {
    let mut a = T::zero();
    let mut b = T::zero();
    let mut g = T::zero();
    for (&p, &q) in x.iter().zip(y) {
        a += p * p;
        b += q * q;
        g += p * q;
    }
    (a, b, g)
}

fn rotate<T: Scalar>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (lo, hi) = cols.split_at_mut(q);
    for (xp, xq) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let a = *xp;
        let b = *xq;
        *xp = c * a - s * b;
        *xq = s * a + c * b;
    }
}

/// Unit vector orthogonal to every vector in `basis` (modified Gram-Schmidt
/// over the canonical directions, picking the best-conditioned candidate).
fn complete_basis<T: Scalar>(basis: &[Vec<T>], m: usize) -> Vec<T> {
    let mut best: Option<(T, Vec<T>)> = None;
    for e in 0..m {
        let mut cand = vec![T::zero(); m];
        cand[e] = T::one();
        for _ in 0..2 {
            for b in basis {
                let proj: T = cand.iter().zip(b).map(|(&x, &y)| x * y).sum();
                for (x, &y) in cand.iter_mut().zip(b) {
                    *x -= proj * y;
                }
            }
        }
        let norm = cand.iter().map(|&x| x * x).sum::<T>().sqrt();
        if best.as_ref().is_none_or(|(bn, _)| norm > *bn) {
            best = Some((norm, cand));
        }
    }
    let (norm, mut cand) = best.expect("m > 0");
    cand.iter_mut().for_each(|x| *x /= norm);
    cand
}

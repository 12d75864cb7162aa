use super::{DenseMatrix, LinalgError};
use crate::Scalar;

/// Relative pivot threshold below which a matrix is declared singular.
pub const SINGULAR_PIVOT_RTOL: f64 = 1e-12;

/// LU factorization with partial pivoting, `P·A = L·U`, packed in one matrix.
#[derive(Debug, Clone)]
pub struct LuFactor<T> {
    lu: DenseMatrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> LuFactor<T> {
    pub fn new(a: &DenseMatrix<T>) -> Result<Self, LinalgError> {
        let n = a.rows();
        if a.cols() != n {
            return Err(LinalgError::Shape {
                op: "lu",
                expected: (n, n),
                found: a.shape(),
            });
        }
        let threshold = T::lit(SINGULAR_PIVOT_RTOL) * a.max_abs();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pmax > threshold) || pmax == T::zero() {
                return Err(LinalgError::Singular {
                    pivot: pmax.as_f64(),
                    threshold: threshold.as_f64(),
                });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != T::zero() {
                    for j in (k + 1)..n {
                        let ukj = lu[(k, j)];
                        lu[(i, j)] -= f * ukj;
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>, LinalgError> {
        let n = self.dim();
        if b.len() != n {
            return Err(LinalgError::Shape {
                op: "lu_solve",
                expected: (n, 1),
                found: (b.len(), 1),
            });
        }
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
        Ok(x)
    }

    /// `A⁻¹`, column by column.
    pub fn inverse(&self) -> Result<DenseMatrix<T>, LinalgError> {
        let n = self.dim();
        let mut inv = DenseMatrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = T::zero());
            e[j] = T::one();
            inv.set_column(j, &self.solve(&e)?);
        }
        Ok(inv)
    }
}

/// Solves `A x = b` by LU with partial pivoting.
pub fn lu_solve<T: Scalar>(a: &DenseMatrix<T>, b: &[T]) -> Result<Vec<T>, LinalgError> {
    LuFactor::new(a)?.solve(b)
}

pub fn inverse<T: Scalar>(a: &DenseMatrix<T>) -> Result<DenseMatrix<T>, LinalgError> {
    LuFactor::new(a)?.inverse()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn inf_norm(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn identity_system() {
        let b = [1.0, -2.0, 3.5];
        assert_eq!(lu_solve(&DenseMatrix::identity(3), &b).unwrap(), b.to_vec());
    }

    #[test]
    fn diagonal_system() {
        let a = DenseMatrix::from_diagonal(&[2.0, 4.0]);
        assert_eq!(lu_solve(&a, &[2.0, 8.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn random_well_conditioned_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut a = DenseMatrix::from_fn(5, 5, |_, _| rng.gen_range(-1.0..1.0));
        for i in 0..5 {
            a[(i, i)] += 5.0;
        }
        let b: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = lu_solve(&a, &b).unwrap();
        let ax = a.matvec(&x).unwrap();
        let r: Vec<f64> = ax.iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(inf_norm(&r) <= 1e-10 * inf_norm(&b));
    }

    #[test]
    fn needs_pivoting() {
        let a = DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert_eq!(lu_solve(&a, &[3.0, 4.0]).unwrap(), vec![4.0, 3.0]);
    }

    #[test]
    fn singular_rejected() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        assert!(matches!(lu_solve(&a, &[1.0, 1.0]), Err(LinalgError::Singular { .. })));
        let z = DenseMatrix::<f64>::zeros(2, 2);
        assert!(matches!(lu_solve(&z, &[1.0, 1.0]), Err(LinalgError::Singular { .. })));
    }
}

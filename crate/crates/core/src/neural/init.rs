use rand::Rng;

use crate::linalg::DenseMatrix;
use crate::Scalar;

/// `rows × cols` matrix with entries uniform in `±√(6/(fan_in + fan_out))`.
pub fn glorot_uniform<T: Scalar, R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    fan_in: usize,
    fan_out: usize,
    rng: &mut R,
) -> DenseMatrix<T> {
    let bound = (6.0 / (fan_in + fan_out).max(1) as f64).sqrt();
    DenseMatrix::from_fn(rows, cols, |_, _| T::lit(rng.gen_range(-bound..=bound)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bounded_and_seeded() {
        let a: DenseMatrix<f64> = glorot_uniform(30, 20, 30, 20, &mut ChaCha8Rng::seed_from_u64(1));
        let b: DenseMatrix<f64> = glorot_uniform(30, 20, 30, 20, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(a, b);
        let bound = (6.0f64 / 50.0).sqrt();
        assert!(a.max_abs() <= bound);
        assert!(a.max_abs() > 0.8 * bound);
    }
}

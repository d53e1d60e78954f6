use num_complex::Complex64;

use super::ComplexMatrix;
use crate::error::{Error, Result};

/// Largest order accepted by [`permanent`]; the cost is `O(2^n n)`.
pub const MAX_PERMANENT_ORDER: usize = 20;

/// Exact permanent of a square matrix (Ryser formula, Gray-code order).
pub fn permanent(a: &ComplexMatrix) -> Result<Complex64> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "permanent of a non-square {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if n == 0 || n > MAX_PERMANENT_ORDER {
        return Err(Error::InvalidParameter(format!(
            "permanent order {n} outside 1..={MAX_PERMANENT_ORDER}"
        )));
    }
    Ok(permanent_row_major(n, a.as_slice()))
}

/// Permanent of the `n x n` row-major block `a`, without validation.
///
/// Panics if `a.len() < n * n`.
pub fn permanent_row_major(n: usize, a: &[Complex64]) -> Complex64 {
    match n {
        0 => Complex64::new(1.0, 0.0),
        1 => a[0],
        2 => a[0] * a[3] + a[1] * a[2],
        _ => ryser_gray(n, a),
    }
}

fn ryser_gray(n: usize, a: &[Complex64]) -> Complex64 {
    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut in_subset = vec![false; n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut odd = false;
    for k in 1u64..(1u64 << n) {
        let j = k.trailing_zeros() as usize;
        in_subset[j] = !in_subset[j];
        odd = !odd;
        if in_subset[j] {
            for (i, r) in row_sums.iter_mut().enumerate() {
                *r += a[i * n + j];
            }
        } else {
            for (i, r) in row_sums.iter_mut().enumerate() {
                *r -= a[i * n + j];
            }
        }
        let prod = row_sums
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, r| acc * r);
        // subset sign (-1)^{|S|}, overall factor (-1)^n applied below
        if odd {
            total -= prod;
        } else {
            total += prod;
        }
    }
    if n % 2 == 1 {
        -total
    } else {
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::leibniz_permanent;
    use crate::seed::rng_from_seed;
    use rand::Rng;

    fn random_matrix(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn scalar_and_ones() {
        let a = ComplexMatrix::new(1, 1, vec![Complex64::new(0.3, -2.0)]).unwrap();
        assert_eq!(permanent(&a).unwrap(), Complex64::new(0.3, -2.0));
        let mut fact = 1.0;
        for n in 1..=6 {
            fact *= n as f64;
            let ones = ComplexMatrix::from_fn(n, n, |_, _| Complex64::new(1.0, 0.0));
            assert_eq!(permanent(&ones).unwrap(), Complex64::new(fact, 0.0), "n = {n}");
        }
    }

    #[test]
    fn agrees_with_leibniz() {
        let mut rng = rng_from_seed(11);
        for n in 1..=6 {
            for _ in 0..20 {
                let a = random_matrix(n, &mut rng);
                let fast = permanent(&a).unwrap();
                let slow = leibniz_permanent(&a).unwrap();
                assert!((fast - slow).norm() <= 1e-12 * slow.norm().max(1e-300), "n={n}");
            }
        }
    }

    #[test]
    fn four_by_four_frozen_value() {
        // Leibniz over all 24 permutations of this fixed matrix.
        let a = ComplexMatrix::from_fn(4, 4, |i, j| {
            Complex64::new((i * 4 + j) as f64 * 0.1 - 0.5, (j as f64 - i as f64) * 0.25)
        });
        let fast = permanent(&a).unwrap();
        let slow = leibniz_permanent(&a).unwrap();
        assert!((fast - slow).norm() < 1e-12 * slow.norm());
    }

    #[test]
    fn row_permutation_invariance_and_row_linearity() {
        let mut rng = rng_from_seed(5);
        let a = random_matrix(5, &mut rng);
        let p = permanent(&a).unwrap();
        let swapped = ComplexMatrix::from_fn(5, 5, |i, j| a[([2, 0, 4, 1, 3][i], j)]);
        assert!((permanent(&swapped).unwrap() - p).norm() < 1e-12 * p.norm());

        let b = random_matrix(5, &mut rng);
        let lambda = Complex64::new(0.7, -1.3);
        // row 1 of `mixed` is lambda * a_1 + b_1, other rows from `a`
        let mixed = ComplexMatrix::from_fn(5, 5, |i, j| {
            if i == 1 {
                lambda * a[(1, j)] + b[(1, j)]
            } else {
                a[(i, j)]
            }
        });
        let only_b = ComplexMatrix::from_fn(5, 5, |i, j| if i == 1 { b[(1, j)] } else { a[(i, j)] });
        let lhs = permanent(&mixed).unwrap();
        let rhs = lambda * p + permanent(&only_b).unwrap();
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn deterministic_bits() {
        let mut rng = rng_from_seed(3);
        let a = random_matrix(7, &mut rng);
        let x = permanent(&a).unwrap();
        let y = permanent(&a.clone()).unwrap();
        assert_eq!(x.re.to_bits(), y.re.to_bits());
        assert_eq!(x.im.to_bits(), y.im.to_bits());
    }

    #[test]
    fn rejects_non_square() {
        assert!(permanent(&ComplexMatrix::zeros(2, 3)).is_err());
        assert!(permanent(&ComplexMatrix::zeros(0, 0)).is_err());
    }
}

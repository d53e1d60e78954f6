use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::ComplexMatrix;
use crate::error::{invalid, Error, Result};
use crate::seed::{rng_from_seed, SimRng};

/// Tolerance on `max |U^H U - I|` for constructed unitaries.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

/// Tolerance applied to unitaries loaded from text files, whose entries are
/// usually printed with limited precision.
pub const EXPLICIT_UNITARITY_TOLERANCE: f64 = 1e-8;

/// Where a unitary came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Haar { seed: u64 },
    Dft,
    HadamardRows { rows: Vec<Vec<i8>>, seed: u64 },
    Identity,
    Explicit,
}

/// Square unitary matrix with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitarySpec {
    matrix: ComplexMatrix,
    provenance: Provenance,
}

impl UnitarySpec {
    /// Wraps `matrix`, checking unitarity to `tolerance`.
    pub fn new(matrix: ComplexMatrix, provenance: Provenance, tolerance: f64) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(Error::Dimension(format!(
                "unitary must be square and non-empty, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let deviation = matrix.unitarity_deviation();
        if deviation > tolerance {
            return Err(Error::NotUnitary {
                deviation,
                tolerance,
            });
        }
        Ok(Self { matrix, provenance })
    }

    pub fn explicit(matrix: ComplexMatrix) -> Result<Self> {
        Self::new(matrix, Provenance::Explicit, UNITARITY_TOLERANCE)
    }

    pub fn identity(m: usize) -> Result<Self> {
        Self::new(ComplexMatrix::identity(m), Provenance::Identity, UNITARITY_TOLERANCE)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn modes(&self) -> usize {
        self.matrix.rows()
    }
}

/// `D_jl = M^{-1/2} exp(-2 pi i j l / M)` with 0-based `j, l`.
pub fn dft_matrix(m: usize) -> Result<UnitarySpec> {
    if m == 0 {
        return Err(invalid("DFT size must be at least 1"));
    }
    let norm = 1.0 / (m as f64).sqrt();
    let matrix = ComplexMatrix::from_fn(m, m, |j, l| {
        // reduce j*l mod m first so the phase stays accurate for larger m
        let phase = -2.0 * std::f64::consts::PI * ((j * l) % m) as f64 / m as f64;
        Complex64::from_polar(norm, phase)
    });
    UnitarySpec::new(matrix, Provenance::Dft, UNITARITY_TOLERANCE)
}

/// Haar-random unitary: QR of a complex Ginibre matrix, with the phases of
/// `diag(R)` moved into `Q`.
pub fn haar_random_unitary(m: usize, seed: u64) -> Result<UnitarySpec> {
    if m == 0 {
        return Err(invalid("unitary size must be at least 1"));
    }
    let mut rng = rng_from_seed(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut entries = Vec::with_capacity(m * m);
    for _ in 0..m * m {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        entries.push(Complex64::new(re * scale, im * scale));
    }
    let ginibre = DMatrix::from_row_slice(m, m, &entries);
    let qr = ginibre.qr();
    let q = qr.q();
    let r = qr.r();
    let phases: Vec<Complex64> = (0..m)
        .map(|i| {
            let d = r[(i, i)];
            let n = d.norm();
            if n > 0.0 {
                d / n
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
        .collect();
    let matrix = ComplexMatrix::from_fn(m, m, |i, j| q[(i, j)] * phases[j]);
    UnitarySpec::new(matrix, Provenance::Haar { seed }, UNITARITY_TOLERANCE)
}

/// Real orthogonal matrix whose leading rows are the given mutually
/// orthogonal `+-1` vectors scaled by `M^{-1/2}`.
///
/// The remaining rows come from Gram-Schmidt on seeded real Gaussian
/// candidates; a candidate whose residual norm falls below `1e-8` is
/// discarded and redrawn. When rows are completed, the last one is signed so
/// the determinant is `+1`.
pub fn hadamard_row_unitary(m: usize, rows: &[Vec<i8>], seed: u64) -> Result<UnitarySpec> {
    if m == 0 {
        return Err(invalid("unitary size must be at least 1"));
    }
    if rows.is_empty() || rows.len() > m {
        return Err(invalid(format!("need between 1 and {m} prescribed rows")));
    }
    for (a, row) in rows.iter().enumerate() {
        if row.len() != m {
            return Err(invalid(format!("row {} has length {}, expected {m}", a + 1, row.len())));
        }
        if row.iter().any(|&v| v != 1 && v != -1) {
            return Err(invalid(format!("row {} has entries other than +-1", a + 1)));
        }
        for (b, other) in rows.iter().enumerate().take(a) {
            let dot: i64 = row.iter().zip(other).map(|(&x, &y)| i64::from(x * y)).sum();
            if dot != 0 {
                return Err(invalid(format!("rows {} and {} are not orthogonal", b + 1, a + 1)));
            }
        }
    }

    let norm = 1.0 / (m as f64).sqrt();
    let mut basis: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| f64::from(v) * norm).collect())
        .collect();
    let mut rng: SimRng = rng_from_seed(seed);
    let mut draws = 0usize;
    while basis.len() < m {
        draws += 1;
        if draws > 1000 * m {
            return Err(invalid("could not complete the orthonormal basis"));
        }
        let mut v: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for b in &basis {
                let proj: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
            }
        }
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= len);
        basis.push(v);
    }
    if basis.len() > rows.len() {
        let flat: Vec<f64> = basis.iter().flatten().copied().collect();
        if DMatrix::from_row_slice(m, m, &flat).determinant() < 0.0 {
            basis.last_mut().unwrap().iter_mut().for_each(|x| *x = -*x);
        }
    }
    let matrix = ComplexMatrix::from_fn(m, m, |i, j| Complex64::new(basis[i][j], 0.0));
    UnitarySpec::new(
        matrix,
        Provenance::HadamardRows {
            rows: rows.to_vec(),
            seed,
        },
        UNITARITY_TOLERANCE,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dft_small_cases() {
        let one = dft_matrix(1).unwrap();
        assert_eq!(one.matrix().as_slice(), &[Complex64::new(1.0, 0.0)]);
        let two = dft_matrix(2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let want = ComplexMatrix::from_real(2, 2, &[h, h, h, -h]).unwrap();
        assert!(two.matrix().max_abs_diff(&want) < 1e-15);
        assert!(dft_matrix(0).is_err());
    }

    #[test]
    fn dft_unitary_with_flat_moduli() {
        for m in 1..=12 {
            let d = dft_matrix(m).unwrap();
            assert!(d.matrix().unitarity_deviation() < 1e-12, "m = {m}");
            let target = 1.0 / (m as f64).sqrt();
            for z in d.matrix().as_slice() {
                assert!((z.norm() - target).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn haar_is_deterministic_and_unitary() {
        let a = haar_random_unitary(10, 99).unwrap();
        let b = haar_random_unitary(10, 99).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, haar_random_unitary(10, 100).unwrap());
        assert!(a.matrix().unitarity_deviation() < 1e-10);
        assert_eq!(a.provenance(), &Provenance::Haar { seed: 99 });
    }

    #[test]
    fn haar_entry_power_is_flat() {
        // E|U_ij|^2 = 1/M; each seed contributes the average over all M^2
        // entries, whose spread is estimated from the sample itself.
        let m = 6;
        let n = 1000;
        let mut per_seed = Vec::with_capacity(n);
        let mut first_entry = Vec::with_capacity(n);
        for seed in 0..n as u64 {
            let u = haar_random_unitary(m, seed).unwrap();
            first_entry.push(u.matrix()[(2, 3)].norm_sqr());
            per_seed.push(u.matrix().column(1).iter().map(|z| z.norm_sqr()).sum::<f64>());
        }
        let mean = first_entry.iter().sum::<f64>() / n as f64;
        let var = first_entry.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let sigma = (var / n as f64).sqrt();
        assert!((mean - 1.0 / m as f64).abs() < 3.0 * sigma, "mean {mean} sigma {sigma}");
        assert!(per_seed.iter().all(|s| (s - 1.0).abs() < 1e-10));
    }

    #[test]
    fn hadamard_rows_ten_modes() {
        let rows = vec![vec![1i8; 10], vec![1, 1, 1, 1, 1, -1, -1, -1, -1, -1]];
        let u = hadamard_row_unitary(10, &rows, 3).unwrap();
        assert!(u.matrix().unitarity_deviation() < 1e-10);
        let s = 1.0 / 10f64.sqrt();
        for (r, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let z = u.matrix()[(r, j)];
                assert!((z.re - f64::from(v) * s).abs() < 1e-15 && z.im == 0.0);
            }
        }
    }

    #[test]
    fn hadamard_single_row_two_modes_is_rotation() {
        let u = hadamard_row_unitary(2, &[vec![1, 1]], 0).unwrap();
        let m = u.matrix();
        assert!(m.as_slice().iter().all(|z| z.im == 0.0));
        let det = m[(0, 0)].re * m[(1, 1)].re - m[(0, 1)].re * m[(1, 0)].re;
        assert!((det - 1.0).abs() < 1e-12);
        assert!(m.unitarity_deviation() < 1e-12);
    }

    #[test]
    fn hadamard_rejects_bad_rows() {
        assert!(hadamard_row_unitary(4, &[vec![1, 1, 1, 1], vec![1, 1, 1, -1]], 0).is_err());
        assert!(hadamard_row_unitary(4, &[vec![1, 0, 1, 1]], 0).is_err());
        assert!(hadamard_row_unitary(4, &[vec![1, 1, 1]], 0).is_err());
        assert!(hadamard_row_unitary(4, &[], 0).is_err());
    }

    #[test]
    fn explicit_rejects_non_unitary() {
        let m = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(UnitarySpec::explicit(m), Err(Error::NotUnitary { .. })));
    }
}

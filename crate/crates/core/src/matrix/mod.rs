//! Dense complex matrices, permanents and unitary constructors.

mod permanent;
mod unitary;

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::PhotonConfiguration;

pub use permanent::{permanent, permanent_row_major, MAX_PERMANENT_ORDER};
pub use unitary::{
    dft_matrix, haar_random_unitary, hadamard_row_unitary, Provenance, UnitarySpec,
    EXPLICIT_UNITARITY_TOLERANCE, UNITARITY_TOLERANCE,
};

/// Row-major dense complex matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Real matrix from row-major values.
    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(l, j)];
                }
            }
        }
        Ok(out)
    }

    /// `A * diag(d)`.
    pub fn scale_columns(&self, d: &[f64]) -> Result<Self> {
        if d.len() != self.cols {
            return Err(Error::Dimension(format!(
                "{} column factors for {} columns",
                d.len(),
                self.cols
            )));
        }
        Ok(Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * d[j]))
    }

    /// `max_ij |(A^H A - I)_ij|`; infinite for non-square input.
    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for l in 0..n {
                    acc += self[(l, i)].conj() * self[(l, j)];
                }
                if i == j {
                    acc -= 1.0;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Sub-matrix with entry `(i, j) = S[rows_i, cols_j]`; repeated modes repeat
/// the corresponding row or column.
///
/// The transition amplitude from input `x` to output `k` uses
/// `submatrix(s, k, x)`, with `S[out, in]` the single-photon amplitude.
pub fn submatrix(
    s: &ComplexMatrix,
    rows: &PhotonConfiguration,
    cols: &PhotonConfiguration,
) -> Result<ComplexMatrix> {
    rows.check_modes(s.rows())?;
    cols.check_modes(s.cols())?;
    let (r, c) = (rows.modes(), cols.modes());
    Ok(ComplexMatrix::from_fn(r.len(), c.len(), |i, j| s[(r[i], c[j])]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn pc(m: &[usize]) -> PhotonConfiguration {
        PhotonConfiguration::new(m, 3).unwrap()
    }

    #[test]
    fn submatrix_identity_examples() {
        let id = ComplexMatrix::identity(3);
        let a = submatrix(&id, &pc(&[1, 2]), &pc(&[1, 2])).unwrap();
        assert_eq!(a, ComplexMatrix::identity(2));
        let b = submatrix(&id, &pc(&[1, 2]), &pc(&[1, 3])).unwrap();
        assert_eq!(b.as_slice(), &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        assert_eq!(permanent(&b).unwrap(), c(0.0));
    }

    #[test]
    fn bunched_rows_repeat() {
        let s = ComplexMatrix::from_fn(3, 3, |i, j| Complex64::new(i as f64, j as f64));
        let a = submatrix(&s, &pc(&[2, 2]), &pc(&[1, 3])).unwrap();
        assert_eq!(a.row(0), a.row(1));
        assert_eq!(a.row(0), &[s[(1, 0)], s[(1, 2)]]);
    }

    #[test]
    fn submatrix_bounds() {
        let s = ComplexMatrix::identity(2);
        assert!(submatrix(&s, &pc(&[1, 3]), &pc(&[1, 2])).is_err());
    }

    #[test]
    fn rejects_non_finite_and_bad_shapes() {
        assert!(ComplexMatrix::new(1, 1, vec![Complex64::new(f64::NAN, 0.0)]).is_err());
        assert!(ComplexMatrix::new(2, 2, vec![c(1.0)]).is_err());
        let a = ComplexMatrix::zeros(2, 3);
        assert!(a.matmul(&a).is_err());
        assert!(a.unitarity_deviation().is_infinite());
    }
}

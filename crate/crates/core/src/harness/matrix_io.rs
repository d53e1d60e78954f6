//! Plain-text complex matrices.
//!
//! ```text
//! 2 2
//! 0.7071067811865476,0 0.7071067811865476,0
//! 0.7071067811865476,0 -0.7071067811865476,0
//! ```
//!
//! The header gives rows and columns; each following line holds one row of
//! `re,im` pairs separated by whitespace. Blank lines and lines starting with
//! `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, Provenance, UnitarySpec, EXPLICIT_UNITARITY_TOLERANCE};

/// Largest number of entries accepted by the parser.
pub const MAX_MATRIX_ENTRIES: usize = 1 << 20;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_entry(token: &str, line: usize) -> Result<Complex64> {
    let (re, im) = token
        .split_once(',')
        .ok_or_else(|| parse_err(line, format!("entry `{token}` is not of the form re,im")))?;
    let re: f64 = re
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("bad real part in `{token}`")))?;
    let im: f64 = im
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("bad imaginary part in `{token}`")))?;
    if !re.is_finite() || !im.is_finite() {
        return Err(parse_err(line, format!("non-finite entry `{token}`")));
    }
    Ok(Complex64::new(re, im))
}

pub fn parse_complex_matrix(text: &str) -> Result<ComplexMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty matrix file"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(parse_err(hline, "header must be `rows cols`"));
    }
    let rows: usize = dims[0].parse().map_err(|_| parse_err(hline, "bad row count"))?;
    let cols: usize = dims[1].parse().map_err(|_| parse_err(hline, "bad column count"))?;
    if rows == 0 || cols == 0 {
        return Err(parse_err(hline, "matrix dimensions must be positive"));
    }
    if rows.checked_mul(cols).is_none_or(|n| n > MAX_MATRIX_ENTRIES) {
        return Err(parse_err(hline, format!("matrix larger than {MAX_MATRIX_ENTRIES} entries")));
    }
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (lineno, line) in lines {
        if seen == rows {
            return Err(parse_err(lineno, format!("more than {rows} rows")));
        }
        let before = data.len();
        for token in line.split_whitespace() {
            data.push(parse_entry(token, lineno)?);
        }
        if data.len() - before != cols {
            return Err(parse_err(
                lineno,
                format!("row has {} entries, expected {cols}", data.len() - before),
            ));
        }
        seen += 1;
    }
    if seen != rows {
        return Err(parse_err(text.lines().count().max(1), format!("expected {rows} rows, found {seen}")));
    }
    ComplexMatrix::new(rows, cols, data)
}

/// Writes `m` in the format read by [`parse_complex_matrix`]; values
/// round-trip exactly.
pub fn format_complex_matrix(m: &ComplexMatrix) -> String {
    let mut out = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|z| format!("{:?},{:?}", z.re, z.im)).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

/// Parses a unitary, checking `max |U^H U - I| <= 1e-8`.
pub fn parse_unitary(text: &str) -> Result<UnitarySpec> {
    let m = parse_complex_matrix(text)?;
    UnitarySpec::new(m, Provenance::Explicit, EXPLICIT_UNITARITY_TOLERANCE)
}

pub fn load_unitary(path: &Path) -> Result<UnitarySpec> {
    parse_unitary(&std::fs::read_to_string(path)?)
}

pub fn write_matrix(path: &Path, m: &ComplexMatrix) -> Result<()> {
    std::fs::write(path, format_complex_matrix(m))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{dft_matrix, haar_random_unitary};

    #[test]
    fn round_trip_is_exact() {
        let u = haar_random_unitary(5, 3).unwrap();
        let text = format_complex_matrix(u.matrix());
        let back = parse_complex_matrix(&text).unwrap();
        assert_eq!(&back, u.matrix());
        assert!(parse_unitary(&text).is_ok());
    }

    #[test]
    fn reads_documented_example() {
        let text = "2 2\n0.7071067811865476,0 0.7071067811865476,0\n0.7071067811865476,0 -0.7071067811865476,0\n";
        let u = parse_unitary(text).unwrap();
        assert!(u.matrix().max_abs_diff(dft_matrix(2).unwrap().matrix()) < 1e-15);
    }

    #[test]
    fn tolerates_printed_precision() {
        let text = "2 2\n0.70710678,0 0.70710678,0\n0.70710678,0 -0.70710678,0\n";
        assert!(parse_unitary(text).is_ok());
        let text = "2 2\n0.7071,0 0.7071,0\n0.7071,0 -0.7071,0\n";
        assert!(matches!(parse_unitary(text), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn reports_line_numbers() {
        let err = parse_complex_matrix("2 2\n1,0 0,0\n0,0 x,1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(parse_complex_matrix("").is_err());
        assert!(parse_complex_matrix("2 2\n1,0 0,0\n").is_err());
        assert!(parse_complex_matrix("1 1\n1,0\n1,0\n").is_err());
        assert!(parse_complex_matrix("1 2\n1,0\n").is_err());
        assert!(parse_complex_matrix("1 1\n1\n").is_err());
        assert!(parse_complex_matrix("1 1\nnan,0\n").is_err());
        assert!(parse_complex_matrix("100000 100000\n").is_err());
        assert!(parse_complex_matrix("0 3\n").is_err());
    }
}

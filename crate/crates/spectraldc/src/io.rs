//! File formats.
//!
//! Matrix text format: a header line `rows cols kind` with kind `real64` or
//! `complex128`, followed by one entry per line in column-major order
//! (`re` for real, `re im` for complex). Floats print in Rust's shortest
//! round-trip representation, so write/read is exact.
//!
//! Packed band format (binary, little-endian): `n: u64`, `b: u64`, then for
//! each column `j` the entries `A[max(0, j-b)..=j, j]` of the symmetric
//! matrix as `f64` (diagonal plus up to `b` superdiagonals per column).

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{Scalar, ScalarKind};

/// A matrix of either scalar kind, as read from the text format.
#[derive(Clone, Debug)]
pub enum AnyMatrix {
    Real(Matrix<f64>),
    Complex(Matrix<Complex64>),
}

impl AnyMatrix {
    pub fn rows(&self) -> usize {
        match self {
            AnyMatrix::Real(m) => m.rows(),
            AnyMatrix::Complex(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            AnyMatrix::Real(m) => m.cols(),
            AnyMatrix::Complex(m) => m.cols(),
        }
    }

    pub fn kind(&self) -> ScalarKind {
        match self {
            AnyMatrix::Real(_) => ScalarKind::Real64,
            AnyMatrix::Complex(_) => ScalarKind::Complex128,
        }
    }

    /// View as complex regardless of stored kind.
    pub fn to_complex(&self) -> Matrix<Complex64> {
        match self {
            AnyMatrix::Real(m) => m.to_complex(),
            AnyMatrix::Complex(m) => m.clone(),
        }
    }
}

/// Serialize to the text format.
pub fn write_matrix_text<T: Scalar>(a: &Matrix<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", a.rows(), a.cols(), T::KIND.label());
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            let x = a[(i, j)];
            match T::KIND {
                ScalarKind::Real64 => {
                    let _ = writeln!(out, "{}", x.re());
                }
                ScalarKind::Complex128 => {
                    let _ = writeln!(out, "{} {}", x.re(), x.im());
                }
            }
        }
    }
    out
}

pub fn save_matrix<T: Scalar>(a: &Matrix<T>, path: &Path) -> Result<()> {
    std::fs::File::create(path)?.write_all(write_matrix_text(a).as_bytes())?;
    Ok(())
}

/// Parse the text format.
pub fn read_matrix_text(text: &str) -> Result<AnyMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let mut parts = header.split_whitespace();
    let rows: usize = parse_field(parts.next(), 1, "rows")?;
    let cols: usize = parse_field(parts.next(), 1, "cols")?;
    let kind = match parts.next() {
        Some("real64") => ScalarKind::Real64,
        Some("complex128") => ScalarKind::Complex128,
        other => {
            return Err(Error::Parse {
                line: 1,
                message: format!("unknown scalar kind {other:?}"),
            })
        }
    };

    let want = rows * cols;
    match kind {
        ScalarKind::Real64 => {
            let mut data = Vec::with_capacity(want);
            for (idx, line) in lines.by_ref() {
                if line.trim().is_empty() {
                    continue;
                }
                let v: f64 = line.trim().parse().map_err(|e| Error::Parse {
                    line: idx + 1,
                    message: format!("bad real entry: {e}"),
                })?;
                data.push(v);
                if data.len() == want {
                    break;
                }
            }
            if data.len() != want {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("expected {want} entries, got {}", data.len()),
                });
            }
            Ok(AnyMatrix::Real(Matrix::from_col_major(rows, cols, data)?))
        }
        ScalarKind::Complex128 => {
            let mut data = Vec::with_capacity(want);
            for (idx, line) in lines.by_ref() {
                if line.trim().is_empty() {
                    continue;
                }
                let mut it = line.split_whitespace();
                let re: f64 = parse_field(it.next(), idx + 1, "re")?;
                let im: f64 = parse_field(it.next(), idx + 1, "im")?;
                data.push(Complex64::new(re, im));
                if data.len() == want {
                    break;
                }
            }
            if data.len() != want {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("expected {want} entries, got {}", data.len()),
                });
            }
            Ok(AnyMatrix::Complex(Matrix::from_col_major(rows, cols, data)?))
        }
    }
}

pub fn load_matrix(path: &Path) -> Result<AnyMatrix> {
    let mut text = String::new();
    std::fs::File::open(path)?.read_to_string(&mut text)?;
    read_matrix_text(&text)
}

fn parse_field<V: std::str::FromStr>(field: Option<&str>, line: usize, name: &str) -> Result<V>
where
    V::Err: std::fmt::Display,
{
    field
        .ok_or(Error::Parse {
            line,
            message: format!("missing {name}"),
        })?
        .parse()
        .map_err(|e| Error::Parse {
            line,
            message: format!("bad {name}: {e}"),
        })
}

/// Packed symmetric band serialization: header `(n, b)`, then band columns.
pub fn write_band_packed(n: usize, b: usize, entry: impl Fn(usize, usize) -> f64) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * n * (b + 1));
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(b as u64).to_le_bytes());
    for j in 0..n {
        let top = j.saturating_sub(b);
        for i in top..=j {
            out.extend_from_slice(&entry(i, j).to_le_bytes());
        }
    }
    out
}

/// Parse the packed band format, handing entries `(i, j, value)` with
/// `i <= j` to the sink. Returns `(n, b)`.
pub fn read_band_packed(bytes: &[u8], mut sink: impl FnMut(usize, usize, f64)) -> Result<(usize, usize)> {
    if bytes.len() < 16 {
        return Err(Error::Parse {
            line: 0,
            message: "band header truncated".into(),
        });
    }
    let n = u64::from_le_bytes(bytes[0..8].try_into().unwrap()) as usize;
    let b = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let mut off = 16;
    for j in 0..n {
        let top = j.saturating_sub(b);
        for i in top..=j {
            if off + 8 > bytes.len() {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("band data truncated at column {j}"),
                });
            }
            let v = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
            off += 8;
            sink(i, j, v);
        }
    }
    Ok((n, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip_real_exact() {
        let a = Matrix::from_fn(3, 2, |i, j| {
            (1.0 + i as f64) / (3.0 + j as f64) * if (i + j) % 2 == 0 { 1.0 } else { -1.0 }
        });
        let text = write_matrix_text(&a);
        match read_matrix_text(&text).unwrap() {
            AnyMatrix::Real(b) => assert_eq!(a, b),
            _ => panic!("kind changed"),
        }
    }

    #[test]
    fn text_roundtrip_complex_exact() {
        let a = Matrix::from_fn(2, 2, |i, j| {
            Complex64::new(0.1 + i as f64, -0.3 * j as f64 + 1e-17)
        });
        let text = write_matrix_text(&a);
        match read_matrix_text(&text).unwrap() {
            AnyMatrix::Complex(b) => assert_eq!(a, b),
            _ => panic!("kind changed"),
        }
    }

    #[test]
    fn rejects_bad_header() {
        assert!(read_matrix_text("2 2 float32\n").is_err());
        assert!(read_matrix_text("").is_err());
    }

    #[test]
    fn band_packed_roundtrip() {
        let n = 6;
        let b = 2;
        let val = |i: usize, j: usize| (i * 10 + j) as f64;
        let bytes = write_band_packed(n, b, val);
        let mut got = Vec::new();
        let (rn, rb) = read_band_packed(&bytes, |i, j, v| got.push((i, j, v))).unwrap();
        assert_eq!((rn, rb), (n, b));
        for (i, j, v) in got {
            assert!(j - i <= b);
            assert_eq!(v, val(i, j));
        }
    }
}

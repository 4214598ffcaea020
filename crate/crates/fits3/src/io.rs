//! File formats: CSV matrices/vectors with full float precision, instance
//! bundles, and atomic writes.
//!
//! A matrix file holds one row per line, entries comma-separated; a vector
//! file holds one value per line. Floats are written with 17 significant
//! digits so a round trip preserves the value bit-for-bit.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Formats a float with enough digits to round-trip exactly.
pub fn format_float(v: f64) -> String {
    format!("{v:.17e}")
}

/// Writes `bytes` to `path` via a temporary file and rename, so readers
/// never observe a truncated file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(io_err)?;
    f.write_all(bytes).map_err(io_err)?;
    f.sync_all().map_err(io_err)?;
    drop(f);
    fs::rename(&tmp, path).map_err(io_err)
}

pub fn write_matrix(path: &Path, a: &DenseMatrix) -> Result<()> {
    let mut out = String::with_capacity(a.rows() * a.cols() * 26);
    for i in 0..a.rows() {
        for (j, v) in a.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format_float(*v));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut width = 0usize;
        for tok in line.split(',') {
            let v: f64 = tok.trim().parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: format!("bad float '{}'", tok.trim()),
            })?;
            data.push(v);
            width += 1;
        }
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    msg: format!("row has {width} entries, expected {c}"),
                })
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: "empty matrix file".into(),
    })?;
    DenseMatrix::new(rows, cols, data)
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let mut out = String::with_capacity(v.len() * 26);
    for x in v {
        out.push_str(&format_float(*x));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg: format!("bad float '{t}'"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: format!("non-finite value '{t}'"),
            });
        }
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    #[test]
    fn matrix_round_trip_is_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = DenseMatrix::new(3, 4, data).unwrap();
        write_matrix(&path, &a).unwrap();
        let back = read_matrix(&path).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn vector_round_trip_is_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("v.csv");
        let v = vec![1.0 / 3.0, -2.718281828459045e-11, 5e300];
        write_vector(&path, &v).unwrap();
        assert_eq!(read_vector(&path).unwrap(), v);
    }

    #[test]
    fn formatted_floats_carry_17_significant_digits() {
        let s = format_float(1.0 / 3.0);
        let digits: usize = s
            .chars()
            .take_while(|c| *c != 'e')
            .filter(|c| c.is_ascii_digit())
            .count();
        assert!(digits >= 17, "{s}");
    }

    #[test]
    fn parse_errors_carry_location() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "1.0,2.0\n3.0,oops\n").unwrap();
        match read_matrix(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let ragged = dir.path().join("ragged.csv");
        std::fs::write(&ragged, "1.0,2.0\n3.0\n").unwrap();
        assert!(read_matrix(&ragged).is_err());
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second");
        assert!(!path.with_extension("txt.tmp").exists());
    }
}

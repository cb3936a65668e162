//! Matrix files: the binary DMM1 container and headerless CSV.
//!
//! DMM1 layout: magic `DMMATRX1`, u64 LE rows, u64 LE cols, one kind byte
//! (0 real, 1 complex), then the payload in column-major order as
//! little-endian f64 (complex entries as `re, im` pairs).

use std::path::Path;

use faer::{c64, Mat, MatRef};

use crate::error::{DmdError, Result};
use crate::linalg::{self, CMat};

pub const MAGIC: &[u8; 8] = b"DMMATRX1";
const HEADER_LEN: usize = 8 + 8 + 8 + 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    Dmm1,
    Csv,
}

impl MatrixFormat {
    /// `.csv` means CSV, anything else DMM1.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => MatrixFormat::Csv,
            _ => MatrixFormat::Dmm1,
        }
    }
}

fn read_u64(bytes: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
}

fn read_f64(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
}

pub fn decode_dmm1(bytes: &[u8]) -> Result<CMat> {
    if bytes.len() < HEADER_LEN {
        return Err(DmdError::Format(format!(
            "truncated header: {} bytes, need {HEADER_LEN}",
            bytes.len()
        )));
    }
    if &bytes[..8] != MAGIC {
        return Err(DmdError::Format("bad magic, expected DMMATRX1".into()));
    }
    let n = read_u64(bytes, 8);
    let m = read_u64(bytes, 16);
    let kind = bytes[24];
    let per = match kind {
        0 => 1u64,
        1 => 2u64,
        k => return Err(DmdError::Format(format!("unknown scalar kind {k}"))),
    };
    if n == 0 || m == 0 {
        return Err(DmdError::Format(format!("empty matrix {n}x{m}")));
    }
    let payload = (bytes.len() - HEADER_LEN) as u64;
    let want = n
        .checked_mul(m)
        .and_then(|e| e.checked_mul(per))
        .and_then(|e| e.checked_mul(8))
        .ok_or_else(|| DmdError::Format(format!("header shape {n}x{m} overflows")))?;
    if payload < want {
        return Err(DmdError::Format(format!(
            "truncated payload: header says {n}x{m} ({want} bytes), found {payload}"
        )));
    }
    if payload > want {
        return Err(DmdError::Format(format!(
            "{} trailing bytes after {n}x{m} payload",
            payload - want
        )));
    }
    let (n, m) = (n as usize, m as usize);
    let data = &bytes[HEADER_LEN..];
    let mat = Mat::from_fn(n, m, |i, j| {
        let idx = j * n + i;
        if kind == 0 {
            c64::new(read_f64(data, 8 * idx), 0.0)
        } else {
            c64::new(read_f64(data, 16 * idx), read_f64(data, 16 * idx + 8))
        }
    });
    if !linalg::all_finite(mat.as_ref()) {
        return Err(DmdError::Data("matrix file contains non-finite entries".into()));
    }
    Ok(mat)
}

/// Writes real payloads whenever every imaginary part is `+0.0`, so a real
/// matrix round-trips bit for bit.
pub fn encode_dmm1(a: MatRef<'_, c64>) -> Vec<u8> {
    let (n, m) = (a.nrows(), a.ncols());
    let real = (0..m).all(|j| (0..n).all(|i| a[(i, j)].im.to_bits() == 0));
    let mut out = Vec::with_capacity(HEADER_LEN + n * m * if real { 8 } else { 16 });
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(m as u64).to_le_bytes());
    out.push(if real { 0 } else { 1 });
    for j in 0..m {
        for i in 0..n {
            let z = a[(i, j)];
            out.extend_from_slice(&z.re.to_le_bytes());
            if !real {
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
    }
    out
}

/// Parses headerless CSV: one row per state index, real entries only.
pub fn decode_csv(text: &str) -> Result<CMat> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|_| {
                    DmdError::Format(format!("line {}: cannot parse {:?}", lineno + 1, tok.trim()))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(DmdError::Shape(format!(
                    "ragged CSV: line {} has {} fields, expected {}",
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return Err(DmdError::Format("CSV holds no entries".into()));
    }
    let mat = Mat::from_fn(n, m, |i, j| c64::new(rows[i][j], 0.0));
    if !linalg::all_finite(mat.as_ref()) {
        return Err(DmdError::Data("CSV contains non-finite entries".into()));
    }
    Ok(mat)
}

pub fn encode_csv(a: MatRef<'_, c64>) -> Result<String> {
    if !linalg::is_real(a) {
        return Err(DmdError::Unsupported("CSV holds real matrices only".into()));
    }
    let mut s = String::new();
    for i in 0..a.nrows() {
        let row: Vec<String> = (0..a.ncols()).map(|j| format!("{:?}", a[(i, j)].re)).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    Ok(s)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DmdError + '_ {
    move |source| DmdError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<CMat> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    match format {
        MatrixFormat::Dmm1 => decode_dmm1(&bytes),
        MatrixFormat::Csv => {
            let text = std::str::from_utf8(&bytes)
                .map_err(|e| DmdError::Format(format!("CSV is not UTF-8: {e}")))?;
            decode_csv(text)
        }
    }
}

pub fn store_matrix(a: MatRef<'_, c64>, path: &Path, format: MatrixFormat) -> Result<()> {
    let bytes = match format {
        MatrixFormat::Dmm1 => encode_dmm1(a),
        MatrixFormat::Csv => encode_csv(a)?.into_bytes(),
    };
    std::fs::write(path, bytes).map_err(io_err(path))
}

/// Interprets a matrix as a vector of positive real weights.
pub fn weights_from_matrix(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    if a.nrows() != 1 && a.ncols() != 1 {
        return Err(DmdError::Shape(format!(
            "weight vector must be 1xn or nx1, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let vals: Vec<c64> = if a.ncols() == 1 {
        linalg::column(a, 0)
    } else {
        (0..a.ncols()).map(|j| a[(0, j)]).collect()
    };
    vals.iter()
        .enumerate()
        .map(|(i, z)| {
            if z.im != 0.0 || !(z.re > 0.0) {
                Err(DmdError::InvalidWeight(format!("weight {i} is {z}, must be positive real")))
            } else {
                Ok(z.re)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_round_trip_is_bit_exact() {
        let a = Mat::from_fn(3, 2, |i, j| c64::new((i * 2 + j) as f64, 0.0));
        let bytes = encode_dmm1(a.as_ref());
        assert_eq!(bytes[24], 0);
        let b = decode_dmm1(&bytes).unwrap();
        assert_eq!(encode_dmm1(b.as_ref()), bytes);
        for j in 0..2 {
            for i in 0..3 {
                assert_eq!(a[(i, j)].re.to_bits(), b[(i, j)].re.to_bits());
            }
        }
    }

    #[test]
    fn complex_and_negative_zero_round_trip() {
        let a = Mat::from_fn(2, 2, |i, j| c64::new(0.1 * i as f64, if j == 1 { -0.0 } else { 1.5 }));
        let bytes = encode_dmm1(a.as_ref());
        assert_eq!(bytes[24], 1);
        let b = decode_dmm1(&bytes).unwrap();
        assert_eq!(encode_dmm1(b.as_ref()), bytes);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let mut bytes = Vec::from(&MAGIC[..]);
        bytes.extend_from_slice(&2u64.to_le_bytes());
        bytes.extend_from_slice(&2u64.to_le_bytes());
        bytes.push(0);
        for v in [1.0f64, 2.0, 3.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let err = decode_dmm1(&bytes).unwrap_err();
        assert!(matches!(err, DmdError::Format(ref s) if s.contains("truncated")));
    }

    #[test]
    fn absurd_header_does_not_allocate() {
        let mut bytes = Vec::from(&MAGIC[..]);
        bytes.extend_from_slice(&u64::MAX.to_le_bytes());
        bytes.extend_from_slice(&u64::MAX.to_le_bytes());
        bytes.push(1);
        assert!(decode_dmm1(&bytes).is_err());
    }

    #[test]
    fn csv_ragged_rows() {
        assert!(matches!(decode_csv("1,2\n3\n"), Err(DmdError::Shape(_))));
        assert!(matches!(decode_csv("1,nan\n"), Err(DmdError::Data(_))));
        assert!(matches!(decode_csv("1,x\n"), Err(DmdError::Format(_))));
    }

    #[test]
    fn csv_round_trip() {
        let a = Mat::from_fn(3, 2, |i, j| c64::new(1.0 / (1.0 + i as f64 + 7.0 * j as f64), 0.0));
        let b = decode_csv(&encode_csv(a.as_ref()).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let a = Mat::from_fn(4, 3, |i, j| c64::new(i as f64, j as f64));
        let p = dir.path().join("a.dmm");
        store_matrix(a.as_ref(), &p, MatrixFormat::from_path(&p)).unwrap();
        assert_eq!(load_matrix(&p, MatrixFormat::Dmm1).unwrap(), a);
        let missing = dir.path().join("nope.dmm");
        assert!(matches!(load_matrix(&missing, MatrixFormat::Dmm1), Err(DmdError::Io { .. })));
    }

    #[test]
    fn weights_must_be_positive() {
        let w = Mat::from_fn(3, 1, |i, _| c64::new(i as f64 + 1.0, 0.0));
        assert_eq!(weights_from_matrix(w.as_ref()).unwrap(), vec![1.0, 2.0, 3.0]);
        let bad = Mat::from_fn(1, 2, |_, j| c64::new(j as f64, 0.0));
        assert!(matches!(weights_from_matrix(bad.as_ref()), Err(DmdError::InvalidWeight(_))));
    }
}

//! Matrix Market and CSV readers/writers.
//!
//! Matrix Market files use 1-based indices on disk; everything in memory is 0-based. Only the
//! stored data of a view is written: centering and scaling are run-time options, not file
//! content. Floats are rendered like C's `%.17g` so files round-trip exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{DenseMat, SparseView};

const MM_HEADER: &str = "%%MatrixMarket matrix coordinate real general";

/// Formats `x` the way C's `printf("%.17g", x)` does.
pub fn fmt_g17(x: f64) -> String {
    fmt_g(x, 17)
}

fn fmt_g(x: f64, precision: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let p = precision.max(1);
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn matrix_market_string(x: &SparseView) -> String {
    let mut out = String::with_capacity(32 + x.nnz() * 32);
    out.push_str(MM_HEADER);
    out.push('\n');
    let _ = writeln!(out, "{} {} {}", x.rows(), x.cols(), x.nnz());
    for (r, c, v) in x.triplets() {
        let _ = writeln!(out, "{} {} {}", r + 1, c + 1, fmt_g17(v));
    }
    out
}

pub fn parse_matrix_market(text: &str, origin: &Path) -> Result<SparseView> {
    let perr = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
    let fields: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if fields.len() != 5
        || fields[0] != "%%matrixmarket"
        || fields[1] != "matrix"
        || fields[2] != "coordinate"
        || fields[3] != "real"
        || fields[4] != "general"
    {
        return Err(perr(1, format!("unsupported header: {header:?}")));
    }

    let mut dims: Option<(usize, usize, usize)> = None;
    let mut trip = Vec::new();
    for (no, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let lineno = no + 1;
        let tok: Vec<&str> = line.split_whitespace().collect();
        match dims {
            None => {
                if tok.len() != 3 {
                    return Err(perr(lineno, "expected `rows cols nnz`".into()));
                }
                let p = |s: &str| s.parse::<usize>().map_err(|e| perr(lineno, e.to_string()));
                dims = Some((p(tok[0])?, p(tok[1])?, p(tok[2])?));
            }
            Some((rows, cols, _)) => {
                if tok.len() != 3 {
                    return Err(perr(lineno, "expected `row col value`".into()));
                }
                let r: usize = tok[0]
                    .parse()
                    .map_err(|_| perr(lineno, "bad row index".into()))?;
                let c: usize = tok[1]
                    .parse()
                    .map_err(|_| perr(lineno, "bad column index".into()))?;
                let v: f64 = tok[2]
                    .parse()
                    .map_err(|_| perr(lineno, "bad value".into()))?;
                if r == 0 || c == 0 || r > rows || c > cols {
                    return Err(perr(lineno, format!("index ({r}, {c}) out of range")));
                }
                trip.push((r - 1, c - 1, v));
            }
        }
    }
    let (rows, cols, nnz) = dims.ok_or_else(|| perr(1, "missing size line".into()))?;
    if trip.len() != nnz {
        return Err(perr(
            0,
            format!("declared {nnz} entries, found {}", trip.len()),
        ));
    }
    SparseView::from_triplets(rows, cols, trip).map_err(|e| perr(0, e.to_string()))
}

pub fn write_matrix_market(path: impl AsRef<Path>, x: &SparseView) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, matrix_market_string(x)).map_err(|e| Error::io(path, e))
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SparseView> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_market(&text, path)
}

pub fn dense_csv_string(m: &DenseMat) -> String {
    let mut out = String::new();
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(|&v| fmt_g17(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_dense_csv(text: &str, origin: &Path) -> Result<DenseMat> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                path: origin.to_path_buf(),
                line: no + 1,
                msg: e.to_string(),
            })?;
        rows.push(row);
    }
    DenseMat::from_rows(&rows).map_err(|e| Error::Parse {
        path: origin.to_path_buf(),
        line: 0,
        msg: e.to_string(),
    })
}

pub fn write_dense_csv(path: impl AsRef<Path>, m: &DenseMat) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, dense_csv_string(m)).map_err(|e| Error::io(path, e))
}

pub fn read_dense_csv(path: impl AsRef<Path>) -> Result<DenseMat> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dense_csv(&text, path)
}

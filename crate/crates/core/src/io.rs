//! Plot-ready file formats. Every float is written with 17 significant digits
//! so that doubles survive a text round trip bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64};
use crate::observables::{Histogram, SpectrumRecord};
use crate::spectral::k_grid;

/// `{:.16e}`: one digit before the point and sixteen after.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        // keeps the CSV parseable by common readers
        format!("{x}")
    }
}

fn raw_number(x: f64) -> Result<Box<RawValue>> {
    if !x.is_finite() {
        return Err(Error::Parse(format!("cannot encode {x} as a JSON number")));
    }
    Ok(RawValue::from_string(fmt_f64(x))?)
}

#[derive(Serialize)]
struct MatrixJsonOut {
    rows: usize,
    cols: usize,
    data: Vec<Box<RawValue>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixJsonIn {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// `{rows, cols, data: [re, im, re, im, ...]}` in row-major order.
pub fn matrix_to_json(m: &ComplexMatrix) -> Result<String> {
    let mut data = Vec::with_capacity(2 * m.rows() * m.cols());
    for z in m.as_slice() {
        data.push(raw_number(z.re)?);
        data.push(raw_number(z.im)?);
    }
    Ok(serde_json::to_string(&MatrixJsonOut {
        rows: m.rows(),
        cols: m.cols(),
        data,
    })?)
}

pub fn matrix_from_json(s: &str) -> Result<ComplexMatrix> {
    let parsed: MatrixJsonIn = serde_json::from_str(s)?;
    if parsed.data.len() != 2 * parsed.rows * parsed.cols {
        return Err(Error::Parse(format!(
            "{} numbers for a {}x{} complex matrix",
            parsed.data.len(),
            parsed.rows,
            parsed.cols
        )));
    }
    let data = parsed.data.chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect();
    ComplexMatrix::from_row_major(parsed.rows, parsed.cols, data)
}

fn real_matrix_csv(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> String {
    let mut out = String::new();
    for i in 0..rows {
        for j in 0..cols {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&fmt_f64(f(i, j)));
        }
        out.push('\n');
    }
    out
}

/// Real and imaginary parts as two headerless row-major CSV documents.
pub fn matrix_to_csv_pair(m: &ComplexMatrix) -> (String, String) {
    (
        real_matrix_csv(m.rows(), m.cols(), |i, j| m[(i, j)].re),
        real_matrix_csv(m.rows(), m.cols(), |i, j| m[(i, j)].im),
    )
}

fn parse_real_csv(s: &str) -> Result<Vec<Vec<f64>>> {
    s.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
                .collect()
        })
        .collect()
}

pub fn matrix_from_csv_pair(re: &str, im: &str) -> Result<ComplexMatrix> {
    let re = parse_real_csv(re)?;
    let im = parse_real_csv(im)?;
    let rows = re.len();
    let cols = re.first().map_or(0, Vec::len);
    if im.len() != rows || re.iter().chain(&im).any(|r| r.len() != cols) {
        return Err(Error::Parse("real and imaginary CSV shapes disagree".into()));
    }
    ComplexMatrix::from_row_major(
        rows,
        cols,
        re.iter()
            .zip(&im)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| C64::new(*x, *y)))
            .collect(),
    )
}

/// |Ψ_nm|² as a headerless N x N CSV.
pub fn probability_csv(psi: &ComplexMatrix) -> String {
    real_matrix_csv(psi.rows(), psi.cols(), |i, j| psi[(i, j)].norm_sqr())
}

/// |ψ(k_x, k_y)|² with a header row of k values; row j is k_x = k_j.
pub fn fourier_csv(map: &ComplexMatrix) -> String {
    let ks = k_grid(map.cols());
    let mut out = String::from("kx\\ky");
    for k in &ks {
        out.push(',');
        out.push_str(&fmt_f64(*k));
    }
    out.push('\n');
    for (j, kx) in k_grid(map.rows()).iter().enumerate() {
        out.push_str(&fmt_f64(*kx));
        for l in 0..map.cols() {
            out.push(',');
            out.push_str(&fmt_f64(map[(j, l)].norm_sqr()));
        }
        out.push('\n');
    }
    out
}

pub const SPECTRUM_HEADER: &str = "index,re_eps,im_eps,rho,parity,parity_score,edge_mass,label";

pub fn spectrum_csv(records: &[SpectrumRecord]) -> String {
    let mut out = String::from(SPECTRUM_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.index,
            fmt_f64(r.energy.re),
            fmt_f64(r.energy.im),
            fmt_f64(r.rho),
            r.parity,
            fmt_f64(r.parity_score),
            fmt_f64(r.edge_mass),
            r.label
        );
    }
    out
}

pub fn histogram_csv(h: &Histogram) -> String {
    let mut out = String::from("bin_lo,bin_hi,count\n");
    for (k, c) in h.counts.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", fmt_f64(h.edges[k]), fmt_f64(h.edges[k + 1]), c);
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `contents` to `dir/name` and returns its digest.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<String> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(sha256_hex(contents.as_bytes()))
}

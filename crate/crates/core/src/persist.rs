//! Writing fitted models and tables to disk.
//!
//! The effects matrix is stored in factored form: `params_theta_U.csv` and
//! `params_theta_V.csv` hold the `n x k` singular vectors, one row per node,
//! and `params_theta_sigma.csv` the `k` numerically nonzero singular values, so
//! `Theta = U diag(sigma) V^T`. `params_beta.csv` lists the coefficients.
//! Numbers are written in shortest round-trip form.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};
use crate::glm::ModelParams;
use crate::scalar::Scalar;
use crate::spectral::{svd, SvdFactors};

pub const BETA_FILE: &str = "params_beta.csv";
pub const THETA_U_FILE: &str = "params_theta_U.csv";
pub const THETA_V_FILE: &str = "params_theta_V.csv";
pub const THETA_SIGMA_FILE: &str = "params_theta_sigma.csv";
pub const TRACE_FILE: &str = "trace.csv";

/// Write via a temporary sibling file and rename into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp: PathBuf = path.with_file_name(tmp_name);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn matrix_to_csv<F: Scalar>(m: &Array2<F>) -> String {
    let mut out = String::new();
    for row in m.axis_iter(Axis(0)) {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            first = false;
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

fn parse_rows<F: Scalar>(path: &Path) -> Result<Vec<Vec<F>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map(F::of)
                    .map_err(|_| Error::parse(path, k + 1, format!("bad number `{tok}`")))
            })
            .collect::<Result<Vec<F>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn read_matrix<F: Scalar>(path: &Path, rows: usize, cols: usize) -> Result<Array2<F>> {
    let parsed = parse_rows::<F>(path)?;
    if parsed.len() != rows {
        return Err(Error::parse(path, parsed.len(), format!("expected {rows} rows, found {}", parsed.len())));
    }
    let mut out = Array2::zeros((rows, cols));
    for (i, row) in parsed.into_iter().enumerate() {
        if row.len() != cols {
            return Err(Error::parse(path, i + 1, format!("expected {cols} columns, found {}", row.len())));
        }
        for (j, v) in row.into_iter().enumerate() {
            out[[i, j]] = v;
        }
    }
    Ok(out)
}

fn read_vector<F: Scalar>(path: &Path) -> Result<Array1<F>> {
    let parsed = parse_rows::<F>(path)?;
    parsed
        .into_iter()
        .enumerate()
        .map(|(i, row)| match row.as_slice() {
            [v] => Ok(*v),
            _ => Err(Error::parse(path, i + 1, "expected one value per line")),
        })
        .collect()
}

/// Factors of `theta` with singular values above `n * eps * sigma_1`.
pub fn factor_theta<F: Scalar>(theta: &Array2<F>) -> Result<SvdFactors<F>> {
    let f = svd(theta.view())?;
    let n = theta.nrows().max(theta.ncols());
    let k = f.rank(F::of(n as f64) * F::epsilon());
    Ok(SvdFactors {
        u: f.u.slice(ndarray::s![.., ..k]).to_owned(),
        sigma: f.sigma.slice(ndarray::s![..k]).to_owned(),
        v: f.v.slice(ndarray::s![.., ..k]).to_owned(),
    })
}

/// Write `params` into `dir` (created if missing). Returns the written paths.
pub fn save_params<F: Scalar>(dir: &Path, params: &ModelParams<F>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let factors = factor_theta(&params.theta)?;
    let vector = |v: &Array1<F>| v.iter().fold(String::new(), |mut s, x| {
        let _ = writeln!(s, "{x}");
        s
    });
    let files = [
        (BETA_FILE, vector(&params.beta)),
        (THETA_U_FILE, matrix_to_csv(&factors.u)),
        (THETA_V_FILE, matrix_to_csv(&factors.v)),
        (THETA_SIGMA_FILE, vector(&factors.sigma)),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        write_atomic(&path, body.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

/// Read parameters written by [`save_params`] for an `n`-node network.
pub fn load_params<F: Scalar>(dir: &Path, n: usize) -> Result<ModelParams<F>> {
    let beta = read_vector::<F>(&dir.join(BETA_FILE))?;
    let sigma = read_vector::<F>(&dir.join(THETA_SIGMA_FILE))?;
    let k = sigma.len();
    let theta = if k == 0 {
        Array2::zeros((n, n))
    } else {
        let u = read_matrix::<F>(&dir.join(THETA_U_FILE), n, k)?;
        let v = read_matrix::<F>(&dir.join(THETA_V_FILE), n, k)?;
        SvdFactors { u, sigma, v }.reconstruct()
    };
    ModelParams::new(theta, beta)
}

pub fn trace_to_csv<F: Scalar>(trace: &[F]) -> String {
    let mut out = String::from("iteration,loglik\n");
    for (t, v) in trace.iter().enumerate() {
        let _ = writeln!(out, "{},{v}", t + 1);
    }
    out
}

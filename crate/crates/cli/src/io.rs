//! Input files: form pairs, matrices and test-function descriptors.
//!
//! Scalars are JSON numbers or strings of the form `[-][c*]x`, where `c` is a
//! rational and `x` is a rational, `sqrt(r)` or `cbrt(r)` for rational `r`.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use oppenheim_core::forms::{FormPair, LinearForm, QuadraticForm};
use oppenheim_core::rational::{parse_rational, to_f64};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Text(String),
}

impl Scalar {
    pub fn value(&self) -> Result<f64, CliError> {
        match self {
            Scalar::Number(x) => Ok(*x),
            Scalar::Text(s) => parse_scalar(s),
        }
    }
}

fn parse_factor(s: &str) -> Option<f64> {
    let s = s.trim();
    let radical = |prefix: &str| s.strip_prefix(prefix).and_then(|r| r.strip_suffix(')'));
    if let Some(arg) = radical("sqrt(") {
        let r = to_f64(&parse_rational(arg)?);
        return (r >= 0.0).then(|| r.sqrt());
    }
    if let Some(arg) = radical("cbrt(") {
        return Some(to_f64(&parse_rational(arg)?).cbrt());
    }
    parse_rational(s).map(|q| to_f64(&q))
}

pub fn parse_scalar(s: &str) -> Result<f64, CliError> {
    let t = s.trim();
    let (sign, body) = match t.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, t.strip_prefix('+').unwrap_or(t)),
    };
    let mut value = sign;
    for factor in body.split('*') {
        value *= parse_factor(factor).ok_or_else(|| CliError::Input(format!("cannot parse scalar {s:?}")))?;
    }
    Ok(value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFile {
    pub n: usize,
    pub gram: Vec<Vec<Scalar>>,
    pub linear: Vec<Scalar>,
}

impl PairFile {
    pub fn to_pair(&self) -> Result<FormPair, CliError> {
        let n = self.n;
        if self.gram.len() != n || self.gram.iter().any(|r| r.len() != n) || self.linear.len() != n {
            return Err(CliError::Input(format!("pair file entries do not match n = {n}")));
        }
        let mut g = DMatrix::zeros(n, n);
        for (i, row) in self.gram.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                g[(i, j)] = x.value()?;
            }
        }
        let asym = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (g[(i, j)] - g[(j, i)]).abs()).fold(0.0, f64::max);
        if asym > 1e-12 {
            return Err(CliError::Input(format!("gram matrix is not symmetric (max asymmetry {asym:e})")));
        }
        let l = self.linear.iter().map(Scalar::value).collect::<Result<Vec<_>, _>>()?;
        Ok(FormPair::new(QuadraticForm::new(g)?, LinearForm::new(l)?)?)
    }
}

/// A square matrix given as rows, or as `{"matrix": rows}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixFile {
    Rows(Vec<Vec<Scalar>>),
    Wrapped { matrix: Vec<Vec<Scalar>> },
}

impl MatrixFile {
    pub fn to_matrix(&self) -> Result<DMatrix<f64>, CliError> {
        let rows = match self {
            MatrixFile::Rows(r) | MatrixFile::Wrapped { matrix: r } => r,
        };
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(CliError::Input("matrix must be square and nonempty".into()));
        }
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in rows.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                m[(i, j)] = x.value()?;
            }
        }
        Ok(m)
    }
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn read_pair(path: &Path) -> Result<FormPair, CliError> {
    read_json::<PairFile>(path)?.to_pair()
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>, CliError> {
    read_json::<MatrixFile>(path)?.to_matrix()
}

pub fn write_bytes(path: &PathBuf, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io { path: path.clone(), message: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalars() {
        assert_eq!(parse_scalar("3/4").unwrap(), 0.75);
        assert_eq!(parse_scalar("-2").unwrap(), -2.0);
        assert_eq!(parse_scalar("sqrt(2)").unwrap(), 2f64.sqrt());
        assert_eq!(parse_scalar("-1/2*cbrt(2)").unwrap(), -0.5 * 2f64.cbrt());
        assert_eq!(parse_scalar("0.25").unwrap(), 0.25);
        assert!(parse_scalar("sqrt(-1)").is_err());
        assert!(parse_scalar("pi").is_err());
    }

    #[test]
    fn pair_file_round_trip() {
        let text = r#"{"n": 2, "gram": [[1, "1/2"], ["1/2", -1]], "linear": [0, "sqrt(2)"]}"#;
        let pf: PairFile = serde_json::from_str(text).unwrap();
        let pair = pf.to_pair().unwrap();
        assert_eq!(pair.q.gram()[(0, 1)], 0.5);
        assert_eq!(pair.l.coeffs()[1], 2f64.sqrt());
        let bad = r#"{"n": 2, "gram": [[1, 1], [0, -1]], "linear": [0, 1]}"#;
        assert!(serde_json::from_str::<PairFile>(bad).unwrap().to_pair().is_err());
    }

    #[test]
    fn matrix_forms() {
        let a: MatrixFile = serde_json::from_str("[[1, 0], [0, 1]]").unwrap();
        let b: MatrixFile = serde_json::from_str(r#"{"matrix": [[1, 0], [0, 1]]}"#).unwrap();
        assert_eq!(a.to_matrix().unwrap(), b.to_matrix().unwrap());
    }
}

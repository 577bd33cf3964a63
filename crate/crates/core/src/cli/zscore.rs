//! Z-score matrix ingestion and robust whitening.

use std::path::Path;

use nalgebra::DMatrix;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{BonusError, Result};
use crate::linalg::inv_sqrt_sym;
use crate::points::Points;

pub const DEFAULT_WINSOR: f64 = 3.0;
const MAX_CONDITION: f64 = 1e12;

/// Rows are hypotheses, columns are per-phenotype z-scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ZScoreMatrix {
    pub names: Vec<String>,
    pub data: Points,
}

impl ZScoreMatrix {
    pub fn rows(&self) -> usize {
        self.data.len()
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }
}

/// Reads a CSV with a header row. Line numbers in errors count the header as
/// line 1.
pub fn ingest_zscores(path: &Path) -> Result<ZScoreMatrix> {
    let file = std::fs::File::open(path).map_err(|e| BonusError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(file);
    let csv_err = |row: usize, message: String| BonusError::Csv {
        path: path.to_path_buf(),
        row,
        message,
    };
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(1, e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let dim = names.len();
    if dim == 0 || names.iter().all(String::is_empty) {
        return Err(csv_err(1, "missing header row".into()));
    }
    let mut data = Points::new(dim);
    let mut row = vec![0.0; dim];
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| csv_err(line, e.to_string()))?;
        if rec.len() != dim {
            return Err(csv_err(line, format!("has {} fields, expected {dim}", rec.len())));
        }
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| csv_err(line, format!("column {:?}: {cell:?} is not a number", names[j])))?;
            if !v.is_finite() {
                return Err(csv_err(line, format!("column {:?}: non-finite value {cell}", names[j])));
            }
            row[j] = v;
        }
        data.push(&row)?;
    }
    Ok(ZScoreMatrix { names, data })
}

/// `E[clamp(Z, −c, c)²]` for `Z ~ N(0, 1)`.
pub fn winsorized_variance(c: f64) -> f64 {
    let n = Normal::standard();
    let tail = n.sf(c);
    1.0 - 2.0 * tail - 2.0 * c * n.pdf(c) + 2.0 * c * c * tail
}

/// Robust second moment: entries winsorized at `±c`, uncentered, divided by
/// the Gaussian consistency factor so the identity maps to itself.
pub fn robust_covariance(data: &Points, c: f64) -> DMatrix<f64> {
    let d = data.dim();
    let mut m = DMatrix::zeros(d, d);
    let mut w = vec![0.0; d];
    for x in data.rows() {
        for (wi, xi) in w.iter_mut().zip(x) {
            *wi = xi.clamp(-c, c);
        }
        for a in 0..d {
            for b in a..d {
                m[(a, b)] += w[a] * w[b];
            }
        }
    }
    let scale = 1.0 / (data.len() as f64 * winsorized_variance(c));
    for a in 0..d {
        for b in a..d {
            let v = m[(a, b)] * scale;
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    m
}

/// `X · Σ̂^{−1/2}` with `Σ̂` the winsorized covariance.
pub fn whiten(z: &ZScoreMatrix, winsor_c: f64) -> Result<ZScoreMatrix> {
    if !(winsor_c > 0.0 && winsor_c.is_finite()) {
        return Err(BonusError::invalid("winsor_c", format!("must be positive, got {winsor_c}")));
    }
    let d = z.dim();
    if z.rows() < d + 1 {
        return Err(BonusError::TooFewObservations {
            needed: d + 1,
            got: z.rows(),
        });
    }
    let sigma = robust_covariance(&z.data, winsor_c);
    let w = inv_sqrt_sym(&sigma, MAX_CONDITION)?;
    let mut out = Points::with_capacity(d, z.rows());
    let mut y = vec![0.0; d];
    for x in z.data.rows() {
        for (j, yj) in y.iter_mut().enumerate() {
            *yj = (0..d).map(|i| x[i] * w[(i, j)]).sum();
        }
        out.push(&y)?;
    }
    Ok(ZScoreMatrix {
        names: z.names.clone(),
        data: out,
    })
}

/// Sample correlation matrix (centered), row-major.
pub fn sample_correlation(data: &Points) -> Vec<f64> {
    let d = data.dim();
    let n = data.len() as f64;
    let mut mean = vec![0.0; d];
    for x in data.rows() {
        mean.iter_mut().zip(x).for_each(|(m, v)| *m += v / n);
    }
    let mut cov = vec![0.0; d * d];
    for x in data.rows() {
        for a in 0..d {
            for b in 0..d {
                cov[a * d + b] += (x[a] - mean[a]) * (x[b] - mean[b]);
            }
        }
    }
    let sd: Vec<f64> = (0..d).map(|a| cov[a * d + a].sqrt()).collect();
    (0..d * d).map(|k| cov[k] / (sd[k / d] * sd[k % d])).collect()
}

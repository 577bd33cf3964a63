//! Row-major storage for a set of equal-length observation vectors.

use crate::error::{BonusError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    dim: usize,
    data: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize) -> Self {
        Points {
            dim,
            data: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, rows: usize) -> Self {
        Points {
            dim,
            data: Vec::with_capacity(dim * rows),
        }
    }

    /// Wraps a flat row-major buffer; `data.len()` must be a multiple of `dim`.
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(BonusError::invalid("dim", "must be at least 1"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(BonusError::DimensionMismatch {
                expected: dim,
                got: data.len() % dim,
            });
        }
        Ok(Points { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut out = Points::with_capacity(dim, rows.len());
        for row in rows {
            out.push(row.as_ref())?;
        }
        Ok(out)
    }

    pub fn push(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(BonusError::DimensionMismatch {
                expected: self.dim,
                got: row.len(),
            });
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // chunks_exact panics on zero; an empty dim means no rows anyway
        self.data.chunks_exact(self.dim.max(1))
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Uncentered second moment `(1/n) Σ x x'` as a row-major `dim × dim` buffer.
    pub fn second_moment(&self) -> Vec<f64> {
        let d = self.dim;
        let mut acc = vec![0.0; d * d];
        for row in self.rows() {
            for a in 0..d {
                let ra = row[a];
                if ra == 0.0 {
                    continue;
                }
                let line = &mut acc[a * d..(a + 1) * d];
                for b in a..d {
                    line[b] += ra * row[b];
                }
            }
        }
        let n = self.len().max(1) as f64;
        for a in 0..d {
            for b in a..d {
                let v = acc[a * d + b] / n;
                acc[a * d + b] = v;
                acc[b * d + a] = v;
            }
        }
        acc
    }

    pub fn append(&mut self, other: &Points) -> Result<()> {
        if other.dim != self.dim {
            return Err(BonusError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        self.data.extend_from_slice(&other.data);
        Ok(())
    }
}

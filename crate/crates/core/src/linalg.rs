//! Small dense helpers on top of nalgebra for the d×d matrices used here.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{BonusError, Result};

/// Eigenpairs of a symmetric matrix, sorted by eigenvalue descending.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: Vec<f64>,
    /// `vectors[i]` is the unit eigenvector for `values[i]`.
    pub vectors: Vec<Vec<f64>>,
}

pub fn sym_from_row_major(d: usize, flat: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::from_row_slice(d, d, flat);
    symmetrize(&mut m);
    m
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let d = m.nrows();
    for i in 0..d {
        for j in (i + 1)..d {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn sorted_eigen(m: &DMatrix<f64>) -> Result<SortedEigen> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(BonusError::Numerical(
            "non-finite entry in symmetric matrix".into(),
        ));
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let col = eig.eigenvectors.column(i);
            canonical_sign(col.iter().copied().collect())
        })
        .collect();
    Ok(SortedEigen { values, vectors })
}

/// Flip a vector so its largest-magnitude entry is positive; makes eigenvector
/// output independent of the solver's sign convention.
fn canonical_sign(mut v: Vec<f64>) -> Vec<f64> {
    let pivot = v
        .iter()
        .copied()
        .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

/// Symmetric inverse square root `Σ^{-1/2}`; fails when the condition number
/// exceeds `max_condition` or the matrix is not positive definite.
pub fn inv_sqrt_sym(m: &DMatrix<f64>, max_condition: f64) -> Result<DMatrix<f64>> {
    let eig = sorted_eigen(m)?;
    let max = eig.values[0];
    let min = *eig.values.last().expect("non-empty matrix");
    if min <= 0.0 || max / min > max_condition {
        return Err(BonusError::Numerical(format!(
            "covariance is singular or ill-conditioned (eigenvalues in [{min:e}, {max:e}])"
        )));
    }
    let d = m.nrows();
    let mut out = DMatrix::zeros(d, d);
    for (val, vec) in eig.values.iter().zip(&eig.vectors) {
        let u = DVector::from_column_slice(vec);
        out += (&u * u.transpose()) / val.sqrt();
    }
    Ok(out)
}

/// Gram–Schmidt (twice, for stability) on the given columns. Columns that
/// collapse numerically are dropped.
pub fn orthonormalize(cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for col in cols {
        let mut v = col.clone();
        for _ in 0..2 {
            for b in &basis {
                let proj = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-12 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    basis
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

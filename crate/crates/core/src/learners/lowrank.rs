//! Low-rank Gaussian learner: estimate the pooled covariance, keep its top
//! `k` eigenpairs with eigenvalues clipped at `max(λ − 1, 0)`, and score by
//! `x'(I − Σ̂ₖ⁻¹)x`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::Learner;
use crate::error::{BonusError, Result};
use crate::linalg::{orthonormalize, sorted_eigen, sym_from_row_major};
use crate::pool::MaskView;
use crate::rng::seeded;
use crate::statistic::{shrinkage_weights, Statistic};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LowRankMethod {
    /// One eigendecomposition of the pooled second moment.
    Eigen,
    /// EM-PCA subspace iteration up to `max_iters` or until the subspace
    /// moves by less than `tol`.
    Em { max_iters: usize, tol: f64 },
}

/// Clipped top-`k` structure `Σ̂ₖ = I + Σ cᵢ uᵢuᵢ'`.
#[derive(Debug, Clone)]
pub struct LowRankFit {
    pub directions: Vec<Vec<f64>>,
    /// `cᵢ = max(λᵢ − 1, 0)`.
    pub excess: Vec<f64>,
    /// Raw eigenvalues of the second moment along `directions`.
    pub eigenvalues: Vec<f64>,
    pub iterations: usize,
}

impl LowRankFit {
    /// Fits from a row-major `d × d` second-moment matrix.
    pub fn from_second_moment(
        dim: usize,
        moment: &[f64],
        k: usize,
        method: LowRankMethod,
    ) -> Result<Self> {
        if k == 0 || k > dim {
            return Err(BonusError::invalid(
                "k",
                format!("rank must lie in [1, {dim}], got {k}"),
            ));
        }
        let s = sym_from_row_major(dim, moment);
        let (eigenvalues, directions, iterations) = match method {
            LowRankMethod::Eigen => {
                let eig = sorted_eigen(&s)?;
                let vals = eig.values[..k].to_vec();
                let dirs = eig.vectors[..k].to_vec();
                (vals, dirs, 0)
            }
            LowRankMethod::Em { max_iters, tol } => em_pca(&s, k, max_iters, tol)?,
        };
        let excess = eigenvalues.iter().map(|l| (l - 1.0).max(0.0)).collect();
        Ok(LowRankFit {
            directions,
            excess,
            eigenvalues,
            iterations,
        })
    }

    pub fn statistic(&self, k: usize) -> Statistic {
        Statistic::low_rank_quadratic(
            format!("lowrank-k{k}"),
            self.directions.clone(),
            shrinkage_weights(&self.excess),
        )
    }
}

/// EM for PCA (Roweis) written on the second moment `S`:
/// `C ← S C (C'SC)⁻¹ (C'C)`, followed by a Rayleigh–Ritz step to recover
/// eigenpairs inside the converged subspace.
fn em_pca(
    s: &DMatrix<f64>,
    k: usize,
    max_iters: usize,
    tol: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, usize)> {
    let d = s.nrows();
    // fixed-seed start so the fit stays a pure function of the data
    let mut init_rng = seeded(0x5eed_e3a1);
    let start: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..d).map(|_| init_rng.sample(StandardNormal)).collect())
        .collect();
    let mut basis = orthonormalize(&start);
    let mut iterations = 0;
    for _ in 0..max_iters {
        let c = columns_to_matrix(&basis, d);
        let sc = s * &c;
        let ctsc = c.transpose() * &sc;
        let ctc = c.transpose() * &c;
        let inv = ctsc.try_inverse().ok_or_else(|| {
            BonusError::Numerical("EM-PCA: C'SC is singular".into())
        })?;
        let next = sc * inv * ctc;
        let cols: Vec<Vec<f64>> = (0..k).map(|j| next.column(j).iter().copied().collect()).collect();
        let next_basis = orthonormalize(&cols);
        if next_basis.len() < k {
            return Err(BonusError::Numerical("EM-PCA: subspace collapsed".into()));
        }
        iterations += 1;
        let moved = subspace_distance(&basis, &next_basis, d);
        basis = next_basis;
        if moved < tol {
            break;
        }
    }
    let q = columns_to_matrix(&basis, d);
    let small = q.transpose() * s * &q;
    let eig = sorted_eigen(&small)?;
    let directions = eig
        .vectors
        .iter()
        .map(|v| {
            let u = &q * DVector::from_column_slice(v);
            u.iter().copied().collect()
        })
        .collect();
    Ok((eig.values, directions, iterations))
}

fn columns_to_matrix(cols: &[Vec<f64>], d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, cols.len(), |i, j| cols[j][i])
}

/// Frobenius distance between the projectors onto two orthonormal bases,
/// scaled by `1/√k`.
fn subspace_distance(a: &[Vec<f64>], b: &[Vec<f64>], d: usize) -> f64 {
    let k = a.len() as f64;
    let pa = columns_to_matrix(a, d);
    let pb = columns_to_matrix(b, d);
    let diff = &pa * pa.transpose() - &pb * pb.transpose();
    diff.norm() / k.sqrt()
}

pub fn fit_lowrank_gaussian(view: &MaskView<'_>, k: usize, method: LowRankMethod) -> Result<Statistic> {
    let points = view.points();
    let d = points.dim();
    if k == 0 || k > d {
        return Err(BonusError::invalid(
            "k",
            format!("rank must lie in [1, {d}], got {k}"),
        ));
    }
    if points.len() < d + 1 {
        return Err(BonusError::TooFewObservations {
            needed: d + 1,
            got: points.len(),
        });
    }
    let moment = points.second_moment();
    Ok(LowRankFit::from_second_moment(d, &moment, k, method)?.statistic(k))
}

#[derive(Debug, Clone)]
pub struct LowRankLearner {
    pub k: usize,
    pub method: LowRankMethod,
}

impl LowRankLearner {
    pub fn eigen(k: usize) -> Self {
        LowRankLearner {
            k,
            method: LowRankMethod::Eigen,
        }
    }

    pub fn em(k: usize) -> Self {
        LowRankLearner {
            k,
            method: LowRankMethod::Em {
                max_iters: 200,
                tol: 1e-8,
            },
        }
    }
}

impl Learner for LowRankLearner {
    fn name(&self) -> String {
        match self.method {
            LowRankMethod::Eigen => format!("lowrank-k{}", self.k),
            LowRankMethod::Em { .. } => format!("empca-k{}", self.k),
        }
    }

    fn fit(&self, view: &MaskView<'_>) -> Result<Statistic> {
        fit_lowrank_gaussian(view, self.k, self.method)
    }
}

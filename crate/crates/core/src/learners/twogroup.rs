//! Maximum-likelihood fit of the two-group working model
//! `(1 − λ) N(0, I) + λ N(0, I + Ψ)` with `Ψ` PSD of rank ≤ k and
//! eigenvalues capped, by EM.
//!
//! The M-step is exact under the constraint: for a zero-mean Gaussian with
//! covariance `I + Ψ`, the constrained maximiser keeps the top eigenvectors
//! of the weighted second moment with eigenvalues `clamp(λᵢ − 1, 0, cap)`.
//! The log-likelihood therefore never decreases between iterations.

use std::f64::consts::PI;

use super::lowrank::{LowRankFit, LowRankMethod};
use super::Learner;
use crate::error::{BonusError, Result};
use crate::linalg::{dot, sorted_eigen, sym_from_row_major};
use crate::points::Points;
use crate::pool::MaskView;
use crate::statistic::{shrinkage_weights, Statistic};

const LAMBDA_MIN: f64 = 1e-6;
const LAMBDA_MAX: f64 = 1.0 - 1e-6;
const LAMBDA_INIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoGroupOptions {
    pub k: usize,
    pub em_iters: usize,
    /// Stop once the mean log-likelihood changes by less than this.
    pub tol: f64,
    pub eigen_cap: f64,
}

impl Default for TwoGroupOptions {
    fn default() -> Self {
        TwoGroupOptions {
            k: 1,
            em_iters: 200,
            tol: 1e-9,
            eigen_cap: 100.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TwoGroupFit {
    pub lambda: f64,
    /// Nonzero spectrum of `Ψ̂` as (eigenvalue, unit direction) pairs.
    pub psi_eigenvalues: Vec<f64>,
    pub psi_directions: Vec<Vec<f64>>,
    /// Total log-likelihood of the pool at the returned parameters.
    pub loglik: f64,
    /// Log-likelihood after initialisation and after each iteration.
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
}

impl TwoGroupFit {
    pub fn psi_matrix(&self) -> Vec<f64> {
        let d = self.psi_directions.first().map_or(0, Vec::len);
        let mut m = vec![0.0; d * d];
        for (val, u) in self.psi_eigenvalues.iter().zip(&self.psi_directions) {
            for a in 0..d {
                for b in 0..d {
                    m[a * d + b] += val * u[a] * u[b];
                }
            }
        }
        m
    }

    pub fn psi_frobenius(&self) -> f64 {
        self.psi_eigenvalues.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `x'(I − (Ψ̂ + I)⁻¹)x`.
    pub fn statistic(&self) -> Statistic {
        Statistic::low_rank_quadratic(
            format!("twogroup-k{}", self.psi_eigenvalues.len()),
            self.psi_directions.clone(),
            shrinkage_weights(&self.psi_eigenvalues),
        )
        .with_details(format!("lambda={:.6}", self.lambda))
    }
}

struct Params {
    lambda: f64,
    psi: Vec<f64>,
    dirs: Vec<Vec<f64>>,
}

impl Params {
    /// `log f1(x) − log f0(x)`.
    fn log_ratio(&self, x: &[f64], half_logdet: f64, weights: &[f64]) -> f64 {
        let q: f64 = self
            .dirs
            .iter()
            .zip(weights)
            .map(|(u, w)| {
                let p = dot(u, x);
                w * p * p
            })
            .sum();
        0.5 * q - half_logdet
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// One E-step: responsibilities and the total log-likelihood.
fn e_step(points: &Points, params: &Params) -> (Vec<f64>, f64) {
    let d = points.dim() as f64;
    let half_logdet: f64 = 0.5 * params.psi.iter().map(|p| (1.0 + p).ln()).sum::<f64>();
    let weights = shrinkage_weights(&params.psi);
    let (ln_null, ln_alt) = ((1.0 - params.lambda).ln(), params.lambda.ln());
    let norm_const = -0.5 * d * (2.0 * PI).ln();
    let mut resp = Vec::with_capacity(points.len());
    let mut loglik = 0.0;
    for x in points.rows() {
        let lr = params.log_ratio(x, half_logdet, &weights);
        let a = ln_null;
        let b = ln_alt + lr;
        let mix = log_add_exp(a, b);
        resp.push((b - mix).exp());
        loglik += norm_const - 0.5 * dot(x, x) + mix;
    }
    (resp, loglik)
}

fn m_step(points: &Points, resp: &[f64], prev: &Params, k: usize, cap: f64) -> Result<Params> {
    let d = points.dim();
    let total: f64 = resp.iter().sum();
    let lambda = (total / points.len() as f64).clamp(LAMBDA_MIN, LAMBDA_MAX);
    if total <= f64::MIN_POSITIVE {
        return Ok(Params {
            lambda,
            psi: prev.psi.clone(),
            dirs: prev.dirs.clone(),
        });
    }
    let mut acc = vec![0.0; d * d];
    for (x, &r) in points.rows().zip(resp) {
        if r == 0.0 {
            continue;
        }
        for a in 0..d {
            let rxa = r * x[a];
            for b in a..d {
                acc[a * d + b] += rxa * x[b];
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = acc[a * d + b] / total;
            acc[a * d + b] = v;
            acc[b * d + a] = v;
        }
    }
    let eig = sorted_eigen(&sym_from_row_major(d, &acc))?;
    let (psi, dirs) = clip_top(eig.values, eig.vectors, k, cap);
    Ok(Params { lambda, psi, dirs })
}

fn clip_top(values: Vec<f64>, vectors: Vec<Vec<f64>>, k: usize, cap: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    values
        .into_iter()
        .zip(vectors)
        .take(k)
        .map(|(v, u)| ((v - 1.0).clamp(0.0, cap), u))
        .unzip()
}

/// EM for the two-group MLE. `em_iters = 0` returns the initialiser:
/// `λ = 0.1` and `Ψ` from the clipped top-`k` eigenstructure of the pooled
/// second moment.
pub fn fit_twogroup_mle(view: &MaskView<'_>, opts: TwoGroupOptions) -> Result<TwoGroupFit> {
    let points = view.points();
    let d = points.dim();
    if opts.k == 0 || opts.k > d {
        return Err(BonusError::invalid(
            "k",
            format!("rank must lie in [1, {d}], got {}", opts.k),
        ));
    }
    if opts.eigen_cap.is_nan() || opts.eigen_cap <= 0.0 {
        return Err(BonusError::invalid("eigen_cap", "must be positive"));
    }
    if points.len() < d + 1 {
        return Err(BonusError::TooFewObservations {
            needed: d + 1,
            got: points.len(),
        });
    }
    let init = LowRankFit::from_second_moment(d, &points.second_moment(), opts.k, LowRankMethod::Eigen)?;
    let (psi, dirs) = clip_top(init.eigenvalues, init.directions, opts.k, opts.eigen_cap);
    let mut params = Params {
        lambda: LAMBDA_INIT,
        psi,
        dirs,
    };
    let (mut resp, mut loglik) = e_step(points, &params);
    check_finite(loglik)?;
    let mut trace = vec![loglik];
    let mut iterations = 0;
    let n = points.len() as f64;
    while iterations < opts.em_iters {
        params = m_step(points, &resp, &params, opts.k, opts.eigen_cap)?;
        let (next_resp, next_loglik) = e_step(points, &params);
        check_finite(next_loglik)?;
        iterations += 1;
        trace.push(next_loglik);
        let delta = (next_loglik - loglik) / n;
        resp = next_resp;
        loglik = next_loglik;
        if delta.abs() < opts.tol {
            break;
        }
    }
    Ok(TwoGroupFit {
        lambda: params.lambda,
        psi_eigenvalues: params.psi,
        psi_directions: params.dirs,
        loglik,
        loglik_trace: trace,
        iterations,
    })
}

fn check_finite(loglik: f64) -> Result<()> {
    if loglik.is_finite() {
        Ok(())
    } else {
        Err(BonusError::Numerical(
            "two-group log-likelihood is not finite".into(),
        ))
    }
}

#[derive(Debug, Clone, Default)]
pub struct TwoGroupLearner {
    pub options: TwoGroupOptions,
}

impl TwoGroupLearner {
    pub fn new(options: TwoGroupOptions) -> Self {
        TwoGroupLearner { options }
    }
}

impl Learner for TwoGroupLearner {
    fn name(&self) -> String {
        format!("twogroup-k{}", self.options.k)
    }

    fn fit(&self, view: &MaskView<'_>) -> Result<Statistic> {
        Ok(fit_twogroup_mle(view, self.options)?.statistic())
    }
}

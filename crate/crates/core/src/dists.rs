//! Null and alternative models, sampling, oracle statistics and the scenario
//! builders used by the simulation experiments.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::error::{BonusError, Result};
use crate::linalg::{orthonormalize, sorted_eigen, sym_from_row_major};
use crate::points::Points;
use crate::statistic::{shrinkage_weights, Statistic};

/// The known null density `f_0`.
#[derive(Debug, Clone, PartialEq)]
pub enum NullModel {
    /// `N(0, I_d)`.
    GaussianIdentity { dim: usize },
    /// `MultiNom(trials, theta0)`; counts are stored as `f64`.
    Multinomial { trials: u64, theta0: Vec<f64> },
}

impl NullModel {
    pub fn gaussian(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(BonusError::invalid("dim", "must be at least 1"));
        }
        Ok(NullModel::GaussianIdentity { dim })
    }

    pub fn multinomial(trials: u64, theta0: Vec<f64>) -> Result<Self> {
        if trials == 0 {
            return Err(BonusError::invalid("trials", "must be at least 1"));
        }
        check_pmf("theta0", &theta0)?;
        Ok(NullModel::Multinomial { trials, theta0 })
    }

    pub fn uniform_multinomial(trials: u64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(BonusError::invalid("dim", "must be at least 1"));
        }
        NullModel::multinomial(trials, vec![1.0 / dim as f64; dim])
    }

    pub fn dim(&self) -> usize {
        match self {
            NullModel::GaussianIdentity { dim } => *dim,
            NullModel::Multinomial { theta0, .. } => theta0.len(),
        }
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(BonusError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

fn check_pmf(name: &'static str, theta: &[f64]) -> Result<()> {
    if theta.is_empty() {
        return Err(BonusError::invalid(name, "empty probability vector"));
    }
    if theta.iter().any(|&p| !(p > 0.0 && p < 1.0 || p == 1.0 && theta.len() == 1)) {
        return Err(BonusError::invalid(name, "entries must lie in (0, 1)"));
    }
    let total: f64 = theta.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(BonusError::invalid(
            name,
            format!("entries sum to {total}, not 1"),
        ));
    }
    Ok(())
}

/// Parameters of the alternative, known only to oracles and to scenario
/// generation.
#[derive(Debug, Clone, PartialEq)]
pub enum AltParams {
    /// Alternatives are `N(0, I + M)` with `M` symmetric PSD (row-major).
    LowRankCov { dim: usize, cov: Vec<f64>, rank: usize },
    MultinomialTheta { theta1: Vec<f64> },
}

impl AltParams {
    pub fn low_rank(dim: usize, cov: Vec<f64>, rank: usize) -> Result<Self> {
        if cov.len() != dim * dim {
            return Err(BonusError::DimensionMismatch {
                expected: dim * dim,
                got: cov.len(),
            });
        }
        for i in 0..dim {
            for j in 0..dim {
                if (cov[i * dim + j] - cov[j * dim + i]).abs() > 1e-12 {
                    return Err(BonusError::invalid("cov", "matrix is not symmetric"));
                }
            }
        }
        let eig = sorted_eigen(&sym_from_row_major(dim, &cov))?;
        if eig.values.iter().any(|&v| v < -1e-10) {
            return Err(BonusError::invalid("cov", "matrix is not positive semidefinite"));
        }
        Ok(AltParams::LowRankCov { dim, cov, rank })
    }

    pub fn multinomial(theta1: Vec<f64>) -> Result<Self> {
        check_pmf("theta1", &theta1)?;
        Ok(AltParams::MultinomialTheta { theta1 })
    }

    /// The Bayes-optimal statistic: `x'(I − (M+I)⁻¹)x` for the Gaussian
    /// model, the log-likelihood ratio `Σ x_j log(θ1_j/θ0_j)` for the
    /// multinomial model.
    pub fn oracle_statistic(&self, model: &NullModel) -> Result<Statistic> {
        match (self, model) {
            (AltParams::LowRankCov { dim, cov, .. }, NullModel::GaussianIdentity { dim: d0 }) => {
                if dim != d0 {
                    return Err(BonusError::DimensionMismatch {
                        expected: *d0,
                        got: *dim,
                    });
                }
                let eig = sorted_eigen(&sym_from_row_major(*dim, cov))?;
                let (dirs, psi): (Vec<_>, Vec<_>) = eig
                    .vectors
                    .into_iter()
                    .zip(eig.values)
                    .filter(|(_, v)| *v > 1e-12)
                    .unzip();
                Ok(Statistic::low_rank_quadratic(
                    "oracle-quadratic",
                    dirs,
                    shrinkage_weights(&psi),
                ))
            }
            (AltParams::MultinomialTheta { theta1 }, NullModel::Multinomial { theta0, .. }) => {
                if theta1.len() != theta0.len() {
                    return Err(BonusError::DimensionMismatch {
                        expected: theta0.len(),
                        got: theta1.len(),
                    });
                }
                let w = theta1
                    .iter()
                    .zip(theta0)
                    .map(|(a, b)| (a / b).ln())
                    .collect();
                Ok(Statistic::linear("oracle-llr", w))
            }
            _ => Err(BonusError::invalid(
                "alt",
                "alternative parameters do not match the null model family",
            )),
        }
    }
}

/// One evaluation of the oracle statistic. Prefer
/// [`AltParams::oracle_statistic`] when scoring many points.
pub fn oracle_statistic(model: &NullModel, alt: &AltParams, x: &[f64]) -> Result<f64> {
    model.check_dim(x)?;
    Ok(alt.oracle_statistic(model)?.eval(x))
}

/// A generated problem instance with its hidden truth.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub observations: Points,
    /// `true` marks a non-null hypothesis.
    pub truth: Vec<bool>,
    pub null_model: NullModel,
    pub alt: AltParams,
    pub n1: usize,
}

impl Scenario {
    pub fn n(&self) -> usize {
        self.truth.len()
    }
}

/// `count` i.i.d. draws from `f_0`.
pub fn sample_null<R: Rng + ?Sized>(model: &NullModel, count: usize, rng: &mut R) -> Points {
    let mut out = Points::with_capacity(model.dim(), count);
    let mut buf = vec![0.0; model.dim()];
    for _ in 0..count {
        match model {
            NullModel::GaussianIdentity { .. } => fill_standard_normal(&mut buf, rng),
            NullModel::Multinomial { trials, theta0 } => {
                sample_multinomial(*trials, theta0, &mut buf, rng)
            }
        }
        out.push(&buf).expect("buffer has model dimension");
    }
    out
}

fn fill_standard_normal<R: Rng + ?Sized>(buf: &mut [f64], rng: &mut R) {
    for v in buf.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
}

/// Conditional-binomial multinomial sampler.
pub(crate) fn sample_multinomial<R: Rng + ?Sized>(
    trials: u64,
    theta: &[f64],
    out: &mut [f64],
    rng: &mut R,
) {
    let mut remaining = trials;
    let mut mass = 1.0;
    let last = theta.len() - 1;
    for (j, &p) in theta.iter().enumerate() {
        if j == last || remaining == 0 {
            out[j] = remaining as f64;
            remaining = 0;
            continue;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let k = Binomial::new(remaining, q)
            .expect("probability clamped to [0, 1]")
            .sample(rng);
        out[j] = k as f64;
        remaining -= k;
        mass -= p;
    }
}

fn random_truth<R: Rng + ?Sized>(n: usize, n1: usize, rng: &mut R) -> Vec<bool> {
    let mut truth: Vec<bool> = (0..n).map(|i| i < n1).collect();
    truth.shuffle(rng);
    truth
}

/// Gaussian scenario with `M = strength · Σ_{i≤rank} u_i u_i'` for random
/// orthonormal `u_i`: `n1` alternatives from `N(0, I + M)`, the rest `N(0, I)`.
pub fn make_gaussian_lowrank_scenario<R: Rng + ?Sized>(
    dim: usize,
    n: usize,
    n1: usize,
    rank: usize,
    strength: f64,
    rng: &mut R,
) -> Result<Scenario> {
    if n1 > n {
        return Err(BonusError::invalid("n1", format!("{n1} exceeds n = {n}")));
    }
    if rank == 0 || rank > dim {
        return Err(BonusError::invalid(
            "rank",
            format!("must lie in [1, {dim}], got {rank}"),
        ));
    }
    if !(strength > 0.0 && strength.is_finite()) {
        return Err(BonusError::invalid("strength", "must be positive"));
    }
    let directions = random_orthonormal(dim, rank, rng);
    let mut cov = vec![0.0; dim * dim];
    for u in &directions {
        for a in 0..dim {
            for b in 0..dim {
                cov[a * dim + b] += strength * u[a] * u[b];
            }
        }
    }
    // exact symmetry regardless of summation order
    for a in 0..dim {
        for b in (a + 1)..dim {
            let v = 0.5 * (cov[a * dim + b] + cov[b * dim + a]);
            cov[a * dim + b] = v;
            cov[b * dim + a] = v;
        }
    }
    let truth = random_truth(n, n1, rng);
    let scale = strength.sqrt();
    let mut observations = Points::with_capacity(dim, n);
    let mut x = vec![0.0; dim];
    for &is_alt in &truth {
        fill_standard_normal(&mut x, rng);
        if is_alt {
            for u in &directions {
                let g: f64 = StandardNormal.sample(rng);
                x.iter_mut().zip(u).for_each(|(xi, ui)| *xi += scale * g * ui);
            }
        }
        observations.push(&x)?;
    }
    Ok(Scenario {
        observations,
        truth,
        null_model: NullModel::gaussian(dim)?,
        alt: AltParams::low_rank(dim, cov, rank)?,
        n1,
    })
}

/// `count` orthonormal directions from Gram–Schmidt on i.i.d. Gaussian vectors.
pub fn random_orthonormal<R: Rng + ?Sized>(dim: usize, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    loop {
        let raw: Vec<Vec<f64>> = (0..count)
            .map(|_| (0..dim).map(|_| StandardNormal.sample(rng)).collect())
            .collect();
        let basis = orthonormalize(&raw);
        if basis.len() == count {
            return basis;
        }
    }
}

/// Uniform-null multinomial scenario. The alternative is
/// `θ1_j = (1 + delta · r_j) / dim` with balanced Rademacher signs `r`, drawn
/// afresh for each scenario.
pub fn make_multinomial_scenario<R: Rng + ?Sized>(
    dim: usize,
    trials: u64,
    n: usize,
    n1: usize,
    delta: f64,
    rng: &mut R,
) -> Result<Scenario> {
    if dim == 0 || !dim.is_multiple_of(2) {
        return Err(BonusError::invalid(
            "dim",
            format!("must be even and positive for a balanced perturbation, got {dim}"),
        ));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(BonusError::invalid(
            "delta",
            format!("must lie in [0, 1), got {delta}"),
        ));
    }
    if n1 > n {
        return Err(BonusError::invalid("n1", format!("{n1} exceeds n = {n}")));
    }
    let theta1 = balanced_perturbation(dim, delta, rng);
    let null_model = NullModel::uniform_multinomial(trials, dim)?;
    let truth = random_truth(n, n1, rng);
    let NullModel::Multinomial { theta0, .. } = &null_model else {
        unreachable!()
    };
    let mut observations = Points::with_capacity(dim, n);
    let mut x = vec![0.0; dim];
    for &is_alt in &truth {
        let theta = if is_alt { &theta1 } else { theta0 };
        sample_multinomial(trials, theta, &mut x, rng);
        observations.push(&x)?;
    }
    Ok(Scenario {
        observations,
        truth,
        null_model,
        alt: AltParams::multinomial(theta1)?,
        n1,
    })
}

fn balanced_perturbation<R: Rng + ?Sized>(dim: usize, delta: f64, rng: &mut R) -> Vec<f64> {
    let mut signs: Vec<f64> = (0..dim).map(|j| if j < dim / 2 { 1.0 } else { -1.0 }).collect();
    signs.shuffle(rng);
    let base = 1.0 / dim as f64;
    let mut theta: Vec<f64> = signs.iter().map(|r| base + delta * r * base).collect();
    // pairwise cancellation leaves at most a few ulps; park them on the first entry
    let drift = theta.iter().sum::<f64>() - 1.0;
    theta[0] -= drift;
    theta
}

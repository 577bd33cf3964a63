//! Fitted scoring functions `x -> T̂(x)`; larger means more alternative-like.

use std::fmt;
use std::sync::Arc;

use crate::linalg::dot;
use crate::points::Points;

type ScoreFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

#[derive(Clone)]
pub struct Statistic {
    name: String,
    details: String,
    score: Arc<ScoreFn>,
}

impl fmt::Debug for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Statistic")
            .field("name", &self.name)
            .field("details", &self.details)
            .finish()
    }
}

impl Statistic {
    pub fn new<F>(name: impl Into<String>, score: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Statistic {
            name: name.into(),
            details: String::new(),
            score: Arc::new(score),
        }
    }

    pub fn with_details(mut self, details: impl Into<String>) -> Self {
        self.details = details.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn details(&self) -> &str {
        &self.details
    }

    /// Whether both handles share one scoring function.
    pub fn same_as(&self, other: &Statistic) -> bool {
        Arc::ptr_eq(&self.score, &other.score)
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.score)(x)
    }

    pub fn scores(&self, points: &Points) -> Vec<f64> {
        points.rows().map(|x| self.eval(x)).collect()
    }

    /// `g ∘ self`. With `g` strictly increasing the result induces the same
    /// ordering, and therefore the same rejections, as `self`.
    pub fn map<G>(&self, label: &str, g: G) -> Statistic
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let inner = Arc::clone(&self.score);
        Statistic {
            name: format!("{label}({})", self.name),
            details: self.details.clone(),
            score: Arc::new(move |x| g(inner(x))),
        }
    }

    /// `‖x‖²`, the Gaussian GLRT statistic.
    pub fn squared_norm() -> Statistic {
        Statistic::new("squared-norm", |x| x.iter().map(|v| v * v).sum())
    }

    /// Pearson chi-square `Σ (x_j − e_j)² / e_j` against expected counts `e`.
    pub fn chi_square(expected: Vec<f64>) -> Statistic {
        Statistic::new("chi-square", move |x| {
            x.iter()
                .zip(&expected)
                .map(|(o, e)| (o - e) * (o - e) / e)
                .sum()
        })
    }

    /// `Σ w_i (u_i'x)²` for orthonormal `u_i`. This is `x'(I − (Ψ+I)⁻¹)x`
    /// when `Ψ = Σ ψ_i u_i u_i'` and `w_i = ψ_i / (1 + ψ_i)`.
    pub fn low_rank_quadratic(
        name: impl Into<String>,
        directions: Vec<Vec<f64>>,
        weights: Vec<f64>,
    ) -> Statistic {
        debug_assert_eq!(directions.len(), weights.len());
        let details = format!("weights={weights:?}");
        Statistic::new(name, move |x| {
            directions
                .iter()
                .zip(&weights)
                .map(|(u, w)| {
                    let p = dot(u, x);
                    w * p * p
                })
                .sum()
        })
        .with_details(details)
    }

    /// `Σ w_j x_j`.
    pub fn linear(name: impl Into<String>, weights: Vec<f64>) -> Statistic {
        Statistic::new(name, move |x| dot(&weights, x))
    }

    /// Constant score; every observation ties.
    pub fn constant(value: f64) -> Statistic {
        Statistic::new("constant", move |_| value)
    }
}

/// Weights `ψ/(1+ψ)` for `x'(I − (Ψ+I)⁻¹)x` given the eigenvalues of `Ψ`.
pub fn shrinkage_weights(psi_eigenvalues: &[f64]) -> Vec<f64> {
    psi_eigenvalues.iter().map(|&p| p / (1.0 + p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squared_norm_three_four_five() {
        assert_eq!(Statistic::squared_norm().eval(&[3.0, 4.0]), 25.0);
    }

    #[test]
    fn map_composes() {
        let s = Statistic::squared_norm().map("affine", |t| 2.0 * t + 1.0);
        assert_eq!(s.eval(&[1.0, 1.0]), 5.0);
        assert_eq!(s.name(), "affine(squared-norm)");
    }
}

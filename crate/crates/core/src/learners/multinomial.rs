use super::Learner;
use crate::dists::NullModel;
use crate::error::{BonusError, Result};
use crate::pool::MaskView;
use crate::statistic::Statistic;

const PROBABILITY_FLOOR: f64 = 1e-8;

/// Deconvolves the pooled mean frequency into an alternative cell vector,
/// `θ̂_alt ∝ max((θ̄ − c θ0) / (1 − c), 1e-8)`, and scores by the plug-in
/// log-likelihood ratio `Σ x_j log(θ̂_alt_j / θ0_j)`.
///
/// `c` is the assumed null share of the pool; `None` uses `ñ / n₊`, which
/// treats every real observation as a potential alternative.
pub fn fit_multinomial_deconv(
    view: &MaskView<'_>,
    model: &NullModel,
    null_share: Option<f64>,
) -> Result<Statistic> {
    let NullModel::Multinomial { trials, theta0 } = model else {
        return Err(BonusError::invalid(
            "model",
            "multinomial deconvolution needs a multinomial null",
        ));
    };
    let c = null_share.unwrap_or(view.n_tilde() as f64 / view.len().max(1) as f64);
    if !(0.0..1.0).contains(&c) {
        return Err(BonusError::invalid(
            "null_share",
            format!("must lie in [0, 1), got {c}"),
        ));
    }
    let points = view.points();
    if points.dim() != theta0.len() {
        return Err(BonusError::DimensionMismatch {
            expected: theta0.len(),
            got: points.dim(),
        });
    }
    if points.is_empty() {
        return Err(BonusError::TooFewObservations { needed: 1, got: 0 });
    }
    let mut mean = vec![0.0; theta0.len()];
    for row in points.rows() {
        mean.iter_mut().zip(row).for_each(|(m, x)| *m += x);
    }
    let scale = 1.0 / (points.len() as f64 * *trials as f64);
    let mut alt: Vec<f64> = mean
        .iter()
        .zip(theta0)
        .map(|(m, t0)| ((m * scale - c * t0) / (1.0 - c)).max(PROBABILITY_FLOOR))
        .collect();
    let total: f64 = alt.iter().sum();
    alt.iter_mut().for_each(|p| *p /= total);
    let weights = alt.iter().zip(theta0).map(|(a, t0)| (a / t0).ln()).collect();
    Ok(Statistic::linear("multinomial-deconv", weights).with_details(format!("theta_alt={alt:?}")))
}

#[derive(Debug, Clone)]
pub struct MultinomialDeconvLearner {
    model: NullModel,
    null_share: Option<f64>,
}

impl MultinomialDeconvLearner {
    pub fn new(model: NullModel) -> Self {
        MultinomialDeconvLearner {
            model,
            null_share: None,
        }
    }

    pub fn with_null_share(mut self, c: f64) -> Self {
        self.null_share = Some(c);
        self
    }
}

impl Learner for MultinomialDeconvLearner {
    fn name(&self) -> String {
        "multinomial-deconv".into()
    }

    fn fit(&self, view: &MaskView<'_>) -> Result<Statistic> {
        fit_multinomial_deconv(view, &self.model, self.null_share)
    }
}

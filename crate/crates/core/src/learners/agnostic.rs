use super::Learner;
use crate::dists::NullModel;
use crate::error::Result;
use crate::pool::MaskView;
use crate::statistic::Statistic;

/// Model-free statistic: `‖x‖²` (Gaussian GLRT) or Pearson chi-square
/// against the null cell probabilities (multinomial).
pub fn fit_agnostic(model: &NullModel) -> Statistic {
    match model {
        NullModel::GaussianIdentity { .. } => Statistic::squared_norm(),
        NullModel::Multinomial { trials, theta0 } => {
            let expected = theta0.iter().map(|p| *trials as f64 * p).collect();
            Statistic::chi_square(expected)
        }
    }
}

#[derive(Debug, Clone)]
pub struct AgnosticLearner {
    model: NullModel,
}

impl AgnosticLearner {
    pub fn new(model: NullModel) -> Self {
        AgnosticLearner { model }
    }
}

impl Learner for AgnosticLearner {
    fn name(&self) -> String {
        "agnostic".into()
    }

    fn fit(&self, _view: &MaskView<'_>) -> Result<Statistic> {
        Ok(fit_agnostic(&self.model))
    }
}

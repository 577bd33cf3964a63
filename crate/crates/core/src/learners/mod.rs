//! Test-statistic learners. A learner sees the pool only through a
//! [`MaskView`] and returns a [`Statistic`] meant to be monotonically
//! equivalent to `f_mix / f_0`.

mod adversarial;
mod agnostic;
mod lowrank;
mod multinomial;
mod pvalue;
mod twogroup;

use std::sync::Arc;

pub use adversarial::AdversarialLearner;
pub use agnostic::{fit_agnostic, AgnosticLearner};
pub use lowrank::{fit_lowrank_gaussian, LowRankFit, LowRankLearner, LowRankMethod};
pub use multinomial::{fit_multinomial_deconv, MultinomialDeconvLearner};
pub use pvalue::{empirical_pvalue, EmpiricalPvalues};
pub use twogroup::{fit_twogroup_mle, TwoGroupFit, TwoGroupLearner, TwoGroupOptions};

use crate::error::Result;
use crate::pool::MaskView;
use crate::statistic::Statistic;

/// An updating rule for the rejection region.
pub trait Learner: Send + Sync {
    fn name(&self) -> String;

    /// Initial fit on the fully masked pool.
    fn fit(&self, view: &MaskView<'_>) -> Result<Statistic>;

    /// Called by the engine every `refit_every` steps with the labels revealed
    /// since the previous fit. The default keeps the current statistic.
    fn refit(
        &self,
        _view: &MaskView<'_>,
        current: &Statistic,
        _newly_revealed: &[(usize, bool)],
    ) -> Result<Statistic> {
        Ok(current.clone())
    }
}

pub type SharedLearner = Arc<dyn Learner>;

/// Ignores the data and always returns the same statistic (agnostic or
/// oracle baselines run through the BONuS engine).
#[derive(Debug, Clone)]
pub struct FixedLearner {
    statistic: Statistic,
}

impl FixedLearner {
    pub fn new(statistic: Statistic) -> Self {
        FixedLearner { statistic }
    }
}

impl Learner for FixedLearner {
    fn name(&self) -> String {
        self.statistic.name().to_string()
    }

    fn fit(&self, _view: &MaskView<'_>) -> Result<Statistic> {
        Ok(self.statistic.clone())
    }
}

/// Serves a precomputed initial fit and hands refits to the wrapped learner,
/// so one fit can drive several runs on the same pool.
pub struct PrefitLearner {
    inner: SharedLearner,
    statistic: Statistic,
}

impl PrefitLearner {
    pub fn fit_on(inner: SharedLearner, view: &MaskView<'_>) -> Result<Self> {
        let statistic = inner.fit(view)?;
        Ok(PrefitLearner { inner, statistic })
    }
}

impl Learner for PrefitLearner {
    fn name(&self) -> String {
        self.inner.name()
    }

    fn fit(&self, _view: &MaskView<'_>) -> Result<Statistic> {
        Ok(self.statistic.clone())
    }

    fn refit(
        &self,
        view: &MaskView<'_>,
        current: &Statistic,
        newly_revealed: &[(usize, bool)],
    ) -> Result<Statistic> {
        self.inner.refit(view, current, newly_revealed)
    }
}

/// Applies a strictly increasing transform to another learner's output.
pub struct MonotoneLearner<G> {
    inner: SharedLearner,
    label: String,
    transform: G,
}

impl<G> MonotoneLearner<G>
where
    G: Fn(f64) -> f64 + Clone + Send + Sync + 'static,
{
    pub fn new(inner: SharedLearner, label: impl Into<String>, transform: G) -> Self {
        MonotoneLearner {
            inner,
            label: label.into(),
            transform,
        }
    }
}

impl<G> Learner for MonotoneLearner<G>
where
    G: Fn(f64) -> f64 + Clone + Send + Sync + 'static,
{
    fn name(&self) -> String {
        format!("{}({})", self.label, self.inner.name())
    }

    fn fit(&self, view: &MaskView<'_>) -> Result<Statistic> {
        Ok(self
            .inner
            .fit(view)?
            .map(&self.label, self.transform.clone()))
    }

    fn refit(
        &self,
        view: &MaskView<'_>,
        current: &Statistic,
        newly_revealed: &[(usize, bool)],
    ) -> Result<Statistic> {
        // an unchanged statistic comes back as the same handle; mapping it
        // again would compose the transform twice
        let fresh = self.inner.refit(view, current, newly_revealed)?;
        if fresh.same_as(current) {
            return Ok(fresh);
        }
        Ok(fresh.map(&self.label, self.transform.clone()))
    }
}

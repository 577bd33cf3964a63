//! Double BONuS: screen a menu of learners against a second layer of
//! synthetic nulls, then run the procedure once with the winner.
//!
//! Screening treats every pooled vector as "real" and only ever touches the
//! pool's vectors, never its hidden labels.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::dists::{sample_null, NullModel};
use crate::engine::{prepare_pool, run_on_pool, BonusConfig, RunResult};
use crate::error::{BonusError, Result};
use crate::learners::{EmpiricalPvalues, Learner, PrefitLearner, SharedLearner};
use crate::points::Points;
use crate::pool::{pool_and_mask, MaskView, PooledSet};
use crate::rng::fork;
use crate::statistic::Statistic;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateScore {
    pub learner: String,
    pub rejections: usize,
    pub selected: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleConfig {
    /// Second-layer synthetic count; `None` uses `2 · n₊`.
    pub n_tilde_plus: Option<usize>,
    pub ensemble: bool,
    /// Learners scoring at least this fraction of the best join the ensemble.
    pub competitive_ratio: f64,
    /// Null draws for the ensemble's empirical p-values; `None` uses
    /// `max(10⁴, 2 · n₊)`.
    pub ensemble_null_draws: Option<usize>,
}

impl Default for DoubleConfig {
    fn default() -> Self {
        DoubleConfig {
            n_tilde_plus: None,
            ensemble: false,
            competitive_ratio: 0.8,
            ensemble_null_draws: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DoubleResult {
    pub run: RunResult,
    pub scores: Vec<CandidateScore>,
    /// Screening score of the min-p ensemble, when one was built.
    pub ensemble_score: Option<usize>,
    pub ensemble_adopted: bool,
    /// Name of the learner used in the final run.
    pub selected: String,
}

/// `S(x) = −minᵢ pᵢ(x)` with `pᵢ` the empirical p-value of statistic `i`
/// against `null_samples`.
pub fn ensemble_min_p(statistics: Vec<Statistic>, null_samples: &Points) -> Result<Statistic> {
    if statistics.len() < 2 {
        return Err(BonusError::invalid(
            "statistics",
            format!("an ensemble needs at least 2 members, got {}", statistics.len()),
        ));
    }
    let names: Vec<&str> = statistics.iter().map(Statistic::name).collect();
    let name = format!("min-p[{}]", names.join(","));
    let calibrated = statistics
        .into_iter()
        .map(|s| EmpiricalPvalues::new(s, null_samples))
        .collect::<Result<Vec<_>>>()?;
    Ok(Statistic::new(name, move |x| {
        -calibrated
            .iter()
            .map(|c| c.pvalue(x))
            .fold(f64::INFINITY, f64::min)
    }))
}

/// Fits every member on the view and combines them by [`ensemble_min_p`].
pub struct EnsembleLearner {
    members: Vec<SharedLearner>,
    null_samples: Arc<Points>,
}

impl EnsembleLearner {
    pub fn new(members: Vec<SharedLearner>, null_samples: Points) -> Self {
        EnsembleLearner {
            members,
            null_samples: Arc::new(null_samples),
        }
    }
}

impl Learner for EnsembleLearner {
    fn name(&self) -> String {
        let names: Vec<String> = self.members.iter().map(|m| m.name()).collect();
        format!("min-p[{}]", names.join(","))
    }

    fn fit(&self, view: &MaskView<'_>) -> Result<Statistic> {
        let stats = self
            .members
            .iter()
            .map(|m| m.fit(view))
            .collect::<Result<Vec<_>>>()?;
        ensemble_min_p(stats, &self.null_samples)
    }
}

/// Screening pool: the first-layer pooled vectors as "real" plus a fresh
/// second layer of synthetic nulls.
struct ScreeningPool {
    pool: PooledSet,
}

impl ScreeningPool {
    fn build<R: Rng + ?Sized>(z: &Points, model: &NullModel, n_tilde_plus: usize, rng: &mut R) -> Result<Self> {
        if n_tilde_plus == 0 {
            return Err(BonusError::invalid("n_tilde_plus", "must be at least 1"));
        }
        let second_layer = sample_null(model, n_tilde_plus, rng);
        Ok(ScreeningPool {
            pool: pool_and_mask(z, &second_layer, rng)?,
        })
    }

    fn score(&self, learner: &dyn Learner, config: &BonusConfig) -> Result<usize> {
        let mut pool = self.pool.clone();
        Ok(run_on_pool(&mut pool, learner, config)?.rejected.len())
    }
}

fn pick_best(scores: &[usize]) -> usize {
    // first maximum wins ties
    scores
        .iter()
        .enumerate()
        .fold(0, |best, (i, &s)| if s > scores[best] { i } else { best })
}

fn score_all(screen: &ScreeningPool, learners: &[SharedLearner], config: &BonusConfig) -> Result<Vec<usize>> {
    learners
        .par_iter()
        .map(|l| screen.score(l.as_ref(), config))
        .collect()
}

/// Screening-stage rejection counts for each learner on `z` (pooled vectors,
/// labels unused) against `n_tilde_plus` fresh nulls.
pub fn screen_candidates<R: Rng + ?Sized>(
    z: &Points,
    learners: &[SharedLearner],
    model: &NullModel,
    config: &BonusConfig,
    n_tilde_plus: usize,
    rng: &mut R,
) -> Result<Vec<CandidateScore>> {
    if learners.is_empty() {
        return Err(BonusError::invalid("learners", "the menu is empty"));
    }
    let screen = ScreeningPool::build(z, model, n_tilde_plus, rng)?;
    let counts = score_all(&screen, learners, config)?;
    let best = pick_best(&counts);
    Ok(learners
        .iter()
        .zip(&counts)
        .enumerate()
        .map(|(i, (l, &c))| CandidateScore {
            learner: l.name(),
            rejections: c,
            selected: i == best,
        })
        .collect())
}

/// Full Double BONuS. With `learners = [L]` and no ensemble the result equals
/// `run_bonus` with `L` on the same generator.
pub fn run_double_bonus<R: Rng + ?Sized>(
    real: &Points,
    learners: &[SharedLearner],
    model: &NullModel,
    config: &BonusConfig,
    double: &DoubleConfig,
    rng: &mut R,
) -> Result<DoubleResult> {
    let mut out = run_double_bonus_grid(real, learners, model, config, &[config.alpha], double, rng)?;
    Ok(out.remove(0))
}

/// [`run_double_bonus`] at several levels. Each learner is fitted once on
/// the screening pool and at most once on the first-layer pool; element `i`
/// equals `run_double_bonus` at `alphas[i]` with the same generator state.
pub fn run_double_bonus_grid<R: Rng + ?Sized>(
    real: &Points,
    learners: &[SharedLearner],
    model: &NullModel,
    config: &BonusConfig,
    alphas: &[f64],
    double: &DoubleConfig,
    rng: &mut R,
) -> Result<Vec<DoubleResult>> {
    if learners.is_empty() {
        return Err(BonusError::invalid("learners", "the menu is empty"));
    }
    let pool = prepare_pool(real, model, config, rng)?;
    let n_tilde_plus = double.n_tilde_plus.unwrap_or(2 * pool.len());
    let mut screen_rng = fork(rng, 0);
    let screen = ScreeningPool::build(pool.points(), model, n_tilde_plus, &mut screen_rng)?;
    let screen_fits = learners
        .par_iter()
        .map(|l| {
            let fit = PrefitLearner::fit_on(Arc::clone(l), &screen.pool.view())?;
            Ok(Arc::new(fit) as SharedLearner)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut final_fits: Vec<Option<SharedLearner>> = vec![None; learners.len()];

    let mut out = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let config = BonusConfig { alpha, ..*config };
        let mut ensemble_rng = screen_rng.clone();
        let counts = score_all(&screen, &screen_fits, &config)?;
        let best = pick_best(&counts);
        let mut scores: Vec<CandidateScore> = learners
            .iter()
            .zip(&counts)
            .enumerate()
            .map(|(i, (l, &c))| CandidateScore {
                learner: l.name(),
                rejections: c,
                selected: i == best,
            })
            .collect();

        let mut ensemble: Option<SharedLearner> = None;
        let mut ensemble_score = None;
        if double.ensemble && counts[best] > 0 {
            let threshold = double.competitive_ratio * counts[best] as f64;
            let members: Vec<SharedLearner> = learners
                .iter()
                .zip(&counts)
                .filter(|(_, &c)| c as f64 >= threshold)
                .map(|(l, _)| Arc::clone(l))
                .collect();
            if members.len() >= 2 {
                let draws = double
                    .ensemble_null_draws
                    .unwrap_or_else(|| (2 * pool.len()).max(10_000));
                let nulls = sample_null(model, draws, &mut ensemble_rng);
                let candidate: SharedLearner = Arc::new(EnsembleLearner::new(members, nulls));
                let score = screen.score(candidate.as_ref(), &config)?;
                ensemble_score = Some(score);
                if score > counts[best] {
                    scores.iter_mut().for_each(|s| s.selected = false);
                    ensemble = Some(candidate);
                }
            }
        }
        let ensemble_adopted = ensemble.is_some();
        let chosen = match ensemble {
            Some(e) => e,
            None => match &final_fits[best] {
                Some(f) => Arc::clone(f),
                None => {
                    let f: SharedLearner = Arc::new(PrefitLearner::fit_on(Arc::clone(&learners[best]), &pool.view())?);
                    final_fits[best] = Some(Arc::clone(&f));
                    f
                }
            },
        };
        let run = run_on_pool(&mut pool.clone(), chosen.as_ref(), &config)?;
        out.push(DoubleResult {
            run,
            scores,
            ensemble_score,
            ensemble_adopted,
            selected: chosen.name(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(name: &str) -> Statistic {
        Statistic::new(name, |x| x[0])
    }

    #[test]
    fn ensemble_needs_two_members() {
        let nulls = Points::from_flat(1, vec![0.0, 1.0]).unwrap();
        assert!(ensemble_min_p(vec![id("a")], &nulls).is_err());
    }

    #[test]
    fn duplicated_statistic_keeps_ranking() {
        let nulls = Points::from_flat(1, (0..50).map(f64::from).collect()).unwrap();
        let e = ensemble_min_p(vec![id("a"), id("b")], &nulls).unwrap();
        let xs = [-3.0, 4.5, 10.2, 20.7, 49.5];
        for w in xs.windows(2) {
            assert!(e.eval(&[w[0]]) <= e.eval(&[w[1]]));
        }
    }

    #[test]
    fn min_p_dominates_each_member() {
        let nulls = Points::from_flat(2, (0..200).map(|i| ((i * 37) % 101) as f64 / 10.0).collect()).unwrap();
        let a = Statistic::new("a", |x| x[0]);
        let b = Statistic::new("b", |x| x[1]);
        let pa = EmpiricalPvalues::new(a.clone(), &nulls).unwrap();
        let pb = EmpiricalPvalues::new(b.clone(), &nulls).unwrap();
        let e = ensemble_min_p(vec![a, b], &nulls).unwrap();
        for x in [[1.0, 9.0], [9.5, 0.1], [5.0, 5.0]] {
            let p = -e.eval(&x);
            assert!(p <= pa.pvalue(&x) && p <= pb.pvalue(&x));
        }
    }

    #[test]
    fn tie_broken_by_list_order() {
        assert_eq!(pick_best(&[0, 0, 0]), 0);
        assert_eq!(pick_best(&[1, 3, 3]), 1);
    }
}

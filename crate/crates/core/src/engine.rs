//! The BONuS peeling loop (BH and Storey variants) and the p-value baselines
//! it is compared against.

use rand::Rng;

use crate::dists::{sample_null, NullModel};
use crate::error::{BonusError, Result};
use crate::estimators::{fdp_bh, fdp_storey, should_stop, FdpEstimate, FdpKind};
use crate::learners::{Learner, PrefitLearner, SharedLearner};
use crate::points::Points;
use crate::pool::{pool_and_mask, PooledSet};

/// Number of masked points excluded per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Batch {
    /// `max(1, n₊ / 500)`.
    Auto,
    Fixed(usize),
}

impl Batch {
    pub fn resolve(self, pooled: usize) -> usize {
        match self {
            Batch::Auto => (pooled / 500).max(1),
            Batch::Fixed(b) => b.max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BonusConfig {
    pub alpha: f64,
    pub kind: FdpKind,
    pub n_tilde: usize,
    pub batch: Batch,
    /// Steps between learner refits; 0 fits once at the start.
    pub refit_every: usize,
}

impl BonusConfig {
    pub fn new(alpha: f64, kind: FdpKind, n_tilde: usize) -> Self {
        BonusConfig {
            alpha,
            kind,
            n_tilde,
            batch: Batch::Auto,
            refit_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(BonusError::invalid(
                "alpha",
                format!("must lie in (0, 1), got {}", self.alpha),
            ));
        }
        if self.n_tilde == 0 {
            return Err(BonusError::invalid("n_tilde", "must be at least 1"));
        }
        if self.batch == Batch::Fixed(0) {
            return Err(BonusError::invalid("batch", "must be at least 1"));
        }
        self.kind.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// Indices into the real observations, ascending.
    pub rejected: Vec<usize>,
    /// Stopping step (the first evaluated step is 1).
    pub t_hat: usize,
    pub fdp_path: Vec<FdpEstimate>,
    /// `(N(R_t), Ñ(R_t))` for t = 1..=t_hat.
    pub counts_path: Vec<(usize, usize)>,
    /// Pooled indices of the Storey correction set (empty for BH).
    pub correction_set: Vec<usize>,
    /// Pooled indices excluded after step t, for t = 1..t_hat.
    pub peeled: Vec<Vec<usize>>,
    pub statistic: String,
}

/// Runs the procedure on an existing pool. Every decision is made from the
/// pool's mask view and revealed counts.
pub fn run_on_pool(pool: &mut PooledSet, learner: &dyn Learner, config: &BonusConfig) -> Result<RunResult> {
    config.validate()?;
    let batch = config.batch.resolve(pool.len());
    let mut statistic = learner.fit(&pool.view())?;
    let mut queue = masked_order(pool, &statistic, learner)?;
    let mut cursor = 0;

    let mut correction_set = Vec::new();
    let mut correction = None;
    if let FdpKind::Storey { correction_quantile } = config.kind {
        let size = ((correction_quantile * pool.len() as f64).floor() as usize).clamp(1, pool.len());
        correction_set = queue[..size].to_vec();
        cursor = size;
        let labels = pool.reveal(&correction_set)?;
        let real = labels.iter().filter(|l| l.1).count();
        correction = Some((real, labels.len() - real));
    }

    let mut fdp_path = Vec::new();
    let mut counts_path = Vec::new();
    let mut peeled = Vec::new();
    let mut since_refit: Vec<(usize, bool)> = Vec::new();
    let mut t = 1;
    loop {
        let (real_in, synth_in) = pool.masked_counts();
        let value = match correction {
            None => fdp_bh(pool.n(), pool.n_tilde(), real_in, synth_in),
            Some((real_a, synth_a)) => fdp_storey(real_a, synth_a, real_in, synth_in),
        };
        fdp_path.push(FdpEstimate {
            value,
            real_in_region: real_in,
            synthetic_in_region: synth_in,
            correction,
        });
        counts_path.push((real_in, synth_in));
        if should_stop(value, config.alpha, real_in) {
            break;
        }
        // N(R_t) > 0 here, so at least one masked point remains
        let end = (cursor + batch).min(queue.len());
        let step: Vec<usize> = queue[cursor..end].to_vec();
        cursor = end;
        since_refit.extend(pool.reveal(&step)?);
        peeled.push(step);
        if config.refit_every > 0 && t % config.refit_every == 0 {
            statistic = learner.refit(&pool.view(), &statistic, &since_refit)?;
            since_refit.clear();
            queue = masked_order(pool, &statistic, learner)?;
            cursor = 0;
        }
        t += 1;
    }

    let (real_in, _) = pool.masked_counts();
    let mut rejected: Vec<usize> = if real_in == 0 {
        Vec::new()
    } else {
        (0..pool.len())
            .filter(|&j| pool.is_masked(j))
            .filter_map(|j| pool.real_index(j))
            .collect()
    };
    rejected.sort_unstable();
    Ok(RunResult {
        rejected,
        t_hat: t,
        fdp_path,
        counts_path,
        correction_set,
        peeled,
        statistic: format!("{} {}", statistic.name(), statistic.details()).trim_end().to_string(),
    })
}

/// Masked indices sorted by ascending score, ties by index.
fn masked_order(pool: &PooledSet, statistic: &crate::statistic::Statistic, learner: &dyn Learner) -> Result<Vec<usize>> {
    let points = pool.points();
    let mut scored = Vec::with_capacity(pool.masked_count());
    for j in (0..pool.len()).filter(|&j| pool.is_masked(j)) {
        let s = statistic.eval(points.row(j));
        if !s.is_finite() {
            return Err(BonusError::Learner {
                learner: learner.name(),
                reason: format!("non-finite score {s} at pooled index {j}"),
            });
        }
        scored.push((s, j));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(scored.into_iter().map(|(_, j)| j).collect())
}

/// Draws `n_tilde` synthetic nulls, pools them with `real`, and runs the
/// procedure.
pub fn run_bonus<R: Rng + ?Sized>(
    real: &Points,
    learner: &dyn Learner,
    model: &NullModel,
    config: &BonusConfig,
    rng: &mut R,
) -> Result<RunResult> {
    let mut pool = prepare_pool(real, model, config, rng)?;
    run_on_pool(&mut pool, learner, config)
}

/// [`run_bonus`] at several levels on one pool: the learner is fitted once
/// and each level peels a fresh copy. Element `i` equals `run_bonus` at
/// `alphas[i]` with the same generator state.
pub fn run_bonus_grid<R: Rng + ?Sized>(
    real: &Points,
    learner: SharedLearner,
    model: &NullModel,
    config: &BonusConfig,
    alphas: &[f64],
    rng: &mut R,
) -> Result<Vec<RunResult>> {
    let pool = prepare_pool(real, model, config, rng)?;
    let prefit = PrefitLearner::fit_on(learner, &pool.view())?;
    alphas
        .iter()
        .map(|&alpha| {
            let config = BonusConfig { alpha, ..*config };
            run_on_pool(&mut pool.clone(), &prefit, &config)
        })
        .collect()
}

pub(crate) fn prepare_pool<R: Rng + ?Sized>(
    real: &Points,
    model: &NullModel,
    config: &BonusConfig,
    rng: &mut R,
) -> Result<PooledSet> {
    config.validate()?;
    if real.is_empty() {
        return Err(BonusError::invalid("real", "no observations to test"));
    }
    if real.dim() != model.dim() {
        return Err(BonusError::DimensionMismatch {
            expected: model.dim(),
            got: real.dim(),
        });
    }
    let synthetic = sample_null(model, config.n_tilde, rng);
    pool_and_mask(real, &synthetic, rng)
}

/// Benjamini–Hochberg step-up: reject the `k*` smallest p-values with
/// `k* = max{k : p_(k) ≤ kα/n}`. Returns ascending indices.
pub fn run_bh(pvalues: &[f64], alpha: f64) -> Vec<usize> {
    let n = pvalues.len();
    if n == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]).then(a.cmp(&b)));
    let cutoff = order
        .iter()
        .enumerate()
        .rev()
        .find(|(rank, &i)| pvalues[i] <= (rank + 1) as f64 * alpha / n as f64)
        .map_or(0, |(rank, _)| rank + 1);
    let mut out = order[..cutoff].to_vec();
    out.sort_unstable();
    out
}

/// `π̂₀ = (1 + #{p > λ}) / (n(1 − λ))`.
pub fn storey_pi0(pvalues: &[f64], lambda: f64) -> f64 {
    let above = pvalues.iter().filter(|&&p| p > lambda).count();
    (1 + above) as f64 / (pvalues.len() as f64 * (1.0 - lambda))
}

/// BH at level `α / π̂₀`.
pub fn run_storey_bh(pvalues: &[f64], alpha: f64, lambda: f64) -> Vec<usize> {
    if pvalues.is_empty() {
        return Vec::new();
    }
    run_bh(pvalues, alpha / storey_pi0(pvalues, lambda))
}

/// Suggested synthetic-null count: `round(n/α)` when few rejections are
/// expected, `n` when many are.
pub fn choose_ntilde(n: usize, alpha: f64, sparse_regime: bool) -> usize {
    if sparse_regime {
        (n as f64 / alpha).round() as usize
    } else {
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::FixedLearner;
    use crate::statistic::Statistic;

    /// Pool whose scores equal the single coordinate of each point.
    fn labelled(scores: &[f64], is_real: &[bool]) -> PooledSet {
        PooledSet::from_labeled(Points::from_flat(1, scores.to_vec()).unwrap(), is_real).unwrap()
    }

    fn identity_learner() -> FixedLearner {
        FixedLearner::new(Statistic::new("id", |x| x[0]))
    }

    #[test]
    fn hand_traced_peel() {
        // descending by score: real₁ (4), syn₁ (3), real₂ (2), syn₂ (1)
        let mut pool = labelled(&[4.0, 3.0, 2.0, 1.0], &[true, false, true, false]);
        let mut cfg = BonusConfig::new(0.9, FdpKind::Bh, 2);
        cfg.batch = Batch::Fixed(1);
        let res = run_on_pool(&mut pool, &identity_learner(), &cfg).unwrap();
        assert_eq!(res.counts_path, vec![(2, 2), (2, 1)]);
        assert!((res.fdp_path[0].value - 1.0).abs() < 1e-15);
        assert!((res.fdp_path[1].value - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(res.peeled, vec![vec![3]]);
        assert_eq!(res.t_hat, 2);
        assert_eq!(res.rejected, vec![0, 1]);
    }

    #[test]
    fn minimum_rejection_barrier() {
        // n/(ñ+1) · 1/n = 1/3 > α: nothing can ever be rejected
        let mut pool = labelled(&[5.0, 4.0, 3.0, 0.0, -1.0], &[true, true, true, false, false]);
        let cfg = BonusConfig::new(0.2, FdpKind::Bh, 2);
        let res = run_on_pool(&mut pool, &identity_learner(), &cfg).unwrap();
        assert!(res.rejected.is_empty());
        assert_eq!(res.counts_path.last().unwrap().0, 0);
    }

    #[test]
    fn exhaustion_stops_on_empty_region() {
        let mut pool = labelled(&[1.0, 2.0, 3.0], &[true, false, true]);
        let mut cfg = BonusConfig::new(0.01, FdpKind::Bh, 1);
        cfg.batch = Batch::Fixed(1);
        let res = run_on_pool(&mut pool, &identity_learner(), &cfg).unwrap();
        assert!(res.rejected.is_empty());
        assert!(res.t_hat <= 1 + 3);
        assert_eq!(res.counts_path.last().unwrap().0, 0);
    }

    #[test]
    fn storey_reveals_correction_set_first() {
        let scores: Vec<f64> = (0..10).map(f64::from).collect();
        let labels = [false, true, false, true, false, true, true, true, true, true];
        let mut pool = labelled(&scores, &labels);
        let cfg = BonusConfig::new(0.5, FdpKind::Storey { correction_quantile: 0.3 }, 3);
        let res = run_on_pool(&mut pool, &identity_learner(), &cfg).unwrap();
        assert_eq!(res.correction_set, vec![0, 1, 2]);
        assert_eq!(res.fdp_path[0].correction, Some((1, 2)));
        // (1+1)/2 · (1+1)/6 ≤ 0.5 at step 1
        assert_eq!(res.t_hat, 1);
        assert_eq!(res.rejected.len(), 6);
    }

    #[test]
    fn storey_with_empty_synthetic_correction_rejects_nothing() {
        let scores: Vec<f64> = (0..6).map(f64::from).collect();
        let labels = [true, true, false, true, true, true];
        let mut pool = labelled(&scores, &labels);
        let cfg = BonusConfig::new(0.5, FdpKind::Storey { correction_quantile: 0.34 }, 1);
        let res = run_on_pool(&mut pool, &identity_learner(), &cfg).unwrap();
        assert!(res.fdp_path.iter().all(|f| f.value == f64::INFINITY));
        assert!(res.rejected.is_empty());
    }

    #[test]
    fn config_validation() {
        let mut c = BonusConfig::new(1.5, FdpKind::Bh, 10);
        assert!(c.validate().is_err());
        c.alpha = 0.1;
        c.n_tilde = 0;
        assert!(c.validate().is_err());
        c.n_tilde = 5;
        c.batch = Batch::Fixed(0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn bh_worked_example() {
        assert_eq!(run_bh(&[0.01, 0.02, 0.5], 0.15), vec![0, 1]);
        assert!(run_bh(&[1.0, 1.0, 1.0], 0.1).is_empty());
        assert_eq!(run_bh(&[0.05], 0.05), vec![0]);
        assert!(run_bh(&[], 0.05).is_empty());
    }

    #[test]
    fn storey_pi0_worked_example() {
        let mut p = vec![0.001; 20];
        p.extend(vec![0.9; 20]);
        assert!((storey_pi0(&p, 0.5) - 1.05).abs() < 1e-12);
        assert_eq!(run_storey_bh(&p, 0.1, 0.5), run_bh(&p, 0.1 / 1.05));
        assert!(run_storey_bh(&[], 0.1, 0.5).is_empty());
        let all_high = vec![0.8; 10];
        assert!(storey_pi0(&all_high, 0.5) >= 1.0);
    }

    #[test]
    fn choose_ntilde_regimes() {
        assert_eq!(choose_ntilde(1000, 0.05, true), 20000);
        assert_eq!(choose_ntilde(1000, 0.05, false), 1000);
        assert_eq!(choose_ntilde(1, 0.5, true), 2);
    }
}

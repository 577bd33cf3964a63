#![allow(dead_code)]

use std::sync::Arc;

use bonus_core::dists::{make_gaussian_lowrank_scenario, sample_null};
use bonus_core::engine::{run_on_pool, Batch, BonusConfig, RunResult};
use bonus_core::learners::{AdversarialLearner, FixedLearner, LowRankLearner, MonotoneLearner};
use bonus_core::pool::pool_and_mask;
use bonus_core::rng::seeded;
use bonus_core::{FdpKind, Learner, PooledSet, SharedLearner, Statistic};
use rand::seq::SliceRandom;
use rand::Rng;

/// Strictly increasing maps indexed by `which % 5`.
pub fn increasing(which: usize, a: f64, b: f64) -> Arc<dyn Fn(f64) -> f64 + Send + Sync> {
    match which % 5 {
        0 => Arc::new(move |x| a * x + b),
        1 => Arc::new(|x: f64| x * x * x),
        2 => Arc::new(|x: f64| (x / 8.0).exp()),
        3 => Arc::new(|x: f64| x.atan()),
        _ => Arc::new(move |x: f64| a * x.cbrt() - b),
    }
}

fn small_pool(seed: u64, n: usize, n1: usize, n_tilde: usize) -> PooledSet {
    let mut rng = seeded(seed);
    let sc = make_gaussian_lowrank_scenario(4, n, n1, 1, 4.0, &mut rng).unwrap();
    let synth = sample_null(&sc.null_model, n_tilde, &mut rng);
    pool_and_mask(&sc.observations, &synth, &mut rng).unwrap()
}

fn kind_of(storey: bool) -> FdpKind {
    if storey {
        FdpKind::storey()
    } else {
        FdpKind::Bh
    }
}

/// Same pool, learner `L` versus `g ∘ L`: rejection sets must agree.
pub fn transform_invariance_holds(seed: u64, which: usize, a: f64, b: f64, storey: bool) -> bool {
    let base: SharedLearner = if seed.is_multiple_of(2) {
        Arc::new(LowRankLearner::eigen(1))
    } else {
        Arc::new(FixedLearner::new(Statistic::squared_norm()))
    };
    let g = increasing(which, a, b);
    let mapped = MonotoneLearner::new(Arc::clone(&base), "g", move |x| g(x));
    let mut config = BonusConfig::new(0.2, kind_of(storey), 300);
    config.batch = Batch::Fixed(1 + (seed % 3) as usize);
    let pool = small_pool(seed, 300, 40, 300);
    let r1 = run_on_pool(&mut pool.clone(), base.as_ref(), &config).unwrap();
    let r2 = run_on_pool(&mut pool.clone(), &mapped, &config).unwrap();
    r1.rejected == r2.rejected && r1.t_hat == r2.t_hat
}

/// Step-up by definition: `k* = max{k : #{p ≤ kα/n} ≥ k}`, reject `p ≤ k*α/n`.
pub fn brute_force_bh(p: &[f64], alpha: f64) -> Vec<usize> {
    let n = p.len();
    let k_star = (1..=n)
        .rev()
        .find(|&k| p.iter().filter(|&&v| v <= k as f64 * alpha / n as f64).count() >= k)
        .unwrap_or(0);
    if k_star == 0 {
        return Vec::new();
    }
    let cut = k_star as f64 * alpha / n as f64;
    (0..n).filter(|&i| p[i] <= cut).collect()
}

/// Random p-values with deliberate ties and a cluster near zero.
pub fn random_pvalues<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| match rng.random_range(0..4) {
            0 => (rng.random_range(0..20) as f64) / 20.0,
            1 => rng.random::<f64>() * 1e-3,
            _ => rng.random::<f64>(),
        })
        .collect()
}

pub fn regions_equal(a: &RunResult, b: &RunResult) -> bool {
    a.t_hat == b.t_hat
        && a.peeled == b.peeled
        && a.correction_set == b.correction_set
        && a.counts_path == b.counts_path
        && a.fdp_path == b.fdp_path
}

/// Runs once, permutes the hidden labels among the points still masked at
/// the stopping time, and replays: every decision must repeat.
pub fn replay_holds(seed: u64, storey: bool, adversarial: bool) -> bool {
    let learner: Box<dyn Learner> = if adversarial {
        Box::new(AdversarialLearner::default())
    } else {
        Box::new(LowRankLearner::eigen(1))
    };
    let mut config = BonusConfig::new(0.1, kind_of(storey), 250);
    config.batch = Batch::Fixed(2);
    config.refit_every = if adversarial { 3 } else { 0 };
    let original = small_pool(seed, 250, 40, 250);
    let mut labels_pool = original.clone();
    let all: Vec<usize> = (0..original.len()).collect();
    let labels: Vec<bool> = labels_pool.reveal(&all).unwrap().into_iter().map(|l| l.1).collect();

    let mut first = original.clone();
    let r1 = run_on_pool(&mut first, learner.as_ref(), &config).unwrap();
    let masked: Vec<usize> = first.view().masked_indices().collect();
    let mut shuffled: Vec<bool> = masked.iter().map(|&j| labels[j]).collect();
    shuffled.shuffle(&mut seeded(seed ^ 0x5eed));
    let mut relabeled = labels.clone();
    for (&j, &l) in masked.iter().zip(&shuffled) {
        relabeled[j] = l;
    }
    let mut second = PooledSet::from_labeled(original.points().clone(), &relabeled).unwrap();
    let r2 = run_on_pool(&mut second, learner.as_ref(), &config).unwrap();
    regions_equal(&r1, &r2) && r1.rejected.len() == r2.rejected.len()
}

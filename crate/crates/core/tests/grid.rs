use std::sync::Arc;

use bonus_core::dists::make_gaussian_lowrank_scenario;
use bonus_core::double::{run_double_bonus, run_double_bonus_grid, DoubleConfig};
use bonus_core::engine::{run_bonus, run_bonus_grid, Batch, BonusConfig};
use bonus_core::learners::{AdversarialLearner, AgnosticLearner, LowRankLearner, TwoGroupLearner};
use bonus_core::rng::seeded;
use bonus_core::{FdpKind, NullModel, SharedLearner};

const ALPHAS: [f64; 3] = [0.05, 0.1, 0.25];

#[test]
fn grid_matches_separate_runs() {
    let sc = make_gaussian_lowrank_scenario(6, 400, 60, 1, 6.0, &mut seeded(1)).unwrap();
    let learners: Vec<(SharedLearner, usize)> = vec![
        (Arc::new(LowRankLearner::eigen(1)), 0),
        (Arc::new(TwoGroupLearner::default()), 0),
        (Arc::new(AdversarialLearner::default()), 3),
    ];
    for kind in [FdpKind::Bh, FdpKind::storey()] {
        for (learner, refit_every) in &learners {
            let mut config = BonusConfig::new(ALPHAS[0], kind, 400);
            config.batch = Batch::Fixed(2);
            config.refit_every = *refit_every;
            let grid = run_bonus_grid(&sc.observations, Arc::clone(learner), &sc.null_model, &config, &ALPHAS, &mut seeded(9)).unwrap();
            for (&alpha, g) in ALPHAS.iter().zip(&grid) {
                let single = run_bonus(
                    &sc.observations,
                    learner.as_ref(),
                    &sc.null_model,
                    &BonusConfig { alpha, ..config },
                    &mut seeded(9),
                )
                .unwrap();
                assert_eq!(g, &single, "{} at {alpha}", learner.name());
            }
        }
    }
}

#[test]
fn double_grid_matches_separate_runs() {
    let sc = make_gaussian_lowrank_scenario(6, 400, 60, 2, 6.0, &mut seeded(2)).unwrap();
    let menu: Vec<SharedLearner> = vec![
        Arc::new(AgnosticLearner::new(NullModel::gaussian(6).unwrap())),
        Arc::new(LowRankLearner::eigen(1)),
        Arc::new(LowRankLearner::eigen(2)),
    ];
    for ensemble in [false, true] {
        let double = DoubleConfig {
            ensemble,
            competitive_ratio: 0.5,
            ensemble_null_draws: Some(2000),
            ..DoubleConfig::default()
        };
        let config = BonusConfig::new(ALPHAS[0], FdpKind::Bh, 400);
        let grid = run_double_bonus_grid(&sc.observations, &menu, &sc.null_model, &config, &ALPHAS, &double, &mut seeded(4)).unwrap();
        for (&alpha, g) in ALPHAS.iter().zip(&grid) {
            let single = run_double_bonus(
                &sc.observations,
                &menu,
                &sc.null_model,
                &BonusConfig { alpha, ..config },
                &double,
                &mut seeded(4),
            )
            .unwrap();
            assert_eq!(g.run, single.run);
            assert_eq!(g.scores, single.scores);
            assert_eq!(g.selected, single.selected);
            assert_eq!(g.ensemble_score, single.ensemble_score);
        }
    }
}

//! Experiment specifications and the replication driver.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::dists::{make_gaussian_lowrank_scenario, make_multinomial_scenario, sample_null, AltParams, NullModel, Scenario};
use crate::double::{run_double_bonus_grid, DoubleConfig};
use crate::engine::{run_bh, run_bonus_grid, run_storey_bh, Batch, BonusConfig};
use crate::error::{BonusError, Result};
use crate::estimators::FdpKind;
use crate::learners::{
    AdversarialLearner, AgnosticLearner, EmpiricalPvalues, FixedLearner, LowRankLearner, LowRankMethod,
    MultinomialDeconvLearner, SharedLearner, TwoGroupLearner, TwoGroupOptions,
};
use crate::linalg::{sorted_eigen, sym_from_row_major};
use crate::rng::{derive_rng, stream, BonusRng};

use super::metrics::{MetricsRow, MetricsTable};

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSpec {
    GaussianLowRank {
        dim: usize,
        n: usize,
        n1: usize,
        rank: usize,
        strength: f64,
    },
    Multinomial {
        dim: usize,
        trials: u64,
        n: usize,
        n1: usize,
        delta: f64,
    },
}

impl ScenarioSpec {
    pub fn n(&self) -> usize {
        match *self {
            ScenarioSpec::GaussianLowRank { n, .. } | ScenarioSpec::Multinomial { n, .. } => n,
        }
    }

    pub fn n1(&self) -> usize {
        match *self {
            ScenarioSpec::GaussianLowRank { n1, .. } | ScenarioSpec::Multinomial { n1, .. } => n1,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            ScenarioSpec::GaussianLowRank { dim, .. } | ScenarioSpec::Multinomial { dim, .. } => dim,
        }
    }

    pub fn build(&self, rng: &mut BonusRng) -> Result<Scenario> {
        match *self {
            ScenarioSpec::GaussianLowRank {
                dim,
                n,
                n1,
                rank,
                strength,
            } => make_gaussian_lowrank_scenario(dim, n, n1, rank, strength, rng),
            ScenarioSpec::Multinomial {
                dim,
                trials,
                n,
                n1,
                delta,
            } => make_multinomial_scenario(dim, trials, n, n1, delta, rng),
        }
    }
}

/// A learner to instantiate against each replication's scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum LearnerSpec {
    Agnostic,
    /// Fixed Bayes-optimal statistic built from the scenario's true alternative.
    Oracle,
    LowRank { k: usize, method: LowRankMethod },
    TwoGroup(TwoGroupOptions),
    MultinomialDeconv,
    Adversarial,
}

impl LearnerSpec {
    pub fn lowrank(k: usize) -> Self {
        LearnerSpec::LowRank {
            k,
            method: LowRankMethod::Eigen,
        }
    }

    pub fn build(&self, scenario: &Scenario) -> Result<SharedLearner> {
        let model = &scenario.null_model;
        Ok(match self {
            LearnerSpec::Agnostic => Arc::new(AgnosticLearner::new(model.clone())),
            LearnerSpec::Oracle => Arc::new(FixedLearner::new(scenario.alt.oracle_statistic(model)?)),
            LearnerSpec::LowRank { k, method } => Arc::new(LowRankLearner {
                k: *k,
                method: *method,
            }),
            LearnerSpec::TwoGroup(opts) => Arc::new(TwoGroupLearner::new(*opts)),
            LearnerSpec::MultinomialDeconv => Arc::new(MultinomialDeconvLearner::new(model.clone())),
            LearnerSpec::Adversarial => Arc::new(AdversarialLearner::default()),
        })
    }
}

/// Statistic behind a p-value baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    Agnostic,
    Oracle,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Procedure {
    /// Per-hypothesis p-values followed by BH or Storey-BH (λ = 0.5).
    PValue { baseline: Baseline, storey: bool },
    Bonus {
        learner: LearnerSpec,
        kind: FdpKind,
        refit_every: usize,
    },
    DoubleBonus {
        menu: Vec<LearnerSpec>,
        kind: FdpKind,
        ensemble: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedProcedure {
    pub name: String,
    pub procedure: Procedure,
}

impl NamedProcedure {
    pub fn new(name: impl Into<String>, procedure: Procedure) -> Self {
        NamedProcedure {
            name: name.into(),
            procedure,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub scenario: ScenarioSpec,
    pub procedures: Vec<NamedProcedure>,
    pub alphas: Vec<f64>,
    pub replications: usize,
    pub base_seed: u64,
    /// First-layer synthetic count; `None` uses `n`.
    pub n_tilde: Option<usize>,
    /// Second-layer count for Double BONuS; `None` uses the library default.
    pub n_tilde_plus: Option<usize>,
    pub batch: Batch,
    /// Null draws for empirical baseline p-values, as a multiple of `n`.
    pub pvalue_draws_per_hypothesis: usize,
    pub storey_lambda: f64,
    /// Record wall-clock runtimes; off keeps outputs byte-stable.
    pub record_runtime: bool,
}

impl ExperimentSpec {
    pub fn new(name: impl Into<String>, scenario: ScenarioSpec, procedures: Vec<NamedProcedure>) -> Self {
        ExperimentSpec {
            name: name.into(),
            scenario,
            procedures,
            alphas: vec![0.05, 0.1, 0.2],
            replications: 1,
            base_seed: 0,
            n_tilde: None,
            n_tilde_plus: None,
            batch: Batch::Auto,
            pvalue_draws_per_hypothesis: 20,
            storey_lambda: 0.5,
            record_runtime: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(BonusError::invalid("replications", "must be at least 1"));
        }
        if self.alphas.is_empty() {
            return Err(BonusError::invalid("alphas", "the grid is empty"));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(BonusError::invalid("alphas", format!("{a} is outside (0, 1)")));
        }
        if self.procedures.is_empty() {
            return Err(BonusError::invalid("procedures", "no procedures to compare"));
        }
        for (i, p) in self.procedures.iter().enumerate() {
            if self.procedures[..i].iter().any(|q| q.name == p.name) {
                return Err(BonusError::invalid("procedures", format!("duplicate name {:?}", p.name)));
            }
            if let Procedure::DoubleBonus { menu, .. } = &p.procedure {
                if menu.is_empty() {
                    return Err(BonusError::invalid("procedures", format!("{:?} has an empty menu", p.name)));
                }
            }
        }
        if !(self.storey_lambda > 0.0 && self.storey_lambda < 1.0) {
            return Err(BonusError::invalid("storey_lambda", "must lie in (0, 1)"));
        }
        if self.n_tilde == Some(0) || self.n_tilde_plus == Some(0) {
            return Err(BonusError::invalid("n_tilde", "must be at least 1"));
        }
        Ok(())
    }

    pub fn n_tilde(&self) -> usize {
        self.n_tilde.unwrap_or(self.scenario.n())
    }
}

/// Private stream of procedure `index` in replication `replication`.
pub fn procedure_rng(base: u64, replication: u64, index: usize) -> BonusRng {
    derive_rng(base, replication, stream::PROCEDURE + index as u64)
}

/// Runs every procedure at every alpha on each replication's scenario. Rows
/// come out ordered by replication, then procedure, then alpha.
pub fn replicate(spec: &ExperimentSpec) -> Result<MetricsTable> {
    spec.validate()?;
    let per_rep: Vec<Vec<MetricsRow>> = (0..spec.replications)
        .into_par_iter()
        .map(|r| run_replication(spec, r))
        .collect();
    Ok(MetricsTable::new(per_rep.into_iter().flatten().collect()))
}

fn run_replication(spec: &ExperimentSpec, r: usize) -> Vec<MetricsRow> {
    let scenario = match spec.scenario.build(&mut derive_rng(spec.base_seed, r as u64, stream::SCENARIO)) {
        Ok(s) => s,
        Err(e) => {
            let msg = format!("scenario: {e}");
            return spec
                .procedures
                .iter()
                .flat_map(|p| spec.alphas.iter().map(move |&a| (p, a)))
                .map(|(p, a)| MetricsRow::failed(&p.name, a, r, msg.clone()))
                .collect();
        }
    };
    let mut pvalue_cache: Vec<(Baseline, Result<Vec<f64>>)> = Vec::new();
    let mut rows = Vec::new();
    for proc in &spec.procedures {
        let start = Instant::now();
        let outcomes: Vec<RowOutcome> = match &proc.procedure {
            Procedure::PValue { baseline, storey } => {
                let pv = cached_pvalues(&mut pvalue_cache, *baseline, spec, &scenario, r);
                spec.alphas
                    .iter()
                    .map(|&alpha| {
                        pv.as_ref().map_err(|e| e.to_string()).map(|p| {
                            let rej = if *storey {
                                run_storey_bh(p, alpha, spec.storey_lambda)
                            } else {
                                run_bh(p, alpha)
                            };
                            (rej, String::new())
                        })
                    })
                    .collect()
            }
            Procedure::Bonus {
                learner,
                kind,
                refit_every,
            } => spread(run_single(spec, &scenario, r, learner, *kind, *refit_every), spec.alphas.len()),
            Procedure::DoubleBonus { menu, kind, ensemble } => {
                spread(run_double(spec, &scenario, r, menu, *kind, *ensemble), spec.alphas.len())
            }
        };
        let elapsed = start.elapsed().as_secs_f64() * 1e3 / spec.alphas.len() as f64;
        for (&alpha, outcome) in spec.alphas.iter().zip(outcomes) {
            let mut row = match outcome {
                Ok((rejected, detail)) => {
                    let mut row = MetricsRow::from_rejections(&proc.name, alpha, r, &rejected, &scenario.truth);
                    row.detail = detail;
                    row
                }
                Err(e) => MetricsRow::failed(&proc.name, alpha, r, e),
            };
            if spec.record_runtime {
                row.runtime_ms = elapsed;
            }
            rows.push(row);
        }
    }
    rows
}

fn cached_pvalues(
    cache: &mut Vec<(Baseline, Result<Vec<f64>>)>,
    baseline: Baseline,
    spec: &ExperimentSpec,
    scenario: &Scenario,
    r: usize,
) -> Result<Vec<f64>> {
    if let Some((_, res)) = cache.iter().find(|(b, _)| *b == baseline) {
        return clone_result(res);
    }
    let res = baseline_pvalues(scenario, baseline, spec, r);
    let out = clone_result(&res);
    cache.push((baseline, res));
    out
}

fn clone_result(res: &Result<Vec<f64>>) -> Result<Vec<f64>> {
    match res {
        Ok(v) => Ok(v.clone()),
        Err(e) => Err(BonusError::Numerical(e.to_string())),
    }
}

/// Baseline p-values: exact chi-square tails where the null law of the
/// statistic is known in closed form, empirical against fresh null draws
/// otherwise.
pub fn baseline_pvalues(scenario: &Scenario, baseline: Baseline, spec: &ExperimentSpec, r: usize) -> Result<Vec<f64>> {
    let model = &scenario.null_model;
    let obs = &scenario.observations;
    if let NullModel::GaussianIdentity { dim } = model {
        match baseline {
            Baseline::Agnostic => {
                let chi = chi_squared(*dim as f64)?;
                return Ok(obs.rows().map(|x| chi.sf(x.iter().map(|v| v * v).sum())).collect());
            }
            Baseline::Oracle => {
                if let Some(dirs) = equal_weight_spikes(&scenario.alt)? {
                    let chi = chi_squared(dirs.len() as f64)?;
                    return Ok(obs
                        .rows()
                        .map(|x| {
                            let t: f64 = dirs.iter().map(|u| crate::linalg::dot(u, x).powi(2)).sum();
                            chi.sf(t)
                        })
                        .collect());
                }
            }
        }
    }
    let stat = match baseline {
        Baseline::Agnostic => crate::learners::fit_agnostic(model),
        Baseline::Oracle => scenario.alt.oracle_statistic(model)?,
    };
    let draws = (spec.pvalue_draws_per_hypothesis * obs.len()).max(1000);
    let nulls = sample_null(model, draws, &mut derive_rng(spec.base_seed, r as u64, stream::PVALUE_NULLS));
    Ok(EmpiricalPvalues::new(stat, &nulls)?.pvalues(obs))
}

fn chi_squared(df: f64) -> Result<ChiSquared> {
    ChiSquared::new(df).map_err(|e| BonusError::Numerical(format!("chi-square({df}): {e}")))
}

/// For a low-rank covariance whose nonzero eigenvalues coincide, the oracle
/// statistic is a multiple of `Σ (uᵢ'x)²`, which is `χ²_rank` under the null.
fn equal_weight_spikes(alt: &AltParams) -> Result<Option<Vec<Vec<f64>>>> {
    let AltParams::LowRankCov { dim, cov, .. } = alt else {
        return Ok(None);
    };
    let eig = sorted_eigen(&sym_from_row_major(*dim, cov))?;
    let top = eig.values.first().copied().unwrap_or(0.0);
    if top <= 1e-12 {
        return Ok(None);
    }
    let tol = 1e-9 * top;
    let rank = eig.values.iter().take_while(|v| **v > tol).count();
    if eig.values[..rank].iter().any(|v| (v - top).abs() > tol) {
        return Ok(None);
    }
    Ok(Some(eig.vectors[..rank].to_vec()))
}

fn bonus_config(spec: &ExperimentSpec, alpha: f64, kind: FdpKind, refit_every: usize) -> BonusConfig {
    let mut config = BonusConfig::new(alpha, kind, spec.n_tilde());
    config.batch = spec.batch;
    config.refit_every = refit_every;
    config
}

/// Rejections and a detail string, or an error message.
type RowOutcome = std::result::Result<(Vec<usize>, String), String>;
type GridOutcome = Result<Vec<(Vec<usize>, String)>>;

/// One outcome per alpha, or the shared error repeated.
fn spread(res: GridOutcome, len: usize) -> Vec<RowOutcome> {
    match res {
        Ok(v) => v.into_iter().map(Ok).collect(),
        Err(e) => vec![Err(e.to_string()); len],
    }
}

fn run_single(
    spec: &ExperimentSpec,
    scenario: &Scenario,
    r: usize,
    learner: &LearnerSpec,
    kind: FdpKind,
    refit_every: usize,
) -> GridOutcome {
    let learner = learner.build(scenario)?;
    let config = bonus_config(spec, spec.alphas[0], kind, refit_every);
    let mut rng = derive_rng(spec.base_seed, r as u64, stream::SYNTHETIC);
    let runs = run_bonus_grid(&scenario.observations, learner, &scenario.null_model, &config, &spec.alphas, &mut rng)?;
    Ok(runs.into_iter().map(|run| (run.rejected, String::new())).collect())
}

fn run_double(
    spec: &ExperimentSpec,
    scenario: &Scenario,
    r: usize,
    menu: &[LearnerSpec],
    kind: FdpKind,
    ensemble: bool,
) -> GridOutcome {
    let learners = menu.iter().map(|l| l.build(scenario)).collect::<Result<Vec<_>>>()?;
    let config = bonus_config(spec, spec.alphas[0], kind, 0);
    let double = DoubleConfig {
        n_tilde_plus: spec.n_tilde_plus,
        ensemble,
        ..DoubleConfig::default()
    };
    let mut rng = derive_rng(spec.base_seed, r as u64, stream::SYNTHETIC);
    let results = run_double_bonus_grid(
        &scenario.observations,
        &learners,
        &scenario.null_model,
        &config,
        &spec.alphas,
        &double,
        &mut rng,
    )?;
    Ok(results.into_iter().map(|res| (res.run.rejected, res.selected)).collect())
}

fn scaled(base: usize, scale: f64) -> usize {
    ((base as f64 * scale).round() as usize).max(1)
}

fn check_scale(scale: f64) -> Result<()> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(BonusError::invalid("scale", format!("must be positive, got {scale}")));
    }
    Ok(())
}

fn bonus(name: &str, learner: LearnerSpec, kind: FdpKind) -> NamedProcedure {
    NamedProcedure::new(
        name,
        Procedure::Bonus {
            learner,
            kind,
            refit_every: 0,
        },
    )
}

fn pvalue(name: &str, baseline: Baseline, storey: bool) -> NamedProcedure {
    NamedProcedure::new(name, Procedure::PValue { baseline, storey })
}

/// Rank-`k` two-group maximum-likelihood learner with default EM settings.
pub fn mle(k: usize) -> LearnerSpec {
    LearnerSpec::TwoGroup(TwoGroupOptions {
        k,
        ..TwoGroupOptions::default()
    })
}

/// Introductory rank-1 example: `d = 10`, `n = 10⁴·scale`, `n1 = 500·scale`,
/// alternatives `N(0, I + 4vv')`, `ñ = 5n`, single-point peeling.
pub fn experiment_intro(scale: f64) -> Result<ExperimentSpec> {
    check_scale(scale)?;
    let n = scaled(10_000, scale);
    let scenario = ScenarioSpec::GaussianLowRank {
        dim: 10,
        n,
        n1: scaled(500, scale),
        rank: 1,
        strength: 4.0,
    };
    let procedures = vec![
        pvalue("glrt-bh", Baseline::Agnostic, false),
        pvalue("oracle-bh", Baseline::Oracle, false),
        bonus("bonus-bh-k1", mle(1), FdpKind::Bh),
        bonus("bonus-storey-k1", mle(1), FdpKind::storey()),
        bonus("bonus-bh-pca-k1", LearnerSpec::lowrank(1), FdpKind::Bh),
    ];
    let mut spec = ExperimentSpec::new("intro", scenario, procedures);
    spec.alphas = vec![0.02, 0.05, 0.1, 0.15, 0.2];
    spec.replications = 50;
    spec.n_tilde = Some(5 * n);
    spec.batch = Batch::Fixed(1);
    Ok(spec)
}

/// Ranks screened by Double BONuS in the rank-5 experiment.
pub const RANK_SWEEP: [usize; 6] = [1, 3, 5, 7, 9, 12];

/// Rank-5 Gaussian experiment: `d = 50`, `n = 5000·scale`, `n1 = 500·scale`,
/// `ñ = n`, `ñ₊ = 2n`, Storey correction for every procedure. Double BONuS
/// screens the two-group learner over [`RANK_SWEEP`]; a PCA menu over the
/// same ranks runs alongside.
pub fn experiment_gaussian_lowrank(scale: f64) -> Result<ExperimentSpec> {
    check_scale(scale)?;
    let n = scaled(5_000, scale);
    let scenario = ScenarioSpec::GaussianLowRank {
        dim: 50,
        n,
        n1: scaled(500, scale),
        rank: 5,
        strength: 4.0,
    };
    let procedures = vec![
        pvalue("agnostic-storey-bh", Baseline::Agnostic, true),
        pvalue("oracle-storey-bh", Baseline::Oracle, true),
        NamedProcedure::new(
            "double-bonus-storey",
            Procedure::DoubleBonus {
                menu: RANK_SWEEP.iter().map(|&k| mle(k)).collect(),
                kind: FdpKind::storey(),
                ensemble: false,
            },
        ),
        NamedProcedure::new(
            "double-bonus-pca-storey",
            Procedure::DoubleBonus {
                menu: RANK_SWEEP.iter().map(|&k| LearnerSpec::lowrank(k)).collect(),
                kind: FdpKind::storey(),
                ensemble: false,
            },
        ),
    ];
    let mut spec = ExperimentSpec::new("gaussian-lowrank", scenario, procedures);
    spec.alphas = vec![0.01, 0.02, 0.05, 0.1, 0.15, 0.2];
    spec.replications = 20;
    spec.n_tilde_plus = Some(2 * n);
    Ok(spec)
}

/// Global-null calibration suite: the intro geometry with `n1 = 0`, `ñ = n`,
/// both FDP estimators, 500 replications at `α = 0.1`.
pub fn experiment_calibration(scale: f64) -> Result<ExperimentSpec> {
    check_scale(scale)?;
    let scenario = ScenarioSpec::GaussianLowRank {
        dim: 10,
        n: scaled(10_000, scale),
        n1: 0,
        rank: 1,
        strength: 4.0,
    };
    let procedures = vec![
        pvalue("glrt-bh", Baseline::Agnostic, false),
        bonus("bonus-bh-pca-k1", LearnerSpec::lowrank(1), FdpKind::Bh),
        bonus("bonus-storey-pca-k1", LearnerSpec::lowrank(1), FdpKind::storey()),
    ];
    let mut spec = ExperimentSpec::new("calibration", scenario, procedures);
    spec.alphas = vec![0.1];
    spec.replications = 500;
    Ok(spec)
}

/// Dimensions swept by the multinomial experiment.
pub const MULTINOMIAL_DIMS: [usize; 5] = [6, 12, 18, 24, 30];
/// Perturbation size used by the multinomial experiment.
pub const MULTINOMIAL_DELTA: f64 = 0.1;

/// Multinomial experiment, one spec per dimension: `N = 2000`,
/// `n = 3000·scale`, `n1 = 300·scale`, `ñ = n`.
pub fn experiment_multinomial(scale: f64) -> Result<Vec<ExperimentSpec>> {
    check_scale(scale)?;
    MULTINOMIAL_DIMS
        .iter()
        .map(|&dim| {
            let scenario = ScenarioSpec::Multinomial {
                dim,
                trials: 2000,
                n: scaled(3_000, scale),
                n1: scaled(300, scale),
                delta: MULTINOMIAL_DELTA,
            };
            let procedures = vec![
                pvalue(&format!("chisq-bh-d{dim}"), Baseline::Agnostic, false),
                pvalue(&format!("oracle-lr-bh-d{dim}"), Baseline::Oracle, false),
                bonus(&format!("bonus-bh-d{dim}"), LearnerSpec::MultinomialDeconv, FdpKind::Bh),
            ];
            let mut spec = ExperimentSpec::new(format!("multinomial-d{dim}"), scenario, procedures);
            spec.alphas = vec![0.05, 0.1, 0.2];
            spec.replications = 20;
            spec.base_seed = dim as u64;
            Ok(spec)
        })
        .collect()
}

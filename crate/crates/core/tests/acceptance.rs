//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use bonus_core::cli::{whiten, ZScoreMatrix};
use bonus_core::cli::zscore::sample_correlation;
use bonus_core::dists::{random_orthonormal, sample_null, NullModel};
use bonus_core::engine::{run_bh, run_bonus, BonusConfig};
use bonus_core::harness::{
    baseline_pvalues, experiment_gaussian_lowrank, experiment_intro, experiment_multinomial, lemma_sweep, mle,
    replicate, Baseline, ExperimentSpec, LearnerSpec, MeanSe, MetricsTable, NamedProcedure, Procedure, ScenarioSpec,
};
use bonus_core::learners::{fit_twogroup_mle, LowRankLearner, TwoGroupOptions};
use bonus_core::rng::{derive_rng, seeded, stream};
use bonus_core::{FdpKind, Points, PooledSet};
use rand::Rng;
use rand_distr::StandardNormal;

use common::*;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Verdict {
    fn new(pass: bool, summary: impl Into<String>) -> Self {
        Verdict {
            pass,
            summary: summary.into(),
            details: Vec::new(),
        }
    }
}

fn agg(table: &MetricsTable, proc: &str, alpha: f64) -> (MeanSe, MeanSe, usize) {
    let a = table
        .aggregates()
        .into_iter()
        .find(|a| a.procedure == proc && a.alpha == alpha)
        .unwrap_or_else(|| panic!("no rows for {proc} at {alpha}"));
    (a.fdp, a.power, a.failures)
}

fn lemma() -> Verdict {
    let start = Instant::now();
    let r = lemma_sweep(12, 12).expect("sweep");
    let secs = start.elapsed().as_secs_f64();
    let tight = r
        .tight1
        .iter()
        .find(|c| (c.a, c.b, c.k) == (2, 2, 2))
        .is_some_and(|c| (c.e1 - 2.0 / 3.0).abs() < 1e-12);
    let pass = r.passed() && tight && secs < 5.0;
    Verdict::new(
        pass,
        format!(
            "lemma sweep a,b<=12: {} cases, {} violations, max excess {:.1e}/{:.1e}, (2,2,2) tight={tight}, {:.3}s",
            r.cases,
            r.violations.len(),
            r.max_excess1,
            r.max_excess2,
            secs
        ),
    )
}

fn bonus_proc(name: &str, learner: LearnerSpec, kind: FdpKind, refit_every: usize) -> NamedProcedure {
    NamedProcedure::new(
        name,
        Procedure::Bonus {
            learner,
            kind,
            refit_every,
        },
    )
}

fn fdr_control() -> Verdict {
    let start = Instant::now();
    let (n, n1) = (2000, 100);
    let menu = vec![
        LearnerSpec::Agnostic,
        LearnerSpec::lowrank(1),
        LearnerSpec::LowRank {
            k: 1,
            method: LowRankLearner::em(1).method,
        },
        mle(1),
    ];
    let double = |kind| Procedure::DoubleBonus {
        menu: menu.clone(),
        kind,
        ensemble: false,
    };
    let procedures = vec![
        bonus_proc("bh-mle", mle(1), FdpKind::Bh, 0),
        bonus_proc("storey-mle", mle(1), FdpKind::storey(), 0),
        bonus_proc("bh-adversarial", LearnerSpec::Adversarial, FdpKind::Bh, 5),
        bonus_proc("storey-adversarial", LearnerSpec::Adversarial, FdpKind::storey(), 5),
        NamedProcedure::new("bh-double", double(FdpKind::Bh)),
        NamedProcedure::new("storey-double", double(FdpKind::storey())),
    ];
    let scenario = ScenarioSpec::GaussianLowRank {
        dim: 10,
        n,
        n1,
        rank: 1,
        strength: 4.0,
    };
    let mut spec = ExperimentSpec::new("fdr", scenario, procedures);
    spec.alphas = vec![0.05, 0.1, 0.2];
    spec.replications = 200;
    spec.base_seed = 2_000;
    spec.n_tilde = Some(n);
    let table = replicate(&spec).expect("replicate");
    let secs = start.elapsed().as_secs_f64();
    let mut pass = secs < 600.0;
    let mut details = Vec::new();
    let mut worst: f64 = f64::NEG_INFINITY;
    for p in &spec.procedures {
        for &alpha in &spec.alphas {
            let (fdp, _, failures) = agg(&table, &p.name, alpha);
            let bound = if p.name.starts_with("bh") {
                alpha * (n - n1) as f64 / n as f64
            } else {
                alpha
            };
            let ok = failures == 0 && fdp.mean <= bound + 2.0 * fdp.se;
            worst = worst.max(fdp.mean - bound - 2.0 * fdp.se);
            pass &= ok;
            details.push(format!(
                "{:<20} alpha={alpha:<5} FDR={:.4} (se {:.4}) bound={:.4} failures={failures} {}",
                p.name,
                fdp.mean,
                fdp.se,
                bound,
                if ok { "ok" } else { "EXCEEDS" }
            ));
        }
    }
    let mut v = Verdict::new(
        pass,
        format!(
            "FDR control, 6 procedures x 3 alphas x 200 reps: worst (FDR - bound - 2SE) = {worst:+.4}, {:.0}s",
            secs
        ),
    );
    v.details = details;
    v
}

fn global_null() -> Verdict {
    let scenario = ScenarioSpec::GaussianLowRank {
        dim: 10,
        n: 2000,
        n1: 0,
        rank: 1,
        strength: 4.0,
    };
    let procedures = vec![
        bonus_proc("bh-pca", LearnerSpec::lowrank(1), FdpKind::Bh, 0),
        bonus_proc("storey-pca", LearnerSpec::lowrank(1), FdpKind::storey(), 0),
    ];
    let mut spec = ExperimentSpec::new("null", scenario, procedures);
    spec.alphas = vec![0.1];
    spec.replications = 500;
    spec.base_seed = 3_000;
    let table = replicate(&spec).expect("replicate");
    let binary = table.rows.iter().all(|r| r.fdp == 0.0 || r.fdp == 1.0);
    let mut pass = binary;
    let mut parts = Vec::new();
    for p in ["bh-pca", "storey-pca"] {
        let (fdp, _, failures) = agg(&table, p, 0.1);
        pass &= failures == 0 && fdp.mean <= 0.1 + 2.0 * fdp.se;
        parts.push(format!("{p} FDR={:.4} (se {:.4})", fdp.mean, fdp.se));
    }
    Verdict::new(
        pass,
        format!("global null, 500 reps, alpha=0.1: {}; FDP in {{0,1}}: {binary}", parts.join(", ")),
    )
}

fn power_ordering() -> Verdict {
    let mut spec = experiment_intro(0.2).expect("preset");
    spec.alphas = vec![0.1];
    spec.replications = 100;
    spec.base_seed = 4_000;
    spec.procedures.retain(|p| ["glrt-bh", "oracle-bh", "bonus-bh-k1"].contains(&p.name.as_str()));
    let table = replicate(&spec).expect("replicate");
    let (_, oracle, _) = agg(&table, "oracle-bh", 0.1);
    let (_, bonus, f) = agg(&table, "bonus-bh-k1", 0.1);
    let (_, glrt, _) = agg(&table, "glrt-bh", 0.1);
    let pass = f == 0 && oracle.mean >= bonus.mean && bonus.mean >= 0.7 * oracle.mean && bonus.mean >= glrt.mean + 0.05;
    Verdict::new(
        pass,
        format!(
            "power at alpha=0.1, 100 reps: oracle-BH {:.4} (se {:.4}) >= BONuS {:.4} (se {:.4}) >= 0.7*oracle {:.4}; agnostic-BH {:.4} + 0.05 = {:.4}",
            oracle.mean,
            oracle.se,
            bonus.mean,
            bonus.se,
            0.7 * oracle.mean,
            glrt.mean,
            glrt.mean + 0.05
        ),
    )
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut d) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                d += 1;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                d += 1;
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    d + (a.len() - i) + (b.len() - j)
}

fn convergence() -> Verdict {
    let sizes = [1000usize, 4000, 16000];
    let reps = 20;
    let alpha = 0.1;
    let base = 5_000;
    let learner = LowRankLearner::eigen(1);
    let mut means = Vec::new();
    for &n in &sizes {
        let scenario = ScenarioSpec::GaussianLowRank {
            dim: 10,
            n,
            n1: n / 10,
            rank: 1,
            strength: 4.0,
        };
        let spec = ExperimentSpec::new("convergence", scenario.clone(), vec![bonus_proc("x", LearnerSpec::Oracle, FdpKind::Bh, 0)]);
        let diffs: Vec<f64> = (0..reps)
            .map(|r| {
                let sc = scenario.build(&mut derive_rng(base, r, stream::SCENARIO)).unwrap();
                let p = baseline_pvalues(&sc, Baseline::Oracle, &spec, r as usize).unwrap();
                let oracle = run_bh(&p, alpha);
                let config = BonusConfig::new(alpha, FdpKind::Bh, n);
                let mut rng = derive_rng(base, r, stream::SYNTHETIC);
                let run = run_bonus(&sc.observations, &learner, &sc.null_model, &config, &mut rng).unwrap();
                symmetric_difference(&run.rejected, &oracle) as f64 / n as f64
            })
            .collect();
        means.push(MeanSe::of(&diffs));
    }
    let nonincreasing = means.windows(2).all(|w| w[1].mean <= w[0].mean);
    let last = means[2].mean;
    let pass = nonincreasing && last < 0.05;
    let shown: Vec<String> = sizes
        .iter()
        .zip(&means)
        .map(|(n, m)| format!("n={n}: {:.4} (se {:.4})", m.mean, m.se))
        .collect();
    Verdict::new(
        pass,
        format!("|R_BONuS xor R_BH(oracle)|/n, 20 reps: {}; nonincreasing={nonincreasing}", shown.join(", ")),
    )
}

fn multinomial() -> Verdict {
    let mut pass = true;
    let mut details = Vec::new();
    let mut gap30 = f64::NAN;
    for mut spec in experiment_multinomial(1.0).expect("preset") {
        let d = spec.scenario.dim();
        spec.alphas = vec![0.1];
        spec.procedures.retain(|p| !p.name.starts_with("oracle"));
        let table = replicate(&spec).expect("replicate");
        let (fdp_c, pow_c, fc) = agg(&table, &format!("chisq-bh-d{d}"), 0.1);
        let (fdp_b, pow_b, fb) = agg(&table, &format!("bonus-bh-d{d}"), 0.1);
        let gap = pow_b.mean - pow_c.mean;
        let ok = fc == 0
            && fb == 0
            && fdp_c.mean <= 0.1 + 2.0 * fdp_c.se
            && fdp_b.mean <= 0.1 + 2.0 * fdp_b.se
            && gap >= 0.0
            && (d != 30 || gap >= 0.05);
        if d == 30 {
            gap30 = gap;
        }
        pass &= ok;
        details.push(format!(
            "d={d:<2} chisq power {:.4} FDR {:.4} (se {:.4}) | BONuS power {:.4} FDR {:.4} (se {:.4}) | gap {gap:+.4} {}",
            pow_c.mean,
            fdp_c.mean,
            fdp_c.se,
            pow_b.mean,
            fdp_b.mean,
            fdp_b.se,
            if ok { "ok" } else { "FAIL" }
        ));
    }
    let mut v = Verdict::new(
        pass,
        format!("multinomial sweep d in 6..30, alpha=0.1, 20 reps: power gap at d=30 {gap30:+.4}"),
    );
    v.details = details;
    v
}

fn rank_selection() -> Verdict {
    let mut spec = experiment_gaussian_lowrank(0.4).expect("preset");
    spec.alphas = vec![0.05];
    spec.base_seed = 7_000;
    spec.procedures
        .retain(|p| ["agnostic-storey-bh", "double-bonus-storey"].contains(&p.name.as_str()));
    let table = replicate(&spec).expect("replicate");
    let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
    for row in table.rows_for("double-bonus-storey", 0.05) {
        if let Some(k) = row.detail.rsplit("-k").next().and_then(|s| s.parse().ok()) {
            *votes.entry(k).or_default() += 1;
        }
    }
    let modal = votes.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(k, _)| *k);
    let (_, agn, _) = agg(&table, "agnostic-storey-bh", 0.05);
    let (_, dbl, f) = agg(&table, "double-bonus-storey", 0.05);
    let pass = f == 0 && modal.is_some_and(|k| (5..=9).contains(&k)) && dbl.mean >= agn.mean + 0.1;
    Verdict::new(
        pass,
        format!(
            "rank-5 screening, 20 reps: selected k {votes:?}, modal {modal:?}; power Double {:.4} (se {:.4}) vs agnostic Storey-BH {:.4} + 0.1",
            dbl.mean, dbl.se, agn.mean
        ),
    )
}

fn invariances() -> Verdict {
    let transforms = (0..100u64)
        .filter(|&i| transform_invariance_holds(10_000 + i, i as usize, 0.5 + i as f64 * 0.1, i as f64 - 50.0, i % 3 == 0))
        .count();
    let mut rng = seeded(8_000);
    let bh = (0..1000)
        .filter(|_| {
            let n = rng.random_range(1..=50);
            let alpha = rng.random_range(0.01..0.5);
            let p = random_pvalues(&mut rng, n);
            run_bh(&p, alpha) == brute_force_bh(&p, alpha)
        })
        .count();
    let replays = (0..50u64)
        .filter(|&i| replay_holds(20_000 + i, i % 2 == 0, i % 5 == 0))
        .count();
    Verdict::new(
        transforms == 100 && bh == 1000 && replays == 50,
        format!("invariances: transforms {transforms}/100, BH vs brute force {bh}/1000, masked-label replays {replays}/50"),
    )
}

fn labeled_pool(points: Points) -> PooledSet {
    let mut labels = vec![true; points.len()];
    labels[0] = false;
    PooledSet::from_labeled(points, &labels).unwrap()
}

fn mle_sanity() -> Verdict {
    let null = sample_null(&NullModel::gaussian(5).unwrap(), 50_000, &mut seeded(9_000));
    let fit = fit_twogroup_mle(&labeled_pool(null).view(), TwoGroupOptions::default()).unwrap();
    let null_size = fit.lambda * fit.psi_frobenius();

    let (n, d) = (4000, 5);
    let mut recovered = 0;
    let mut angles = Vec::new();
    for r in 0..20 {
        let mut rng = derive_rng(9_001, r, stream::SCENARIO);
        let u = random_orthonormal(d, 1, &mut rng).remove(0);
        let mut pts = Points::with_capacity(d, n);
        for i in 0..n {
            let mut x: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            if i % 2 == 0 {
                let g: f64 = rng.sample(StandardNormal);
                x.iter_mut().zip(&u).for_each(|(xi, ui)| *xi += 2.0 * g * ui);
            }
            pts.push(&x).unwrap();
        }
        let fit = fit_twogroup_mle(&labeled_pool(pts).view(), TwoGroupOptions::default()).unwrap();
        let cos: f64 = fit.psi_directions[0].iter().zip(&u).map(|(a, b)| a * b).sum::<f64>().abs();
        let angle = cos.min(1.0).acos().to_degrees();
        angles.push(angle);
        if angle <= 15.0 {
            recovered += 1;
        }
    }
    let worst = angles.iter().cloned().fold(0.0, f64::max);
    Verdict::new(
        null_size < 0.05 && recovered >= 18,
        format!(
            "two-group MLE: null fit lambda*||Psi||_F = {null_size:.4} (n=5e4, d=5); planted rank-1 within 15 deg in {recovered}/20 (worst {worst:.1} deg)"
        ),
    )
}

fn max_off_diagonal(data: &Points) -> f64 {
    let d = data.dim();
    let c = sample_correlation(data);
    (0..d * d).filter(|k| k / d != k % d).map(|k| c[k].abs()).fold(0.0, f64::max)
}

fn whitening() -> Verdict {
    let (n, d) = (100_000, 4);
    let names: Vec<String> = (0..d).map(|j| format!("z{j}")).collect();
    let identity = sample_null(&NullModel::gaussian(d).unwrap(), n, &mut seeded(10_000));
    let out = whiten(&ZScoreMatrix { names: names.clone(), data: identity }, 3.0).unwrap();
    let id_max = max_off_diagonal(&out.data);

    let rho: f64 = 0.26;
    let mut rng = seeded(10_001);
    let mut corr = Points::with_capacity(d, n);
    for _ in 0..n {
        let mut x: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        x[1] = rho * x[0] + (1.0 - rho * rho).sqrt() * x[1];
        corr.push(&x).unwrap();
    }
    let before = sample_correlation(&corr)[1];
    let out = whiten(&ZScoreMatrix { names, data: corr }, 3.0).unwrap();
    let after = max_off_diagonal(&out.data);
    Verdict::new(
        id_max < 0.02 && after < 0.05,
        format!(
            "whitening 1e5x4: identity max |offdiag corr| {id_max:.4}; correlated pair {before:.3} -> max |offdiag corr| {after:.4}"
        ),
    )
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [Criterion; 10] = [
        ("lemma", lemma),
        ("fdr_control", fdr_control),
        ("global_null", global_null),
        ("power_ordering", power_ordering),
        ("convergence", convergence),
        ("multinomial", multinomial),
        ("rank_selection", rank_selection),
        ("invariances", invariances),
        ("mle_sanity", mle_sanity),
        ("whitening", whitening),
    ];
    let mut failed = Vec::new();
    let mut ran = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let v = run();
        println!(
            "criterion {:>2} {:<15} {}  {} [{:.1}s]",
            i + 1,
            name,
            if v.pass { "PASS" } else { "FAIL" },
            v.summary,
            start.elapsed().as_secs_f64()
        );
        for line in &v.details {
            println!("      {line}");
        }
        if !v.pass {
            failed.push(*name);
        }
    }
    println!("acceptance: {}/{ran} criteria passed", ran - failed.len());
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}

//! Subcommand definitions and dispatch.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::dists::NullModel;
use crate::double::{run_double_bonus, DoubleConfig};
use crate::engine::{choose_ntilde, run_bonus, Batch, BonusConfig};
use crate::error::{BonusError, Result};
use crate::estimators::FdpKind;
use crate::harness::{emit_csv, emit_plot, lemma_sweep, replicate, ExperimentSpec, MetricsTable};
use crate::learners::{AgnosticLearner, LowRankLearner, SharedLearner, TwoGroupLearner, TwoGroupOptions};
use crate::rng::{derive_rng, stream};

use super::config::{load_config, Config, NTildeSetting, EXPERIMENTS};
use super::zscore::{ingest_zscores, whiten, ZScoreMatrix, DEFAULT_WINSOR};

#[derive(Debug, Parser)]
#[command(name = "bonus", version, about = "BONuS multiple testing with synthetic nulls")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a replicated simulation experiment and write CSV + SVG.
    Simulate(SimulateArgs),
    /// Whiten a z-score CSV and run BONuS with one learner.
    Run(RunArgs),
    /// Whiten a z-score CSV and run Double BONuS over a learner menu.
    Double(DoubleArgs),
    /// Exhaustively verify the hypergeometric inequalities.
    LemmaCheck(LemmaArgs),
    /// Global-null FDR calibration suite.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// One of intro, gaussian-lowrank, multinomial, calibration. May come
    /// from --config instead.
    pub experiment: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated alpha grid.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record wall-clock runtimes (outputs are then not byte-stable).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV of z-scores: header row, one hypothesis per line.
    pub data: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// bh or storey.
    #[arg(long, default_value = "storey")]
    pub estimator: String,
    /// `auto` (n/alpha) or an integer.
    #[arg(long, default_value = "auto")]
    pub n_tilde: String,
    /// Winsorization threshold for the robust covariance.
    #[arg(long, default_value_t = DEFAULT_WINSOR)]
    pub winsor: f64,
    /// Skip whitening (data already standardized).
    #[arg(long)]
    pub no_whiten: bool,
    /// Directory for rejected.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// `mle:K`, `pca:K`, `empca:K` or `agnostic`.
    #[arg(long, default_value = "mle:1")]
    pub learner: String,
}

#[derive(Debug, Args)]
pub struct DoubleArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated learners, as for `run --learner`.
    #[arg(long, value_delimiter = ',', default_value = "pca:1,pca:2,pca:3,mle:1,mle:2,mle:3")]
    pub menu: Vec<String>,
    /// Second-layer synthetic count (default 2·n₊).
    #[arg(long)]
    pub n_tilde_plus: Option<usize>,
    /// Also try the min-p ensemble of competitive learners.
    #[arg(long)]
    pub ensemble: bool,
}

#[derive(Debug, Args)]
pub struct LemmaArgs {
    #[arg(long, default_value_t = 12)]
    pub a_max: u64,
    #[arg(long, default_value_t = 12)]
    pub b_max: u64,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.2)]
    pub scale: f64,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(a, out),
        Command::Run(a) => run(a, out),
        Command::Double(a) => double(a, out),
        Command::LemmaCheck(a) => lemma_check(a, out),
        Command::Calibrate(a) => calibrate(a, out),
    }
}

fn io_err(e: std::io::Error) -> BonusError {
    BonusError::io("<stdout>", e)
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = match &a.config {
        Some(path) => load_config(path)?,
        None => {
            let exp = a.experiment.clone().ok_or_else(|| {
                BonusError::invalid(
                    "experiment",
                    format!("name an experiment ({}) or pass --config", EXPERIMENTS.join(", ")),
                )
            })?;
            Config::new(exp, 0)
        }
    };
    if let Some(e) = a.experiment {
        cfg.experiment = e;
    }
    if a.scale.is_some() {
        cfg.scale = a.scale;
    }
    if a.reps.is_some() {
        cfg.replications = a.reps;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.alpha.is_some() {
        cfg.alphas = a.alpha;
    }
    if let Some(o) = a.out {
        cfg.output_dir = o;
    }
    cfg.timing |= a.timing;
    let specs = cfg.to_specs()?;
    write_experiments(&specs, &cfg.output_dir, out)
}

fn write_experiments(specs: &[ExperimentSpec], dir: &Path, out: &mut dyn Write) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| BonusError::io(dir, e))?;
    for spec in specs {
        let table = replicate(spec)?;
        let csv = dir.join(format!("{}.csv", spec.name));
        let svg = dir.join(format!("{}.svg", spec.name));
        emit_csv(&table, &csv)?;
        emit_plot(&table, &svg)?;
        summarize(spec, &table, out)?;
        writeln!(out, "wrote {} and {}", csv.display(), svg.display()).map_err(io_err)?;
    }
    Ok(())
}

fn summarize(spec: &ExperimentSpec, table: &MetricsTable, out: &mut dyn Write) -> Result<()> {
    writeln!(
        out,
        "{}: n={} n1={} d={} replications={}",
        spec.name,
        spec.scenario.n(),
        spec.scenario.n1(),
        spec.scenario.dim(),
        spec.replications
    )
    .map_err(io_err)?;
    for agg in table.aggregates() {
        writeln!(
            out,
            "  {:<26} alpha={:<5} fdp={:.4} (se {:.4})  power={:.4} (se {:.4})  rejections={:.1}{}",
            agg.procedure,
            agg.alpha,
            agg.fdp.mean,
            agg.fdp.se,
            agg.power.mean,
            agg.power.se,
            agg.rejections.mean,
            if agg.failures > 0 {
                format!("  failures={}", agg.failures)
            } else {
                String::new()
            }
        )
        .map_err(io_err)?;
    }
    for row in table.rows.iter().filter(|r| r.error.is_some()).take(3) {
        writeln!(
            out,
            "  failure: {} replication {}: {}",
            row.procedure,
            row.replication,
            row.error.as_deref().unwrap_or("")
        )
        .map_err(io_err)?;
    }
    Ok(())
}

/// Builds a learner from `mle:K`, `pca:K`, `empca:K` or `agnostic`.
pub fn parse_learner(text: &str, model: &NullModel) -> Result<SharedLearner> {
    let text = text.trim();
    if text == "agnostic" {
        return Ok(Arc::new(AgnosticLearner::new(model.clone())));
    }
    let (family, k) = text
        .split_once(':')
        .ok_or_else(|| BonusError::invalid("learner", format!("expected FAMILY:K or agnostic, got {text:?}")))?;
    let k: usize = k
        .parse()
        .ok()
        .filter(|&k| k >= 1)
        .ok_or_else(|| BonusError::invalid("learner", format!("rank must be a positive integer in {text:?}")))?;
    if k > model.dim() {
        return Err(BonusError::invalid(
            "learner",
            format!("rank {k} exceeds the data dimension {}", model.dim()),
        ));
    }
    Ok(match family {
        "mle" => Arc::new(TwoGroupLearner::new(TwoGroupOptions {
            k,
            ..TwoGroupOptions::default()
        })),
        "pca" => Arc::new(LowRankLearner::eigen(k)),
        "empca" => Arc::new(LowRankLearner::em(k)),
        other => {
            return Err(BonusError::invalid(
                "learner",
                format!("unknown family {other:?}; expected mle, pca, empca or agnostic"),
            ))
        }
    })
}

fn parse_estimator(text: &str) -> Result<FdpKind> {
    match text {
        "bh" => Ok(FdpKind::Bh),
        "storey" => Ok(FdpKind::storey()),
        other => Err(BonusError::invalid("estimator", format!("expected bh or storey, got {other:?}"))),
    }
}

fn parse_n_tilde(text: &str, n: usize, alpha: f64) -> Result<usize> {
    let setting = if text == "auto" {
        NTildeSetting::Auto
    } else {
        NTildeSetting::Fixed(
            text.parse()
                .ok()
                .filter(|&t: &usize| t > 0)
                .ok_or_else(|| BonusError::invalid("n_tilde", format!("expected auto or a positive integer, got {text:?}")))?,
        )
    };
    Ok(match setting {
        NTildeSetting::Fixed(t) => t,
        _ => choose_ntilde(n, alpha, true).max(1),
    })
}

struct Prepared {
    data: ZScoreMatrix,
    model: NullModel,
    config: BonusConfig,
}

fn prepare(a: &DataArgs, out: &mut dyn Write) -> Result<Prepared> {
    let raw = ingest_zscores(&a.data)?;
    writeln!(out, "read {} rows x {} columns from {}", raw.rows(), raw.dim(), a.data.display()).map_err(io_err)?;
    if raw.rows() == 0 {
        return Err(BonusError::TooFewObservations { needed: 1, got: 0 });
    }
    let data = if a.no_whiten { raw } else { whiten(&raw, a.winsor)? };
    let model = NullModel::gaussian(data.dim())?;
    let mut config = BonusConfig::new(a.alpha, parse_estimator(&a.estimator)?, parse_n_tilde(&a.n_tilde, data.rows(), a.alpha)?);
    config.batch = Batch::Auto;
    config.validate()?;
    Ok(Prepared { data, model, config })
}

fn write_rejections(dir: Option<&Path>, rejected: &[usize], out: &mut dyn Write) -> Result<()> {
    let Some(dir) = dir else {
        return Ok(());
    };
    fs::create_dir_all(dir).map_err(|e| BonusError::io(dir, e))?;
    let path = dir.join("rejected.csv");
    let mut text = String::from("row\n");
    for r in rejected {
        text.push_str(&format!("{r}\n"));
    }
    fs::write(&path, text).map_err(|e| BonusError::io(&path, e))?;
    writeln!(out, "wrote {}", path.display()).map_err(io_err)
}

fn run(a: RunArgs, out: &mut dyn Write) -> Result<()> {
    let p = prepare(&a.data, out)?;
    let learner = parse_learner(&a.learner, &p.model)?;
    let mut rng = derive_rng(a.data.seed, 0, stream::SYNTHETIC);
    let res = run_bonus(&p.data.data, learner.as_ref(), &p.model, &p.config, &mut rng)?;
    writeln!(
        out,
        "{} at alpha={}: {} rejections (n_tilde={}, steps={}, statistic {})",
        p.config.kind.label(),
        p.config.alpha,
        res.rejected.len(),
        p.config.n_tilde,
        res.t_hat,
        res.statistic
    )
    .map_err(io_err)?;
    write_rejections(a.data.out.as_deref(), &res.rejected, out)
}

fn double(a: DoubleArgs, out: &mut dyn Write) -> Result<()> {
    let p = prepare(&a.data, out)?;
    let menu = a
        .menu
        .iter()
        .filter(|m| {
            m.split_once(':')
                .and_then(|(_, k)| k.parse::<usize>().ok())
                .is_none_or(|k| k <= p.model.dim())
        })
        .map(|m| parse_learner(m, &p.model))
        .collect::<Result<Vec<_>>>()?;
    let double = DoubleConfig {
        n_tilde_plus: a.n_tilde_plus,
        ensemble: a.ensemble,
        ..DoubleConfig::default()
    };
    let mut rng = derive_rng(a.data.seed, 0, stream::SYNTHETIC);
    let res = run_double_bonus(&p.data.data, &menu, &p.model, &p.config, &double, &mut rng)?;
    writeln!(out, "screening rejections:").map_err(io_err)?;
    for s in &res.scores {
        writeln!(out, "  {:<16} {}{}", s.learner, s.rejections, if s.selected { "  *" } else { "" }).map_err(io_err)?;
    }
    if let Some(score) = res.ensemble_score {
        writeln!(
            out,
            "  {:<16} {}{}",
            "min-p ensemble",
            score,
            if res.ensemble_adopted { "  *" } else { "" }
        )
        .map_err(io_err)?;
    }
    writeln!(
        out,
        "selected {}: {} rejections at alpha={}",
        res.selected,
        res.run.rejected.len(),
        p.config.alpha
    )
    .map_err(io_err)?;
    write_rejections(a.data.out.as_deref(), &res.run.rejected, out)
}

fn lemma_check(a: LemmaArgs, out: &mut dyn Write) -> Result<()> {
    let report = lemma_sweep(a.a_max, a.b_max)?;
    writeln!(
        out,
        "checked {} cases (a <= {}, b <= {}, 0 <= k <= a+b)",
        report.cases, a.a_max, a.b_max
    )
    .map_err(io_err)?;
    writeln!(
        out,
        "max E[V/(1+U)] - a/(1+b): {:e}\nmax E[V/(1+U) (b-U)/(1+a-V)] - 1: {:e}",
        report.max_excess1, report.max_excess2
    )
    .map_err(io_err)?;
    writeln!(out, "tight cases for the first bound: {}", report.tight1.len()).map_err(io_err)?;
    for c in report.tight1.iter().take(5) {
        writeln!(out, "  a={} b={} k={}: {} = {}", c.a, c.b, c.k, c.e1, c.bound1).map_err(io_err)?;
    }
    writeln!(out, "violations: {}", report.violations.len()).map_err(io_err)?;
    if !report.passed() {
        let c = report.violations[0];
        return Err(BonusError::Numerical(format!(
            "inequality violated at a={} b={} k={} (E1={}, E2={})",
            c.a, c.b, c.k, c.e1, c.e2
        )));
    }
    Ok(())
}

fn calibrate(a: CalibrateArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = match &a.config {
        Some(path) => load_config(path)?,
        None => Config::new("calibration", a.seed),
    };
    cfg.experiment = "calibration".into();
    if a.config.is_none() {
        cfg.scale = Some(a.scale);
        cfg.replications = Some(a.reps);
        cfg.alphas = Some(vec![a.alpha]);
    }
    let specs = cfg.to_specs()?;
    for spec in &specs {
        let table = replicate(spec)?;
        summarize(spec, &table, out)?;
        for agg in table.aggregates() {
            let bound = agg.alpha + 2.0 * agg.fdp.se;
            writeln!(
                out,
                "  {:<26} mean FDP {:.4} vs alpha + 2SE = {:.4}: {}",
                agg.procedure,
                agg.fdp.mean,
                bound,
                if agg.fdp.mean <= bound { "within bound" } else { "EXCEEDS" }
            )
            .map_err(io_err)?;
        }
        if let Some(dir) = &a.out {
            fs::create_dir_all(dir).map_err(|e| BonusError::io(dir, e))?;
            emit_csv(&table, &dir.join(format!("{}.csv", spec.name)))?;
            emit_plot(&table, &dir.join(format!("{}.svg", spec.name)))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exec(args: &[&str]) -> (Result<()>, String) {
        let cli = Cli::try_parse_from(std::iter::once("bonus").chain(args.iter().copied())).unwrap();
        let mut buf = Vec::new();
        let res = execute(cli, &mut buf);
        (res, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn lemma_check_reports_zero_violations() {
        let (res, text) = exec(&["lemma-check"]);
        res.unwrap();
        assert!(text.contains("violations: 0"), "{text}");
    }

    #[test]
    fn run_missing_file_fails() {
        let (res, _) = exec(&["run", "/no/such/missing.csv"]);
        let err = res.unwrap_err();
        assert!(err.to_string().contains("missing.csv"), "{err}");
    }

    #[test]
    fn learner_specs() {
        let model = NullModel::gaussian(3).unwrap();
        assert_eq!(parse_learner("mle:2", &model).unwrap().name(), "twogroup-k2");
        assert_eq!(parse_learner("pca:1", &model).unwrap().name(), "lowrank-k1");
        assert_eq!(parse_learner("empca:3", &model).unwrap().name(), "empca-k3");
        assert!(parse_learner("pca:4", &model).is_err());
        assert!(parse_learner("svm:1", &model).is_err());
        assert!(parse_learner("pca", &model).is_err());
    }
}

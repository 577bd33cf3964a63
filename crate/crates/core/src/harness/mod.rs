//! Replicated Monte Carlo experiments, metrics, the lemma sweep and
//! CSV/SVG output.

pub mod experiments;
pub mod lemma;
pub mod metrics;
pub mod output;

pub use experiments::{
    baseline_pvalues, experiment_calibration, experiment_gaussian_lowrank, experiment_intro, experiment_multinomial,
    mle, procedure_rng, replicate, Baseline, ExperimentSpec, LearnerSpec, NamedProcedure, Procedure, ScenarioSpec,
    MULTINOMIAL_DELTA, MULTINOMIAL_DIMS, RANK_SWEEP,
};
pub use lemma::{lemma_sweep, LemmaCase, LemmaReport};
pub use metrics::{fdp_and_power, Aggregate, MeanSe, MetricsRow, MetricsTable};
pub use output::{emit_csv, emit_plot, read_csv, render_svg};

//! `key = value` configuration files with `[section]` headers.
//!
//! ```text
//! experiment = intro          # intro | gaussian-lowrank | multinomial | calibration
//! seed = 7
//! scale = 0.2
//! replications = 50
//! alpha = 0.05, 0.1, 0.2
//! n_tilde = auto              # or an integer
//! sparse = true               # regime used to resolve `auto`
//! n_tilde_plus = 4000
//! batch = auto                # or an integer
//! refit_every = 0
//! output_dir = results
//! timing = false
//!
//! [scenario]
//! n = 2000
//! n1 = 100
//! dim = 10
//! rank = 1
//! strength = 4
//! trials = 2000
//! delta = 0.1
//!
//! [procedures]
//! list = glrt-bh, oracle-bh, bonus-bh-k1
//! ```
//!
//! `#` starts a comment. Only `experiment` and `seed` are required.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::engine::{choose_ntilde, Batch};
use crate::error::{BonusError, Result};
use crate::harness::{
    experiment_calibration, experiment_gaussian_lowrank, experiment_intro, experiment_multinomial, ExperimentSpec,
    ScenarioSpec,
};

pub const EXPERIMENTS: [&str; 4] = ["intro", "gaussian-lowrank", "multinomial", "calibration"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NTildeSetting {
    /// The experiment's own choice.
    Preset,
    /// `choose_ntilde(n, min α, sparse)`.
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioOverrides {
    pub n: Option<usize>,
    pub n1: Option<usize>,
    pub dim: Option<usize>,
    pub rank: Option<usize>,
    pub strength: Option<f64>,
    pub trials: Option<u64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub experiment: String,
    pub seed: u64,
    pub scale: Option<f64>,
    pub replications: Option<usize>,
    pub alphas: Option<Vec<f64>>,
    pub n_tilde: NTildeSetting,
    pub sparse: bool,
    pub n_tilde_plus: Option<usize>,
    pub batch: Option<Batch>,
    pub refit_every: Option<usize>,
    pub output_dir: PathBuf,
    pub timing: bool,
    pub scenario: ScenarioOverrides,
    pub procedures: Option<Vec<String>>,
}

impl Config {
    /// Defaults for everything except the required keys.
    pub fn new(experiment: impl Into<String>, seed: u64) -> Self {
        Config {
            experiment: experiment.into(),
            seed,
            scale: None,
            replications: None,
            alphas: None,
            n_tilde: NTildeSetting::Preset,
            sparse: true,
            n_tilde_plus: None,
            batch: None,
            refit_every: None,
            output_dir: PathBuf::from("bonus-out"),
            timing: false,
            scenario: ScenarioOverrides::default(),
            procedures: None,
        }
    }

    /// Scale used when none is configured.
    pub fn default_scale(experiment: &str) -> f64 {
        match experiment {
            "intro" | "calibration" => 0.2,
            "gaussian-lowrank" => 0.4,
            _ => 1.0,
        }
    }

    /// Experiment specs with every override applied and `auto` resolved.
    pub fn to_specs(&self) -> Result<Vec<ExperimentSpec>> {
        let scale = self.scale.unwrap_or_else(|| Self::default_scale(&self.experiment));
        let mut specs = match self.experiment.as_str() {
            "intro" => vec![experiment_intro(scale)?],
            "gaussian-lowrank" => vec![experiment_gaussian_lowrank(scale)?],
            "calibration" => vec![experiment_calibration(scale)?],
            "multinomial" => {
                let all = experiment_multinomial(scale)?;
                match self.scenario.dim {
                    None => all,
                    Some(d) => {
                        let mut spec = all.into_iter().next().expect("at least one dimension");
                        spec.name = format!("multinomial-d{d}");
                        for p in &mut spec.procedures {
                            p.name = p.name.replace("-d6", &format!("-d{d}"));
                        }
                        vec![spec]
                    }
                }
            }
            other => {
                return Err(BonusError::invalid(
                    "experiment",
                    format!("unknown experiment {other:?}; expected one of {}", EXPERIMENTS.join(", ")),
                ))
            }
        };
        for spec in &mut specs {
            self.apply(spec)?;
        }
        Ok(specs)
    }

    fn apply(&self, spec: &mut ExperimentSpec) -> Result<()> {
        spec.base_seed = self.seed.wrapping_add(spec.base_seed);
        if let Some(r) = self.replications {
            spec.replications = r;
        }
        if let Some(a) = &self.alphas {
            spec.alphas = a.clone();
        }
        let o = &self.scenario;
        let old_n = spec.scenario.n() as f64;
        let ratio = |t: Option<usize>| t.map(|t| t as f64 / old_n);
        let (tilde_ratio, plus_ratio) = (ratio(spec.n_tilde), ratio(spec.n_tilde_plus));
        match &mut spec.scenario {
            ScenarioSpec::GaussianLowRank {
                dim,
                n,
                n1,
                rank,
                strength,
            } => {
                if o.trials.is_some() || o.delta.is_some() {
                    return Err(BonusError::invalid(
                        "scenario",
                        "trials and delta only apply to the multinomial experiment",
                    ));
                }
                *dim = o.dim.unwrap_or(*dim);
                *n = o.n.unwrap_or(*n);
                *n1 = o.n1.unwrap_or(*n1);
                *rank = o.rank.unwrap_or(*rank);
                *strength = o.strength.unwrap_or(*strength);
            }
            ScenarioSpec::Multinomial {
                dim,
                trials,
                n,
                n1,
                delta,
            } => {
                if o.rank.is_some() || o.strength.is_some() {
                    return Err(BonusError::invalid(
                        "scenario",
                        "rank and strength only apply to Gaussian experiments",
                    ));
                }
                *dim = o.dim.unwrap_or(*dim);
                *n = o.n.unwrap_or(*n);
                *n1 = o.n1.unwrap_or(*n1);
                *trials = o.trials.unwrap_or(*trials);
                *delta = o.delta.unwrap_or(*delta);
            }
        }
        let new_n = spec.scenario.n() as f64;
        let rescale = |r: Option<f64>| r.map(|r| ((r * new_n).round() as usize).max(1));
        spec.n_tilde_plus = rescale(plus_ratio);
        spec.n_tilde = match self.n_tilde {
            NTildeSetting::Preset => rescale(tilde_ratio),
            NTildeSetting::Auto => {
                let alpha = spec.alphas.iter().copied().fold(f64::INFINITY, f64::min);
                Some(choose_ntilde(spec.scenario.n(), alpha, self.sparse).max(1))
            }
            NTildeSetting::Fixed(t) => Some(t),
        };
        if let Some(p) = self.n_tilde_plus {
            spec.n_tilde_plus = Some(p);
        }
        if let Some(b) = self.batch {
            spec.batch = b;
        }
        if let Some(r) = self.refit_every {
            for p in &mut spec.procedures {
                if let crate::harness::Procedure::Bonus { refit_every, .. } = &mut p.procedure {
                    *refit_every = r;
                }
            }
        }
        if let Some(list) = &self.procedures {
            let known: Vec<String> = spec.procedures.iter().map(|p| p.name.clone()).collect();
            for want in list {
                if !known.iter().any(|k| procedure_matches(k, want)) {
                    return Err(BonusError::invalid(
                        "procedures",
                        format!("{want:?} is not a procedure of {}; known: {}", spec.name, known.join(", ")),
                    ));
                }
            }
            spec.procedures.retain(|p| list.iter().any(|w| procedure_matches(&p.name, w)));
        }
        spec.record_runtime = self.timing;
        spec.validate()
    }
}

/// `want` names the procedure exactly or up to a trailing `-d<dim>` tag.
fn procedure_matches(name: &str, want: &str) -> bool {
    if name == want {
        return true;
    }
    match name.rsplit_once("-d") {
        Some((stem, tail)) => stem == want && tail.chars().all(|c| c.is_ascii_digit()),
        None => false,
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str, what: &str) -> Result<T> {
    value.parse().map_err(|_| BonusError::Config {
        line,
        message: format!("{key}: expected {what}, got {value:?}"),
    })
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(BonusError::Config {
            line,
            message: format!("{key}: expected true or false, got {value:?}"),
        }),
    }
}

fn parse_alpha(line: usize, key: &str, value: &str) -> Result<f64> {
    let a: f64 = parse_value(line, key, value, "a number")?;
    if !(a > 0.0 && a < 1.0) {
        return Err(BonusError::Config {
            line,
            message: format!("{key}: {a} must lie in the open interval (0, 1)"),
        });
    }
    Ok(a)
}

fn parse_positive(line: usize, key: &str, value: &str) -> Result<f64> {
    let v: f64 = parse_value(line, key, value, "a number")?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(BonusError::Config {
            line,
            message: format!("{key}: must be positive, got {value}"),
        });
    }
    Ok(v)
}

fn list(value: &str) -> Vec<&str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<Config> {
    let mut cfg = Config::new("", 0);
    let mut experiment = None;
    let mut seed = None;
    let mut section = String::new();
    let mut seen: Vec<String> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| BonusError::Config {
                line,
                message: format!("malformed section header {content:?}"),
            })?;
            let name = name.trim();
            if !matches!(name, "scenario" | "procedures") {
                return Err(BonusError::Config {
                    line,
                    message: format!("unknown section [{name}]"),
                });
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| BonusError::Config {
            line,
            message: format!("expected `key = value`, got {content:?}"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let full = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        if seen.contains(&full) {
            return Err(BonusError::Config {
                line,
                message: format!("duplicate key {full}"),
            });
        }
        seen.push(full.clone());
        match full.as_str() {
            "experiment" => {
                if !EXPERIMENTS.contains(&value) {
                    return Err(BonusError::Config {
                        line,
                        message: format!(
                            "experiment: unknown experiment {value:?}; expected one of {}",
                            EXPERIMENTS.join(", ")
                        ),
                    });
                }
                experiment = Some(value.to_string());
            }
            "seed" => seed = Some(parse_value(line, key, value, "a non-negative integer")?),
            "scale" => cfg.scale = Some(parse_positive(line, key, value)?),
            "replications" => {
                let r: usize = parse_value(line, key, value, "a positive integer")?;
                if r == 0 {
                    return Err(BonusError::Config {
                        line,
                        message: "replications: must be at least 1".into(),
                    });
                }
                cfg.replications = Some(r);
            }
            "alpha" => {
                let items = list(value);
                if items.is_empty() {
                    return Err(BonusError::Config {
                        line,
                        message: "alpha: expected at least one value".into(),
                    });
                }
                cfg.alphas = Some(items.iter().map(|v| parse_alpha(line, key, v)).collect::<Result<_>>()?);
            }
            "n_tilde" => {
                cfg.n_tilde = if value == "auto" {
                    NTildeSetting::Auto
                } else {
                    let t: usize = parse_value(line, key, value, "`auto` or a positive integer")?;
                    if t == 0 {
                        return Err(BonusError::Config {
                            line,
                            message: "n_tilde: must be at least 1".into(),
                        });
                    }
                    NTildeSetting::Fixed(t)
                }
            }
            "sparse" => cfg.sparse = parse_bool(line, key, value)?,
            "n_tilde_plus" => {
                cfg.n_tilde_plus = if value == "auto" {
                    None
                } else {
                    Some(parse_value(line, key, value, "`auto` or a positive integer")?)
                }
            }
            "batch" => {
                cfg.batch = Some(if value == "auto" {
                    Batch::Auto
                } else {
                    let b: usize = parse_value(line, key, value, "`auto` or a positive integer")?;
                    if b == 0 {
                        return Err(BonusError::Config {
                            line,
                            message: "batch: must be at least 1".into(),
                        });
                    }
                    Batch::Fixed(b)
                })
            }
            "refit_every" => cfg.refit_every = Some(parse_value(line, key, value, "a non-negative integer")?),
            "output_dir" => cfg.output_dir = PathBuf::from(value),
            "timing" => cfg.timing = parse_bool(line, key, value)?,
            "scenario.n" => cfg.scenario.n = Some(parse_value(line, key, value, "a positive integer")?),
            "scenario.n1" => cfg.scenario.n1 = Some(parse_value(line, key, value, "a non-negative integer")?),
            "scenario.dim" => cfg.scenario.dim = Some(parse_value(line, key, value, "a positive integer")?),
            "scenario.rank" => cfg.scenario.rank = Some(parse_value(line, key, value, "a positive integer")?),
            "scenario.strength" => cfg.scenario.strength = Some(parse_positive(line, key, value)?),
            "scenario.trials" => cfg.scenario.trials = Some(parse_value(line, key, value, "a positive integer")?),
            "scenario.delta" => cfg.scenario.delta = Some(parse_value(line, key, value, "a number in [0, 1)")?),
            "procedures.list" => cfg.procedures = Some(list(value).into_iter().map(String::from).collect()),
            _ => {
                return Err(BonusError::Config {
                    line,
                    message: format!("unknown key {full}"),
                })
            }
        }
    }
    let missing = |key: &str| BonusError::Config {
        line: 0,
        message: format!("missing required key {key}"),
    };
    cfg.experiment = experiment.ok_or_else(|| missing("experiment"))?;
    cfg.seed = seed.ok_or_else(|| missing("seed"))?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path).map_err(|e| BonusError::io(path, e))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg = parse_config("experiment = intro\nseed = 7\n").unwrap();
        let mut expected = Config::new("intro", 7);
        expected.experiment = "intro".into();
        assert_eq!(cfg, expected);
        let specs = cfg.to_specs().unwrap();
        assert_eq!(specs.len(), 1);
        assert_eq!(specs[0].scenario.n(), 2000);
    }

    #[test]
    fn alpha_out_of_range_names_key() {
        let err = parse_config("experiment = intro\nseed = 1\nalpha = 1.5\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("alpha") && msg.contains("(0, 1)"), "{msg}");
    }

    #[test]
    fn auto_n_tilde_resolves_sparse() {
        let text = "experiment = intro\nseed = 1\nalpha = 0.05\nn_tilde = auto\n[scenario]\nn = 1000\nn1 = 50\n";
        let specs = parse_config(text).unwrap().to_specs().unwrap();
        assert_eq!(specs[0].n_tilde, Some(20_000));
        let dense = text.replace("n_tilde = auto", "n_tilde = auto\nsparse = false");
        let specs = parse_config(&dense).unwrap().to_specs().unwrap();
        assert_eq!(specs[0].n_tilde, Some(1000));
    }

    #[test]
    fn unknown_key_and_type_errors() {
        let err = parse_config("experiment = intro\nseed = 1\nwibble = 3\n").unwrap_err();
        assert!(err.to_string().contains("line 3: unknown key wibble"));
        let err = parse_config("experiment = intro\nseed = x\n").unwrap_err();
        assert!(err.to_string().contains("line 2"));
        let err = parse_config("seed = 4\n").unwrap_err();
        assert!(err.to_string().contains("missing required key experiment"));
        let err = parse_config("experiment = intro\nseed = 1\n[foo]\n").unwrap_err();
        assert!(err.to_string().contains("unknown section"));
        let err = parse_config("experiment = intro\nseed = 1\nseed = 2\n").unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn sections_and_lists() {
        let text = "# demo\nexperiment = multinomial\nseed = 3\nreplications = 2\n\n[scenario]\ndim = 8 # even\nn = 300\nn1 = 30\n[procedures]\nlist = chisq-bh, bonus-bh\n";
        let specs = parse_config(text).unwrap().to_specs().unwrap();
        assert_eq!(specs.len(), 1);
        let s = &specs[0];
        assert_eq!(s.scenario.dim(), 8);
        assert_eq!(s.replications, 2);
        let names: Vec<&str> = s.procedures.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["chisq-bh-d8", "bonus-bh-d8"]);
    }

    #[test]
    fn unknown_procedure_is_rejected() {
        let cfg = parse_config("experiment = intro\nseed = 1\n[procedures]\nlist = nope\n").unwrap();
        assert!(cfg.to_specs().is_err());
    }
}

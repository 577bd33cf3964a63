//! FDP estimators, the stopping rule, and the hypergeometric expectations
//! behind their martingale argument.

use statrs::function::factorial::ln_binomial;

use crate::error::{BonusError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FdpKind {
    Bh,
    /// Storey-type estimator with correction set = bottom `correction_quantile`
    /// of the initial scores.
    Storey { correction_quantile: f64 },
}

impl FdpKind {
    pub const DEFAULT_STOREY_QUANTILE: f64 = 0.3;

    pub fn storey() -> Self {
        FdpKind::Storey {
            correction_quantile: Self::DEFAULT_STOREY_QUANTILE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let FdpKind::Storey { correction_quantile: q } = *self {
            if !(q > 0.0 && q < 1.0) {
                return Err(BonusError::invalid(
                    "correction_quantile",
                    format!("must lie in (0, 1), got {q}"),
                ));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> &'static str {
        match self {
            FdpKind::Bh => "bh",
            FdpKind::Storey { .. } => "storey",
        }
    }
}

/// Counts feeding an estimate. `correction` is `(N(A), Ñ(A))` for Storey.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdpEstimate {
    pub value: f64,
    pub real_in_region: usize,
    pub synthetic_in_region: usize,
    pub correction: Option<(usize, usize)>,
}

/// `(n/(ñ+1)) · (Ñ(R)+1) / max(1, N(R))`.
pub fn fdp_bh(n: usize, n_tilde: usize, real_in_region: usize, synthetic_in_region: usize) -> f64 {
    (n as f64 / (n_tilde as f64 + 1.0)) * (synthetic_in_region as f64 + 1.0)
        / real_in_region.max(1) as f64
}

/// `((N(A)+1)/Ñ(A)) · (Ñ(R)+1) / max(1, N(R))`, and `+∞` when `Ñ(A) = 0`.
pub fn fdp_storey(
    real_in_correction: usize,
    synthetic_in_correction: usize,
    real_in_region: usize,
    synthetic_in_region: usize,
) -> f64 {
    if synthetic_in_correction == 0 {
        return f64::INFINITY;
    }
    ((real_in_correction as f64 + 1.0) / synthetic_in_correction as f64)
        * (synthetic_in_region as f64 + 1.0)
        / real_in_region.max(1) as f64
}

pub fn should_stop(fdp: f64, alpha: f64, real_in_region: usize) -> bool {
    fdp <= alpha || real_in_region == 0
}

/// Exact `E[V/(1+U)]` and `E[(V/(1+U)) · (b−U)/(1+a−V)]` for
/// `V ~ Hypergeom(a+b, a, k)` (population `a+b`, `a` marked, `k` draws) and
/// `U = k − V`, by summing over the support.
pub fn hypergeom_expectations(a: u64, b: u64, k: u64) -> Result<(f64, f64)> {
    if k > a + b {
        return Err(BonusError::invalid(
            "k",
            format!("draws {k} exceed population {}", a + b),
        ));
    }
    let lo = k.saturating_sub(b);
    let hi = k.min(a);
    let log_total = ln_binomial(a + b, k);
    let (mut e1, mut e2) = (0.0, 0.0);
    for v in lo..=hi {
        let u = k - v;
        let p = (ln_binomial(a, v) + ln_binomial(b, u) - log_total).exp();
        let ratio = v as f64 / (1.0 + u as f64);
        e1 += p * ratio;
        e2 += p * ratio * (b - u) as f64 / (1.0 + (a - v) as f64);
    }
    Ok((e1, e2))
}

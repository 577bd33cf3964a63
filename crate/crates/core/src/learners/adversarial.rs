//! A learner built to overfit: it memorises the pooled points it likes and,
//! on every refit, chases whatever the revealed labels suggest. Used to check
//! that FDR control does not depend on the learner behaving well.

use std::collections::HashMap;
use std::sync::Arc;

use super::Learner;
use crate::error::Result;
use crate::linalg::{sorted_eigen, sym_from_row_major};
use crate::pool::MaskView;
use crate::statistic::Statistic;

#[derive(Debug, Clone)]
pub struct AdversarialLearner {
    /// Fraction of pooled points (largest norm first) given a memorised bonus.
    pub memorize_fraction: f64,
}

impl Default for AdversarialLearner {
    fn default() -> Self {
        AdversarialLearner {
            memorize_fraction: 0.05,
        }
    }
}

fn key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

/// Deterministic pseudo-random jitter in [0, 1) keyed on the bit pattern.
fn jitter(x: &[f64]) -> f64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in x {
        h ^= v.to_bits();
        h = h.wrapping_mul(0x0100_0000_01b3);
        h ^= h >> 29;
    }
    (h >> 11) as f64 / (1u64 << 53) as f64
}

impl AdversarialLearner {
    fn memorised(&self, view: &MaskView<'_>) -> Arc<HashMap<Vec<u64>, f64>> {
        let points = view.points();
        let mut order: Vec<(f64, usize)> = points
            .rows()
            .enumerate()
            .map(|(j, x)| (x.iter().map(|v| v * v).sum::<f64>(), j))
            .collect();
        order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let keep = ((points.len() as f64) * self.memorize_fraction).ceil() as usize;
        Arc::new(
            order
                .into_iter()
                .take(keep)
                .map(|(_, j)| (key(points.row(j)), 1e3 + jitter(points.row(j))))
                .collect(),
        )
    }

    fn build(&self, table: Arc<HashMap<Vec<u64>, f64>>, direction: Option<Vec<f64>>) -> Statistic {
        Statistic::new("adversarial", move |x| {
            let base = match &direction {
                Some(u) => {
                    let p: f64 = u.iter().zip(x).map(|(a, b)| a * b).sum();
                    p * p
                }
                None => x.iter().map(|v| v * v).sum(),
            };
            base + table.get(&key(x)).copied().unwrap_or(0.0) + 1e-3 * jitter(x)
        })
    }
}

impl Learner for AdversarialLearner {
    fn name(&self) -> String {
        "adversarial".into()
    }

    fn fit(&self, view: &MaskView<'_>) -> Result<Statistic> {
        Ok(self.build(self.memorised(view), None))
    }

    /// Top eigenvector of (second moment of revealed reals) minus (second
    /// moment of revealed synthetics).
    fn refit(
        &self,
        view: &MaskView<'_>,
        current: &Statistic,
        _newly_revealed: &[(usize, bool)],
    ) -> Result<Statistic> {
        let points = view.points();
        let d = points.dim();
        let mut diff = vec![0.0; d * d];
        let (mut n_real, mut n_synth) = (0usize, 0usize);
        for (_, is_real) in view.revealed() {
            if is_real {
                n_real += 1;
            } else {
                n_synth += 1;
            }
        }
        if n_real == 0 || n_synth == 0 {
            return Ok(current.clone());
        }
        for (j, is_real) in view.revealed() {
            let x = points.row(j);
            let w = if is_real {
                1.0 / n_real as f64
            } else {
                -1.0 / n_synth as f64
            };
            for a in 0..d {
                for b in 0..d {
                    diff[a * d + b] += w * x[a] * x[b];
                }
            }
        }
        let eig = sorted_eigen(&sym_from_row_major(d, &diff))?;
        let direction = eig.vectors.into_iter().next();
        Ok(self.build(self.memorised(view), direction))
    }
}

use crate::error::{BonusError, Result};
use crate::points::Points;
use crate::statistic::Statistic;

/// Empirical p-values of a statistic against a fixed set of null draws:
/// `(1 + #{j : T(null_j) ≥ T(x)}) / (m + 1)`. Ties count against rejection.
#[derive(Debug, Clone)]
pub struct EmpiricalPvalues {
    statistic: Statistic,
    sorted_null: Vec<f64>,
}

impl EmpiricalPvalues {
    pub fn new(statistic: Statistic, null_samples: &Points) -> Result<Self> {
        if null_samples.is_empty() {
            return Err(BonusError::invalid(
                "null_samples",
                "at least one null draw is required",
            ));
        }
        let mut sorted_null = statistic.scores(null_samples);
        sorted_null.sort_by(f64::total_cmp);
        Ok(EmpiricalPvalues {
            statistic,
            sorted_null,
        })
    }

    pub fn pvalue_of_score(&self, score: f64) -> f64 {
        let below = self.sorted_null.partition_point(|&v| v < score);
        let at_least = self.sorted_null.len() - below;
        (1 + at_least) as f64 / (self.sorted_null.len() + 1) as f64
    }

    pub fn pvalue(&self, x: &[f64]) -> f64 {
        self.pvalue_of_score(self.statistic.eval(x))
    }

    pub fn pvalues(&self, points: &Points) -> Vec<f64> {
        points.rows().map(|x| self.pvalue(x)).collect()
    }
}

pub fn empirical_pvalue(stat: &Statistic, x: &[f64], null_samples: &Points) -> Result<f64> {
    Ok(EmpiricalPvalues::new(stat.clone(), null_samples)?.pvalue(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nulls(v: &[f64]) -> Points {
        Points::from_flat(1, v.to_vec()).unwrap()
    }

    fn ident() -> Statistic {
        Statistic::new("id", |x| x[0])
    }

    #[test]
    fn extreme_rank() {
        let p = empirical_pvalue(&ident(), &[10.0], &nulls(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert!((p - 0.2).abs() < 1e-15);
    }

    #[test]
    fn smallest_score_gets_one() {
        let p = empirical_pvalue(&ident(), &[1.0], &nulls(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn ties_count_against_rejection() {
        // exactly two null scores ≥ 3.0 (one tie)
        let p = empirical_pvalue(&ident(), &[3.0], &nulls(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert!((p - 3.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn empty_nulls_rejected() {
        assert!(empirical_pvalue(&ident(), &[0.0], &Points::new(1)).is_err());
    }
}

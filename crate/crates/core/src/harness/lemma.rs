//! Exhaustive check of the hypergeometric inequalities behind the FDR bound:
//! with `V ~ Hypergeom(a + b, a, k)` and `U = k − V`,
//! `E[V/(1+U)] ≤ a/(1+b)` and `E[V/(1+U) · (b−U)/(1+a−V)] ≤ 1`.

use crate::error::Result;
use crate::estimators::hypergeom_expectations;

pub const LEMMA_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaCase {
    pub a: u64,
    pub b: u64,
    pub k: u64,
    pub e1: f64,
    pub bound1: f64,
    pub e2: f64,
}

impl LemmaCase {
    /// `bound − expectation` for the first inequality.
    pub fn slack1(&self) -> f64 {
        self.bound1 - self.e1
    }

    pub fn slack2(&self) -> f64 {
        1.0 - self.e2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub cases: usize,
    /// Largest `expectation − bound` seen; non-positive when both hold.
    pub max_excess1: f64,
    pub max_excess2: f64,
    pub violations: Vec<LemmaCase>,
    /// Cases where the first inequality holds with equality (to tolerance).
    pub tight1: Vec<LemmaCase>,
    pub tight2: Vec<LemmaCase>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every `a ≤ a_max`, `b ≤ b_max`, `0 ≤ k ≤ a + b`.
pub fn lemma_sweep(a_max: u64, b_max: u64) -> Result<LemmaReport> {
    let mut report = LemmaReport {
        cases: 0,
        max_excess1: f64::NEG_INFINITY,
        max_excess2: f64::NEG_INFINITY,
        violations: Vec::new(),
        tight1: Vec::new(),
        tight2: Vec::new(),
    };
    for a in 0..=a_max {
        for b in 0..=b_max {
            let bound1 = a as f64 / (1 + b) as f64;
            for k in 0..=(a + b) {
                let (e1, e2) = hypergeom_expectations(a, b, k)?;
                let case = LemmaCase { a, b, k, e1, bound1, e2 };
                report.cases += 1;
                report.max_excess1 = report.max_excess1.max(-case.slack1());
                report.max_excess2 = report.max_excess2.max(-case.slack2());
                if case.slack1() < -LEMMA_TOLERANCE || case.slack2() < -LEMMA_TOLERANCE {
                    report.violations.push(case);
                }
                if bound1 > 0.0 && case.slack1().abs() <= LEMMA_TOLERANCE {
                    report.tight1.push(case);
                }
                if case.slack2().abs() <= LEMMA_TOLERANCE {
                    report.tight2.push(case);
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_to_twelve_has_no_violations() {
        let r = lemma_sweep(12, 12).unwrap();
        assert!(r.passed());
        assert!(r.max_excess1 <= LEMMA_TOLERANCE);
        assert!(r.max_excess2 <= LEMMA_TOLERANCE);
        // Σ_{a,b ≤ 12} (a + b + 1)
        assert_eq!(r.cases, 13 * 13 * 13);
    }

    #[test]
    fn two_two_two_is_tight() {
        let r = lemma_sweep(2, 2).unwrap();
        let c = r.tight1.iter().find(|c| (c.a, c.b, c.k) == (2, 2, 2)).unwrap();
        assert!((c.e1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn full_draw_is_always_tight() {
        let r = lemma_sweep(6, 6).unwrap();
        for a in 1..=6 {
            for b in 0..=6 {
                assert!(r.tight1.iter().any(|c| (c.a, c.b, c.k) == (a, b, a + b)));
            }
        }
    }

    #[test]
    fn a_zero_is_trivial() {
        let r = lemma_sweep(0, 5).unwrap();
        assert!(r.passed());
        assert_eq!(r.max_excess1, 0.0);
        assert!(r.tight1.is_empty());
    }
}

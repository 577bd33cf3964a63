//! Per-run metrics and their (procedure, alpha) aggregates.

use std::collections::BTreeMap;

/// One procedure run inside one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub procedure: String,
    pub alpha: f64,
    pub replication: usize,
    pub fdp: f64,
    pub power: f64,
    pub rejections: usize,
    pub runtime_ms: f64,
    /// Free-form annotation, e.g. the learner Double BONuS selected.
    pub detail: String,
    /// Set when the procedure failed; metrics are then zero.
    pub error: Option<String>,
}

impl MetricsRow {
    /// Metrics for `rejected` (indices into the hypotheses) against `truth`.
    pub fn from_rejections(
        procedure: &str,
        alpha: f64,
        replication: usize,
        rejected: &[usize],
        truth: &[bool],
    ) -> Self {
        let (fdp, power) = fdp_and_power(rejected, truth);
        MetricsRow {
            procedure: procedure.to_string(),
            alpha,
            replication,
            fdp,
            power,
            rejections: rejected.len(),
            runtime_ms: 0.0,
            detail: String::new(),
            error: None,
        }
    }

    pub fn failed(procedure: &str, alpha: f64, replication: usize, message: String) -> Self {
        MetricsRow {
            procedure: procedure.to_string(),
            alpha,
            replication,
            fdp: 0.0,
            power: 0.0,
            rejections: 0,
            runtime_ms: 0.0,
            detail: String::new(),
            error: Some(message),
        }
    }
}

/// `FDP = V / max(1, R)`, `power = (R − V) / n1` (0 when `n1 = 0`).
pub fn fdp_and_power(rejected: &[usize], truth: &[bool]) -> (f64, f64) {
    let true_rejections = rejected.iter().filter(|&&i| truth[i]).count();
    let false_rejections = rejected.len() - true_rejections;
    let n1 = truth.iter().filter(|&&t| t).count();
    let fdp = false_rejections as f64 / rejected.len().max(1) as f64;
    let power = if n1 == 0 {
        0.0
    } else {
        true_rejections as f64 / n1 as f64
    };
    (fdp, power)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    /// Sample mean and `sd / √m` (sd with the `m − 1` divisor; 0 for `m < 2`).
    pub fn of(values: &[f64]) -> Self {
        let m = values.len();
        if m == 0 {
            return MeanSe { mean: f64::NAN, se: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / m as f64;
        if m < 2 {
            return MeanSe { mean, se: 0.0 };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
        MeanSe {
            mean,
            se: (var / m as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub procedure: String,
    pub alpha: f64,
    /// Successful runs only.
    pub runs: usize,
    pub failures: usize,
    pub fdp: MeanSe,
    pub power: MeanSe,
    pub rejections: MeanSe,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsTable {
    pub rows: Vec<MetricsRow>,
}

impl MetricsTable {
    pub fn new(rows: Vec<MetricsRow>) -> Self {
        MetricsTable { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn extend(&mut self, other: MetricsTable) {
        self.rows.extend(other.rows);
    }

    /// Procedure names in order of first appearance.
    pub fn procedures(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.procedure) {
                out.push(r.procedure.clone());
            }
        }
        out
    }

    pub fn rows_for<'a>(&'a self, procedure: &'a str, alpha: f64) -> impl Iterator<Item = &'a MetricsRow> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.procedure == procedure && r.alpha == alpha)
    }

    pub fn aggregate_for(&self, procedure: &str, alpha: f64) -> Option<Aggregate> {
        let rows: Vec<&MetricsRow> = self.rows_for(procedure, alpha).collect();
        if rows.is_empty() {
            return None;
        }
        let ok: Vec<&&MetricsRow> = rows.iter().filter(|r| r.error.is_none()).collect();
        let col = |f: fn(&MetricsRow) -> f64| MeanSe::of(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
        Some(Aggregate {
            procedure: procedure.to_string(),
            alpha,
            runs: ok.len(),
            failures: rows.len() - ok.len(),
            fdp: col(|r| r.fdp),
            power: col(|r| r.power),
            rejections: col(|r| r.rejections as f64),
        })
    }

    /// One aggregate per (procedure, alpha), procedures in first-appearance
    /// order and alphas ascending.
    pub fn aggregates(&self) -> Vec<Aggregate> {
        let mut alphas: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for r in &self.rows {
            let list = alphas.entry(r.procedure.clone()).or_default();
            if !list.contains(&r.alpha) {
                list.push(r.alpha);
            }
        }
        let mut out = Vec::new();
        for p in self.procedures() {
            let mut list = alphas.remove(&p).unwrap_or_default();
            list.sort_by(f64::total_cmp);
            for a in list {
                out.extend(self.aggregate_for(&p, a));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fdp_power_definitions() {
        let truth = [true, true, false, false, false];
        assert_eq!(fdp_and_power(&[0, 2], &truth), (0.5, 0.5));
        assert_eq!(fdp_and_power(&[], &truth), (0.0, 0.0));
        assert_eq!(fdp_and_power(&[2], &[false, false, false]), (1.0, 0.0));
    }

    #[test]
    fn mean_se_by_hand() {
        let m = MeanSe::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        // var = 5/3, se = sqrt(5/12)
        assert!((m.se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(MeanSe::of(&[7.0]).se, 0.0);
    }

    #[test]
    fn aggregates_skip_failures() {
        let mut rows = vec![
            MetricsRow::from_rejections("a", 0.1, 0, &[0], &[true, false]),
            MetricsRow::from_rejections("a", 0.1, 1, &[1], &[true, false]),
        ];
        rows.push(MetricsRow::failed("a", 0.1, 2, "boom".into()));
        rows.push(MetricsRow::from_rejections("a", 0.05, 0, &[], &[true, false]));
        let table = MetricsTable::new(rows);
        let aggs = table.aggregates();
        assert_eq!(aggs.len(), 2);
        assert_eq!(aggs[0].alpha, 0.05);
        let a = &aggs[1];
        assert_eq!((a.runs, a.failures), (2, 1));
        assert_eq!(a.fdp.mean, 0.5);
        assert_eq!(a.power.mean, 0.5);
    }
}

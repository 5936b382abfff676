use serde::{Deserialize, Serialize};

use super::Criterion;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionCoverage {
    pub criterion: Criterion,
    pub covered: usize,
    pub total: usize,
    /// `covered / total`, or 1 when there is nothing to cover.
    pub ratio: f64,
}

impl CriterionCoverage {
    pub fn new(criterion: Criterion, covered: usize, total: usize) -> CriterionCoverage {
        let ratio = if total == 0 { 1.0 } else { covered as f64 / total as f64 };
        CriterionCoverage { criterion, covered, total, ratio }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    /// One entry per criterion in canonical order.
    pub criteria: Vec<CriterionCoverage>,
    /// Distinct (method, exception kind) pairs raised out of direct calls.
    pub ec_count: usize,
    /// Line ratio over branch ratio; absent when no branch is covered.
    pub theta_hat: Option<f64>,
}

impl CoverageReport {
    pub fn new(criteria: Vec<CriterionCoverage>) -> CoverageReport {
        let get = |c: Criterion| criteria.iter().find(|x| x.criterion == c);
        let ec_count = get(Criterion::Ec).map_or(0, |x| x.covered);
        let theta_hat = match (get(Criterion::Lc), get(Criterion::Bc)) {
            (Some(lc), Some(bc)) if bc.total > 0 && bc.covered > 0 && lc.total > 0 => Some(lc.ratio / bc.ratio),
            _ => None,
        };
        CoverageReport { criteria, ec_count, theta_hat }
    }

    pub fn get(&self, c: Criterion) -> Option<&CriterionCoverage> {
        self.criteria.iter().find(|x| x.criterion == c)
    }

    pub fn ratio(&self, c: Criterion) -> f64 {
        self.get(c).map_or(0.0, |x| x.ratio)
    }

    /// Column names of [`CoverageReport::csv_row`].
    pub fn csv_header() -> Vec<String> {
        let mut h: Vec<String> = Criterion::ALL.iter().map(|c| c.name().to_lowercase()).collect();
        h.push("ec_count".into());
        h.push("theta_hat".into());
        h
    }

    pub fn csv_row(&self) -> Vec<String> {
        let mut r: Vec<String> = Criterion::ALL.iter().map(|c| format!("{:.6}", self.ratio(*c))).collect();
        r.push(self.ec_count.to_string());
        r.push(self.theta_hat.map_or(String::new(), |t| format!("{t:.6}")));
        r
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(Self::csv_header()).expect("in-memory write");
        w.write_record(self.csv_row()).expect("in-memory write");
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
    }
}

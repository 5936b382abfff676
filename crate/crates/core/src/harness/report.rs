//! Summary tables over a run database.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::experiment::{read_runs, RunRow};
use super::{HarnessError, BIG_CLASS_BRANCHES};
use crate::goals::Criterion;
use crate::stats::{mean, summarize, OutcomeLabel, Samples, EC_COUNT_METRIC};

pub const SPLITS: [&str; 3] = ["all", "small", "big"];

/// Average coverage of one approach over one class split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub mode: String,
    pub split: String,
    pub classes: usize,
    pub runs: usize,
    pub bc: f64,
    pub dbc: f64,
    pub lc: f64,
    pub wm: f64,
    pub tmc: f64,
    pub ntmc: f64,
    pub ec: f64,
    pub oc: f64,
    pub ec_count: f64,
    pub suite_size: f64,
    pub suite_length: f64,
    pub theta_hat: Option<f64>,
}

/// Significant-case counts for one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub approach_a: String,
    pub approach_b: String,
    pub split: String,
    pub metric: String,
    pub a_outperforms: usize,
    pub b_outperforms: usize,
    pub no_significant: usize,
    pub absent: usize,
    pub mean_a: Option<f64>,
    pub mean_b: Option<f64>,
}

/// Per-class test result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub approach_a: String,
    pub approach_b: String,
    pub class: String,
    pub branches: usize,
    pub metric: String,
    pub mean_a: f64,
    pub mean_b: f64,
    pub p: f64,
    pub a12: f64,
    pub label: String,
    pub p_method: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcNormalizedRow {
    pub approach_a: String,
    pub approach_b: String,
    pub split: String,
    pub classes: usize,
    pub mean_a: Option<f64>,
    pub mean_b: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub runs: usize,
    pub coverage: Vec<CoverageRow>,
    pub outcomes: Vec<OutcomeRow>,
    pub comparisons: Vec<ComparisonRow>,
    pub ec_normalized: Vec<EcNormalizedRow>,
}

fn metric_names() -> Vec<&'static str> {
    let mut m: Vec<&str> = Criterion::ALL.iter().map(|c| c.name()).collect();
    m.push(EC_COUNT_METRIC);
    m
}

fn metric_value(r: &RunRow, m: &str) -> f64 {
    if m == EC_COUNT_METRIC {
        return r.ec_count as f64;
    }
    Criterion::ALL.iter().find(|c| c.name() == m).map_or(f64::NAN, |c| r.criterion(*c))
}

fn in_split(r: &RunRow, split: &str) -> bool {
    match split {
        "small" => r.branches < BIG_CLASS_BRANCHES,
        "big" => r.branches >= BIG_CLASS_BRANCHES,
        _ => true,
    }
}

fn opt(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Means of per-class means.
fn coverage_row(mode: &str, split: &str, rows: &[&RunRow]) -> Option<CoverageRow> {
    let mut by_class: BTreeMap<&str, Vec<&RunRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.mode == mode && in_split(r, split)) {
        by_class.entry(&r.class).or_default().push(r);
    }
    if by_class.is_empty() {
        return None;
    }
    let avg = |f: &dyn Fn(&RunRow) -> f64| -> f64 {
        let per: Vec<f64> = by_class.values().map(|rs| mean(&rs.iter().map(|r| f(r)).collect::<Vec<_>>())).collect();
        mean(&per)
    };
    let theta: Vec<f64> = by_class
        .values()
        .filter_map(|rs| {
            let t: Vec<f64> = rs.iter().filter_map(|r| r.theta_hat).collect();
            (!t.is_empty()).then(|| mean(&t))
        })
        .collect();
    Some(CoverageRow {
        mode: mode.to_string(),
        split: split.to_string(),
        classes: by_class.len(),
        runs: by_class.values().map(Vec::len).sum(),
        bc: avg(&|r| r.bc),
        dbc: avg(&|r| r.dbc),
        lc: avg(&|r| r.lc),
        wm: avg(&|r| r.wm),
        tmc: avg(&|r| r.tmc),
        ntmc: avg(&|r| r.ntmc),
        ec: avg(&|r| r.ec),
        oc: avg(&|r| r.oc),
        ec_count: avg(&|r| r.ec_count as f64),
        suite_size: avg(&|r| r.suite_size as f64),
        suite_length: avg(&|r| r.suite_length as f64),
        theta_hat: (!theta.is_empty()).then(|| mean(&theta)),
    })
}

/// Builds every summary table from run rows. The first approach compared is
/// `smart` when present, otherwise the first mode seen.
pub fn report(rows: &[RunRow]) -> Report {
    let mut modes: Vec<String> = Vec::new();
    for r in rows {
        if !modes.contains(&r.mode) {
            modes.push(r.mode.clone());
        }
    }
    modes.sort();
    let refs: Vec<&RunRow> = rows.iter().collect();
    let coverage =
        SPLITS.iter().flat_map(|s| modes.iter().filter_map(|m| coverage_row(m, s, &refs)).collect::<Vec<_>>()).collect();

    let base = if modes.iter().any(|m| m == "smart") { "smart".to_string() } else { modes.first().cloned().unwrap_or_default() };
    let metrics = metric_names();
    let branches: BTreeMap<&str, usize> = rows.iter().map(|r| (r.class.as_str(), r.branches)).collect();
    let mut outcomes = Vec::new();
    let mut comparisons = Vec::new();
    let mut ec_normalized = Vec::new();
    for other in modes.iter().filter(|m| **m != base) {
        for split in SPLITS {
            let mut samples = Samples::new();
            for r in rows.iter().filter(|r| in_split(r, split) && (r.mode == base || r.mode == *other)) {
                let cls = samples.entry(r.class.clone()).or_default().entry(r.mode.clone()).or_default();
                for m in &metrics {
                    cls.entry(m.to_string()).or_default().push(metric_value(r, m));
                }
            }
            if samples.is_empty() {
                continue;
            }
            let s = summarize(&samples, &base, other, &metrics);
            for ms in &s.metrics {
                outcomes.push(OutcomeRow {
                    approach_a: base.clone(),
                    approach_b: other.clone(),
                    split: split.to_string(),
                    metric: ms.metric.clone(),
                    a_outperforms: ms.counts.a_outperforms,
                    b_outperforms: ms.counts.b_outperforms,
                    no_significant: ms.counts.no_significant,
                    absent: ms.counts.absent,
                    mean_a: opt(ms.mean_a),
                    mean_b: opt(ms.mean_b),
                });
            }
            let na: Vec<f64> = s.ec_normalized.iter().map(|x| x.1).collect();
            let nb: Vec<f64> = s.ec_normalized.iter().map(|x| x.2).collect();
            ec_normalized.push(EcNormalizedRow {
                approach_a: base.clone(),
                approach_b: other.clone(),
                split: split.to_string(),
                classes: na.len(),
                mean_a: opt(mean(&na)),
                mean_b: opt(mean(&nb)),
            });
            if split == "all" {
                comparisons.extend(s.outcomes.into_iter().map(|o| ComparisonRow {
                    approach_a: base.clone(),
                    approach_b: other.clone(),
                    branches: branches.get(o.class.as_str()).copied().unwrap_or(0),
                    class: o.class,
                    metric: o.metric,
                    mean_a: o.mean_a,
                    mean_b: o.mean_b,
                    p: o.p,
                    a12: o.a12,
                    label: o.label.name().to_string(),
                    p_method: o.method.to_string(),
                }));
            }
        }
    }
    Report { runs: rows.len(), coverage, outcomes, comparisons, ec_normalized }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

impl Report {
    pub fn digest(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "runs: {}", self.runs);
        for split in SPLITS {
            let rows: Vec<&CoverageRow> = self.coverage.iter().filter(|r| r.split == split).collect();
            if rows.is_empty() {
                continue;
            }
            let label = match split {
                "small" => format!("small classes (< {BIG_CLASS_BRANCHES} branches)"),
                "big" => format!("big classes (>= {BIG_CLASS_BRANCHES} branches)"),
                _ => "all classes".to_string(),
            };
            let _ = writeln!(s, "\n== {label} ==");
            let _ = writeln!(
                s,
                "{:<12} {:>4} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6} {:>7} {:>6} {:>6}",
                "mode", "cls", "BC", "DBC", "LC", "WM", "TMC", "NTMC", "EC", "OC", "#exc", "size", "theta"
            );
            for r in rows {
                let _ = writeln!(
                    s,
                    "{:<12} {:>4} {:>6.3} {:>6.3} {:>6.3} {:>6.3} {:>6.3} {:>6.3} {:>6.3} {:>6.3} {:>7.2} {:>6.1} {:>6}",
                    r.mode,
                    r.classes,
                    r.bc,
                    r.dbc,
                    r.lc,
                    r.wm,
                    r.tmc,
                    r.ntmc,
                    r.ec,
                    r.oc,
                    r.ec_count,
                    r.suite_size,
                    r.theta_hat.map_or("-".to_string(), |t| format!("{t:.3}"))
                );
            }
            for o in self.outcomes.iter().filter(|o| o.split == split) {
                if o.a_outperforms + o.b_outperforms + o.no_significant == 0 {
                    continue;
                }
                let _ = writeln!(
                    s,
                    "  {} vs {} on {:<8} {} better: {:>3}  {} better: {:>3}  no difference: {:>3}",
                    o.approach_a, o.approach_b, o.metric, o.approach_a, o.a_outperforms, o.approach_b, o.b_outperforms,
                    o.no_significant
                );
            }
            for e in self.ec_normalized.iter().filter(|e| e.split == split && e.classes > 0) {
                let _ = writeln!(
                    s,
                    "  normalized exception count: {} {} vs {} {}",
                    e.approach_a,
                    fmt_opt(e.mean_a),
                    e.approach_b,
                    fmt_opt(e.mean_b)
                );
            }
        }
        let sig = self.comparisons.iter().filter(|c| c.label != OutcomeLabel::NoSignificant.name()).count();
        let _ = writeln!(s, "\nsignificant per-class comparisons: {sig} of {}", self.comparisons.len());
        s
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::db(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::db(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Reads `runs.csv` and writes the summary CSVs, JSON and digest into `out`.
pub fn write_report(runs_csv: &Path, out: &Path) -> Result<(Report, Vec<PathBuf>), HarnessError> {
    let rows = read_runs(runs_csv)?;
    if rows.is_empty() {
        return Err(HarnessError::db(runs_csv, "no runs"));
    }
    let rep = report(&rows);
    fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    let files = [
        out.join("summary_coverage.csv"),
        out.join("summary_outcomes.csv"),
        out.join("summary_comparisons.csv"),
        out.join("summary.json"),
        out.join("digest.txt"),
    ];
    write_csv(&files[0], &rep.coverage)?;
    write_csv(&files[1], &rep.outcomes)?;
    write_csv(&files[2], &rep.comparisons)?;
    let json = serde_json::to_string_pretty(&rep).map_err(|e| HarnessError::db(&files[3], e))?;
    fs::write(&files[3], json).map_err(|e| HarnessError::io(&files[3], e))?;
    fs::write(&files[4], rep.digest()).map_err(|e| HarnessError::io(&files[4], e))?;
    Ok((rep, files.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(class: &str, branches: usize, mode: &str, round: u32, bc: f64) -> RunRow {
        RunRow { class: class.into(), branches, mode: mode.into(), round, bc, ..RunRow::default() }
    }

    #[test]
    fn known_means() {
        let rows = vec![
            row("A", 60, "smart", 0, 0.5),
            row("A", 60, "smart", 1, 0.7),
            row("B", 220, "smart", 0, 0.9),
            row("A", 60, "original", 0, 0.4),
        ];
        let r = report(&rows);
        let all_smart = r.coverage.iter().find(|c| c.mode == "smart" && c.split == "all").unwrap();
        assert!((all_smart.bc - (0.6 + 0.9) / 2.0).abs() < 1e-12);
        assert_eq!(all_smart.classes, 2);
        let big = r.coverage.iter().find(|c| c.mode == "smart" && c.split == "big").unwrap();
        assert_eq!(big.bc, 0.9);
        assert!(r.coverage.iter().all(|c| !(c.mode == "original" && c.split == "big")));
        // one run per original cell: nothing can be significant
        assert!(r.comparisons.is_empty());
    }

    #[test]
    fn single_cell_database() {
        let r = report(&[row("A", 60, "smart", 0, 0.5)]);
        assert_eq!(r.coverage.iter().filter(|c| c.split == "all").count(), 1);
        assert!(r.outcomes.is_empty() && r.comparisons.is_empty());
        assert!(r.digest().contains("small classes"));
    }
}

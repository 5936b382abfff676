//! Mann-Whitney U, Vargha-Delaney A12 and per-class outcome summaries.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

pub const SIGNIFICANCE: f64 = 0.05;
/// Both samples at most this large use exact enumeration.
pub const EXACT_MAX: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("sample contains NaN")]
    NaN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PMethod {
    Exact,
    Normal,
}

impl fmt::Display for PMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PMethod::Exact => "exact",
            PMethod::Normal => "normal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UTest {
    /// U of the first sample: #{a > b} + 0.5 #{a = b}.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub method: PMethod,
}

fn check(a: &[f64], b: &[f64]) -> Result<(), StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(StatsError::NaN);
    }
    Ok(())
}

/// Midranks of the pooled sample, doubled so they stay integral.
/// Also returns the tie-group sizes.
fn doubled_ranks(pooled: &[f64]) -> (Vec<u64>, Vec<u64>) {
    let mut idx: Vec<usize> = (0..pooled.len()).collect();
    idx.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && pooled[idx[j + 1]] == pooled[idx[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1, midrank doubled = i + j + 2
        for &k in &idx[i..=j] {
            ranks[k] = (i + j + 2) as u64;
        }
        ties.push((j - i + 1) as u64);
        i = j + 1;
    }
    (ranks, ties)
}

fn u_from_doubled_rank_sum(r2: u64, n: usize) -> f64 {
    r2 as f64 / 2.0 - (n * (n + 1)) as f64 / 2.0
}

/// Exact two-sided p by enumerating every split of the pooled ranks.
pub fn mann_whitney_u_exact(a: &[f64], b: &[f64]) -> Result<UTest, StatsError> {
    check(a, b)?;
    let (n, m) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, _) = doubled_ranks(&pooled);
    let obs: u64 = ranks[..n].iter().sum();
    let max_sum: usize = ranks.iter().sum::<u64>() as usize;
    // ways[k][s]: subsets of size k with doubled rank sum s
    let mut ways = vec![vec![0u128; max_sum + 1]; n + 1];
    ways[0][0] = 1;
    for &r in &ranks {
        for k in (1..=n).rev() {
            for s in (r as usize..=max_sum).rev() {
                ways[k][s] += ways[k - 1][s - r as usize];
            }
        }
    }
    let mu = (n * m) as f64 / 2.0;
    let u = u_from_doubled_rank_sum(obs, n);
    let dev = (u - mu).abs();
    let (mut hit, mut total) = (0u128, 0u128);
    for (s, &w) in ways[n].iter().enumerate() {
        if w == 0 {
            continue;
        }
        total += w;
        if (u_from_doubled_rank_sum(s as u64, n) - mu).abs() >= dev - 1e-9 {
            hit += w;
        }
    }
    Ok(UTest { u, p: (hit as f64 / total as f64).min(1.0), method: PMethod::Exact })
}

/// Normal approximation with tie and continuity correction.
pub fn mann_whitney_u_normal(a: &[f64], b: &[f64]) -> Result<UTest, StatsError> {
    check(a, b)?;
    let (n, m) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = doubled_ranks(&pooled);
    let u = u_from_doubled_rank_sum(ranks[..n].iter().sum(), n);
    let big_n = (n + m) as f64;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (big_n * (big_n - 1.0));
    let var = (n * m) as f64 / 12.0 * ((big_n + 1.0) - tie_term);
    let mu = (n * m) as f64 / 2.0;
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((u - mu).abs() - 0.5) / var.sqrt();
        let std = Normal::standard();
        (2.0 * (1.0 - std.cdf(z))).clamp(0.0, 1.0)
    };
    Ok(UTest { u, p, method: PMethod::Normal })
}

/// Exact when both samples have at most `EXACT_MAX` values, otherwise normal.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<UTest, StatsError> {
    if a.len() <= EXACT_MAX && b.len() <= EXACT_MAX {
        mann_whitney_u_exact(a, b)
    } else {
        mann_whitney_u_normal(a, b)
    }
}

pub fn vargha_delaney_a12(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    check(a, b)?;
    let mut wins = 0u64;
    let mut ties = 0u64;
    for x in a {
        for y in b {
            match x.total_cmp(y) {
                std::cmp::Ordering::Greater => wins += 1,
                std::cmp::Ordering::Equal => ties += 1,
                std::cmp::Ordering::Less => {}
            }
        }
    }
    Ok((wins as f64 + 0.5 * ties as f64) / (a.len() * b.len()) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeLabel {
    AOutperforms,
    BOutperforms,
    NoSignificant,
}

impl OutcomeLabel {
    pub fn classify(p: f64, a12: f64) -> OutcomeLabel {
        if p < SIGNIFICANCE && a12 > 0.5 {
            OutcomeLabel::AOutperforms
        } else if p < SIGNIFICANCE && a12 < 0.5 {
            OutcomeLabel::BOutperforms
        } else {
            OutcomeLabel::NoSignificant
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OutcomeLabel::AOutperforms => "A-outperforms",
            OutcomeLabel::BOutperforms => "B-outperforms",
            OutcomeLabel::NoSignificant => "no-significant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonOutcome {
    pub class: String,
    pub metric: String,
    pub p: f64,
    pub a12: f64,
    pub label: OutcomeLabel,
    pub method: PMethod,
    pub mean_a: f64,
    pub mean_b: f64,
}

pub fn compare(class: &str, metric: &str, a: &[f64], b: &[f64]) -> Result<ComparisonOutcome, StatsError> {
    let t = mann_whitney_u(a, b)?;
    let a12 = vargha_delaney_a12(a, b)?;
    Ok(ComparisonOutcome {
        class: class.to_string(),
        metric: metric.to_string(),
        p: t.p,
        a12,
        label: OutcomeLabel::classify(t.p, a12),
        method: t.method,
        mean_a: mean(a),
        mean_b: mean(b),
    })
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Scales two counts by the larger one. Two zero counts compare as equal.
pub fn normalize_by_larger(a: f64, b: f64) -> (f64, f64) {
    let hi = a.max(b);
    if hi <= 0.0 {
        (1.0, 1.0)
    } else {
        (a / hi, b / hi)
    }
}

/// class -> approach -> metric -> per-round values.
pub type Samples = BTreeMap<String, BTreeMap<String, BTreeMap<String, Vec<f64>>>>;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub a_outperforms: usize,
    pub b_outperforms: usize,
    pub no_significant: usize,
    pub absent: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub counts: OutcomeCounts,
    /// Mean over classes of the per-class mean, for classes where both cells exist.
    pub mean_a: f64,
    pub mean_b: f64,
    pub classes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub approach_a: String,
    pub approach_b: String,
    pub metrics: Vec<MetricSummary>,
    pub outcomes: Vec<ComparisonOutcome>,
    /// (class, metric) pairs with a missing or undersized cell.
    pub absent: Vec<(String, String)>,
    /// Per class mean EC counts divided by the larger of the two.
    pub ec_normalized: Vec<(String, f64, f64)>,
}

pub const EC_COUNT_METRIC: &str = "ec_count";

/// Compares approach `a` against `b` on each metric of each class.
/// Cells with fewer than two runs are reported as absent.
pub fn summarize(samples: &Samples, a: &str, b: &str, metrics: &[&str]) -> Summary {
    let mut outcomes = Vec::new();
    let mut absent = Vec::new();
    let mut ec_normalized = Vec::new();
    let mut per_metric: BTreeMap<&str, (OutcomeCounts, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (class, approaches) in samples {
        let cell = |ap: &str, m: &str| approaches.get(ap).and_then(|x| x.get(m)).filter(|v| v.len() >= 2);
        for &m in metrics {
            let entry = per_metric.entry(m).or_default();
            match (cell(a, m), cell(b, m)) {
                (Some(xa), Some(xb)) => match compare(class, m, xa, xb) {
                    Ok(o) => {
                        match o.label {
                            OutcomeLabel::AOutperforms => entry.0.a_outperforms += 1,
                            OutcomeLabel::BOutperforms => entry.0.b_outperforms += 1,
                            OutcomeLabel::NoSignificant => entry.0.no_significant += 1,
                        }
                        entry.1.push(o.mean_a);
                        entry.2.push(o.mean_b);
                        if m == EC_COUNT_METRIC {
                            let (na, nb) = normalize_by_larger(o.mean_a, o.mean_b);
                            ec_normalized.push((class.clone(), na, nb));
                        }
                        outcomes.push(o);
                    }
                    Err(e) => {
                        log::warn!("{class}/{m}: {e}");
                        entry.0.absent += 1;
                        absent.push((class.clone(), m.to_string()));
                    }
                },
                _ => {
                    entry.0.absent += 1;
                    absent.push((class.clone(), m.to_string()));
                }
            }
        }
    }
    let metrics = metrics
        .iter()
        .map(|&m| {
            let (counts, xa, xb) = per_metric.remove(m).unwrap_or_default();
            MetricSummary { metric: m.to_string(), counts, mean_a: mean(&xa), mean_b: mean(&xb), classes: xa.len() }
        })
        .collect();
    Summary { approach_a: a.to_string(), approach_b: b.to_string(), metrics, outcomes, absent, ec_normalized }
}

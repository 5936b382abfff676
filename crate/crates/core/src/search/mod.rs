//! Evolutionary test generation: whole-suite (WS), MOSA and DynaMOSA.

mod archive;
mod mosa;
mod ops;
mod ws;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::goals::{CoverageGoal, CoverageReport, CriterionCoverage, Criterion, GoalEvaluator, GoalTarget, TestFitness};
use crate::lang::BranchSide;
use crate::runtime::{TestCase, TestSuite};

pub use archive::Archive;
pub use mosa::{crowding_distance, dominates, preference_sort};
pub use ops::{crossover_tests, mutate_test, random_test, ValuePool};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "WS")]
    Ws,
    #[serde(rename = "MOSA")]
    Mosa,
    #[serde(rename = "DynaMOSA")]
    DynaMosa,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Ws, Algorithm::Mosa, Algorithm::DynaMosa];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ws => "WS",
            Algorithm::Mosa => "MOSA",
            Algorithm::DynaMosa => "DynaMOSA",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = SearchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| SearchError::UnknownAlgorithm(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub algorithm: Algorithm,
    pub population_size: usize,
    pub crossover_rate: f64,
    /// Probability of mutating an offspring test (MOSA family). WS mutates each
    /// test of a suite with probability 1/|suite| instead.
    pub test_mutation_rate: f64,
    /// One evaluation is one test execution.
    pub max_evaluations: u64,
    pub seed: u64,
    /// Suites copied unchanged into the next WS generation.
    pub elitism: usize,
    pub max_test_length: usize,
    pub max_suite_size: usize,
    pub step_budget: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            algorithm: Algorithm::Ws,
            population_size: 50,
            crossover_rate: 0.75,
            test_mutation_rate: 1.0,
            max_evaluations: 30_000,
            seed: 0,
            elitism: 1,
            max_test_length: 40,
            max_suite_size: 100,
            step_budget: crate::runtime::DEFAULT_STEP_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("empty goal set")]
    NoGoals,
    #[error("unit `{0}` has no public method to call")]
    NoPublicMethods(String),
    #[error("invalid search config: {0}")]
    BadConfig(&'static str),
    #[error("unknown algorithm `{0}` (expected WS, MOSA or DynaMOSA)")]
    UnknownAlgorithm(String),
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.population_size < 2 {
            return Err(SearchError::BadConfig("population must be at least 2"));
        }
        for r in [self.crossover_rate, self.test_mutation_rate] {
            if !(0.0..=1.0).contains(&r) {
                return Err(SearchError::BadConfig("rates must lie in [0, 1]"));
            }
        }
        if self.max_test_length < 2 || self.max_suite_size < 1 {
            return Err(SearchError::BadConfig("test length must be at least 2 and suite size at least 1"));
        }
        if self.elitism >= self.population_size {
            return Err(SearchError::BadConfig("elitism must be below the population size"));
        }
        Ok(())
    }
}

/// One line of the JSONL event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SearchEvent {
    Start { algorithm: Algorithm, goals: usize, active: usize },
    Generation { generation: u32, evaluations: u64, best_fitness: f64, covered: usize, active: usize },
    BranchCovered { evaluations: u64, branch: String },
    Activated { evaluations: u64, goals: Vec<usize> },
    Covered { evaluations: u64, goal: usize },
    Finish { generations: u32, evaluations: u64, covered: usize },
}

pub fn events_to_jsonl(events: &[SearchEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("event serializes"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub suite: TestSuite,
    /// Indices into the searched goal list.
    pub covered: Vec<usize>,
    /// Coverage of the searched goal set.
    pub report: CoverageReport,
    pub evaluations: u64,
    pub generations: u32,
    pub events: Vec<SearchEvent>,
    /// Wall time; not serialized so results of equal runs compare byte for byte.
    #[serde(skip)]
    pub elapsed: Duration,
}

impl SearchResult {
    pub fn covered_goals(&self, evaluator: &GoalEvaluator) -> Vec<CoverageGoal> {
        self.covered.iter().map(|&i| evaluator.goals()[i]).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("result serializes")
    }
}

/// An executed test with its cached fitness.
#[derive(Debug, Clone)]
pub(crate) struct TestInd {
    pub test: TestCase,
    pub fit: Arc<TestFitness>,
}

/// Evaluation counter, archive, DynaMOSA activation state and event log.
pub(crate) struct Engine<'a> {
    pub ev: &'a GoalEvaluator,
    pub cfg: &'a SearchConfig,
    pub pool: ValuePool,
    pub rng: ChaCha8Rng,
    pub used: u64,
    limit: u64,
    pub archive: Archive,
    pub events: Vec<SearchEvent>,
    /// Per goal: activated (always true outside DynaMOSA).
    pub active: Vec<bool>,
    dynamic: bool,
    side_covered: Vec<bool>,
    /// Goals waiting on each branch side.
    dependents: Vec<Vec<usize>>,
}

fn side_index(b: BranchSide) -> usize {
    2 * b.pred as usize + usize::from(!b.side)
}

impl<'a> Engine<'a> {
    fn new(ev: &'a GoalEvaluator, cfg: &'a SearchConfig) -> Engine<'a> {
        let unit = ev.unit();
        let n = ev.len();
        let dynamic = cfg.algorithm == Algorithm::DynaMosa;
        let mut active = vec![true; n];
        let mut dependents = vec![Vec::new(); unit.count_branches()];
        if dynamic {
            let mutants = ev.schema();
            for (i, g) in ev.goals().iter().enumerate() {
                // goals evaluated on every method entry are roots even when a
                // branch also leads back to them
                let deps: BTreeSet<BranchSide> = match g.target {
                    GoalTarget::Branch(b) if unit.preds[b.pred as usize].on_entry => BTreeSet::new(),
                    GoalTarget::Branch(b) => unit.preds[b.pred as usize].deps.clone(),
                    GoalTarget::Line(l) if unit.line_on_entry(l) => BTreeSet::new(),
                    GoalTarget::Line(l) => unit.line_deps(l).clone(),
                    GoalTarget::Mutant(id) => match mutants.slot_of(id) {
                        Some(s) if unit.line_on_entry(mutants.mutant(s as u32).line) => BTreeSet::new(),
                        Some(s) => unit.line_deps(mutants.mutant(s as u32).line).clone(),
                        None => {
                            log::warn!("goal {} has no dependency information; treating it as a root", g.label(unit));
                            BTreeSet::new()
                        }
                    },
                    _ => BTreeSet::new(),
                };
                if !deps.is_empty() {
                    active[i] = false;
                    for d in deps {
                        dependents[side_index(d)].push(i);
                    }
                }
            }
        }
        let init_limit = cfg.max_evaluations.max(cfg.population_size as u64);
        Engine {
            ev,
            cfg,
            pool: ValuePool::from_unit(unit),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            used: 0,
            limit: init_limit,
            archive: Archive::new(n),
            events: Vec::new(),
            active,
            dynamic,
            side_covered: vec![false; unit.count_branches()],
            dependents,
        }
    }

    /// Ends the initial-population allowance; from here on the budget is strict.
    fn end_init(&mut self) {
        self.limit = self.cfg.max_evaluations;
    }

    pub fn exhausted(&self) -> bool {
        self.used >= self.limit
    }

    /// Executes a test, updating the archive and activation state. `None` once
    /// the budget is spent.
    pub fn evaluate(&mut self, test: TestCase) -> Option<TestInd> {
        if self.exhausted() {
            return None;
        }
        self.used += 1;
        let trace = self.ev.run_valid(&test);
        let fit = self.ev.evaluate(&trace);
        if self.dynamic {
            for (p, eval) in trace.preds.iter().enumerate() {
                for side in [true, false] {
                    let b = BranchSide { pred: p as u32, side };
                    let si = side_index(b);
                    if eval.covered(side) && !self.side_covered[si] {
                        self.side_covered[si] = true;
                        self.events.push(SearchEvent::BranchCovered { evaluations: self.used, branch: b.to_string() });
                        let newly: Vec<usize> = self.dependents[si].iter().copied().filter(|&g| !self.active[g]).collect();
                        if !newly.is_empty() {
                            for &g in &newly {
                                self.active[g] = true;
                            }
                            self.events.push(SearchEvent::Activated { evaluations: self.used, goals: newly });
                        }
                    }
                }
            }
        }
        for (g, f) in fit.goals.iter().enumerate() {
            if *f == 0.0 && self.archive.offer(g, &test) {
                self.events.push(SearchEvent::Covered { evaluations: self.used, goal: g });
            }
        }
        Some(TestInd { test, fit: Arc::new(fit) })
    }

    pub fn random_test(&mut self) -> TestCase {
        random_test(self.ev.unit(), &self.pool, &mut self.rng)
    }

    pub fn mutate(&mut self, t: &TestCase) -> TestCase {
        mutate_test(t, self.ev.unit(), &self.pool, self.cfg.max_test_length, &mut self.rng)
    }

    pub fn crossover(&mut self, a: &TestCase, b: &TestCase) -> TestCase {
        crossover_tests(a, b, self.ev.unit(), &self.pool, self.cfg.max_test_length, &mut self.rng)
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }
}

/// Coverage of a goal list given per-test fitness.
pub(crate) fn report_from_fitness(ev: &GoalEvaluator, tests: &[&TestFitness]) -> (Vec<usize>, CoverageReport) {
    let covered: Vec<usize> = (0..ev.len()).filter(|&i| tests.iter().any(|t| t.goals[i] == 0.0)).collect();
    let criteria = Criterion::ALL
        .into_iter()
        .map(|c| {
            let idx = ev.goals().iter().enumerate().filter(|(_, g)| g.criterion == c);
            let (mut n, mut k) = (0, 0);
            for (i, _) in idx {
                n += 1;
                k += usize::from(covered.binary_search(&i).is_ok());
            }
            CriterionCoverage::new(c, k, n)
        })
        .collect();
    (covered, CoverageReport::new(criteria))
}

fn check(ev: &GoalEvaluator, cfg: &SearchConfig) -> Result<(), SearchError> {
    cfg.validate()?;
    if ev.is_empty() {
        return Err(SearchError::NoGoals);
    }
    if ev.unit().public_methods().next().is_none() {
        return Err(SearchError::NoPublicMethods(ev.unit().name.clone()));
    }
    Ok(())
}

pub fn run_ws(ev: &GoalEvaluator, cfg: &SearchConfig) -> Result<SearchResult, SearchError> {
    check(ev, cfg)?;
    let start = Instant::now();
    let cfg = SearchConfig { algorithm: Algorithm::Ws, ..cfg.clone() };
    let mut r = ws::run(Engine::new(ev, &cfg));
    r.elapsed = start.elapsed();
    Ok(r)
}

pub fn run_mosa(ev: &GoalEvaluator, cfg: &SearchConfig) -> Result<SearchResult, SearchError> {
    check(ev, cfg)?;
    let start = Instant::now();
    let cfg = SearchConfig { algorithm: Algorithm::Mosa, ..cfg.clone() };
    let mut r = mosa::run(Engine::new(ev, &cfg));
    r.elapsed = start.elapsed();
    Ok(r)
}

/// MOSA over a goal set that grows as controlling branches get covered.
pub fn run_dynamosa(ev: &GoalEvaluator, cfg: &SearchConfig) -> Result<SearchResult, SearchError> {
    check(ev, cfg)?;
    let start = Instant::now();
    let cfg = SearchConfig { algorithm: Algorithm::DynaMosa, ..cfg.clone() };
    let mut r = mosa::run(Engine::new(ev, &cfg));
    r.elapsed = start.elapsed();
    Ok(r)
}

pub fn run_search(ev: &GoalEvaluator, cfg: &SearchConfig) -> Result<SearchResult, SearchError> {
    match cfg.algorithm {
        Algorithm::Ws => run_ws(ev, cfg),
        Algorithm::Mosa => run_mosa(ev, cfg),
        Algorithm::DynaMosa => run_dynamosa(ev, cfg),
    }
}

use std::collections::HashMap;
use std::sync::Arc;

use super::report::{CoverageReport, CriterionCoverage};
use super::{CoverageGoal, Criterion, GoalError, GoalTarget, Partition};
use crate::lang::ast::{ExceptionKind, Line, MethodId, PredId};
use crate::lang::{BranchSide, SourceUnit};
use crate::mutation::{Mutant, MutantSchema};
use crate::runtime::{execute, execute_valid, normalize, ExecutionTrace, MalformedTest, TestCase, DEFAULT_STEP_BUDGET};

#[derive(Debug, Clone)]
enum Compiled {
    Branch { pred: PredId, side: bool, direct: Option<MethodId> },
    Line { line: Line, method: MethodId, entry: bool, deps: Vec<BranchSide> },
    Mutant { slot: u32, line: Line, method: MethodId, entry: bool, deps: Vec<BranchSide> },
    Called(MethodId),
    CalledOk(MethodId),
    Exception(MethodId, ExceptionKind),
    Output(MethodId, Partition),
}

/// Fitness of one test: one entry per goal, plus per-branch fitness when the
/// goal set contains LC goals (the suite-level line fitness needs it).
#[derive(Debug, Clone, PartialEq)]
pub struct TestFitness {
    pub goals: Vec<f64>,
    pub branches: Vec<f64>,
}

/// Evaluates a fixed, ordered goal set against traces of one unit.
#[derive(Debug, Clone)]
pub struct GoalEvaluator {
    unit: Arc<SourceUnit>,
    goals: Vec<CoverageGoal>,
    compiled: Vec<Compiled>,
    index: HashMap<CoverageGoal, usize>,
    schema: MutantSchema,
    lc_goals: Vec<usize>,
    /// Per goal: the fitness of an empty suite.
    worst: Vec<f64>,
    step_budget: u64,
}

impl GoalEvaluator {
    /// `mutants` must contain every mutant a WM goal refers to.
    pub fn new(unit: Arc<SourceUnit>, goals: Vec<CoverageGoal>, mutants: &[Mutant]) -> Result<GoalEvaluator, GoalError> {
        let by_id: HashMap<u32, &Mutant> = mutants.iter().map(|m| (m.id, m)).collect();
        let mut wm: Vec<Mutant> = Vec::new();
        let mut compiled = Vec::with_capacity(goals.len());
        let n_methods = unit.methods().len() as MethodId;
        for goal in &goals {
            let foreign = || GoalError::ForeignGoal(*goal);
            let bad = || GoalError::BadTarget { criterion: goal.criterion, target: goal.target };
            let check_method = |m: MethodId| if m < n_methods { Ok(m) } else { Err(foreign()) };
            let c = match (goal.criterion, goal.target) {
                (Criterion::Bc | Criterion::Dbc, GoalTarget::Branch(b)) => {
                    let info = unit.preds.get(b.pred as usize).ok_or_else(foreign)?;
                    let m = unit.method(info.method);
                    let direct = (goal.criterion == Criterion::Dbc && (m.is_test_callable() || m.is_ctor))
                        .then_some(info.method);
                    Compiled::Branch { pred: b.pred, side: b.side, direct }
                }
                (Criterion::Lc, GoalTarget::Line(line)) => {
                    let info = unit.line_info(line).ok_or_else(foreign)?;
                    Compiled::Line {
                        line,
                        method: info.method,
                        entry: unit.line_on_entry(line),
                        deps: unit.line_deps(line).iter().copied().collect(),
                    }
                }
                (Criterion::Wm, GoalTarget::Mutant(id)) => {
                    let m = by_id.get(&id).ok_or_else(foreign)?;
                    let slot = match wm.iter().position(|x| x.id == id) {
                        Some(s) => s,
                        None => {
                            wm.push((*m).clone());
                            wm.len() - 1
                        }
                    };
                    unit.line_info(m.line).ok_or_else(foreign)?;
                    Compiled::Mutant {
                        slot: slot as u32,
                        line: m.line,
                        method: m.method,
                        entry: unit.line_on_entry(m.line),
                        deps: unit.line_deps(m.line).iter().copied().collect(),
                    }
                }
                (Criterion::Tmc, GoalTarget::Method(m)) => Compiled::Called(check_method(m)?),
                (Criterion::Ntmc, GoalTarget::Method(m)) => Compiled::CalledOk(check_method(m)?),
                (Criterion::Ec, GoalTarget::Exception(m, k)) => Compiled::Exception(check_method(m)?, k),
                (Criterion::Oc, GoalTarget::Output(m, p)) => Compiled::Output(check_method(m)?, p),
                _ => return Err(bad()),
            };
            compiled.push(c);
        }
        let index = goals.iter().enumerate().map(|(i, g)| (*g, i)).collect();
        let worst = goals.iter().map(|g| if g.criterion.is_augmented() { 2.0 } else { 1.0 }).collect();
        let lc_goals = goals.iter().enumerate().filter(|(_, g)| g.criterion == Criterion::Lc).map(|(i, _)| i).collect();
        Ok(GoalEvaluator {
            unit,
            goals,
            compiled,
            index,
            schema: MutantSchema::new(&wm),
            lc_goals,
            worst,
            step_budget: DEFAULT_STEP_BUDGET,
        })
    }

    pub fn with_step_budget(mut self, step_budget: u64) -> GoalEvaluator {
        self.step_budget = step_budget;
        self
    }

    pub fn unit(&self) -> &Arc<SourceUnit> {
        &self.unit
    }

    pub fn goals(&self) -> &[CoverageGoal] {
        &self.goals
    }

    pub fn len(&self) -> usize {
        self.goals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty()
    }

    pub fn schema(&self) -> &MutantSchema {
        &self.schema
    }

    pub fn index_of(&self, goal: &CoverageGoal) -> Option<usize> {
        self.index.get(goal).copied()
    }

    /// Runs a test under this goal set's mutant instrumentation.
    pub fn run(&self, test: &TestCase) -> Result<ExecutionTrace, MalformedTest> {
        execute(test, &self.unit, Some(&self.schema), self.step_budget)
    }

    /// As [`GoalEvaluator::run`] for tests already known to be well formed.
    pub fn run_valid(&self, test: &TestCase) -> ExecutionTrace {
        execute_valid(test, &self.unit, Some(&self.schema), self.step_budget)
    }

    fn check(&self, trace: &ExecutionTrace) -> Result<(), GoalError> {
        if trace.covered_lines.len() != self.unit.line_count()
            || trace.preds.len() != self.unit.preds.len()
            || trace.infections.len() != self.schema.len()
        {
            return Err(GoalError::TraceMismatch);
        }
        Ok(())
    }

    /// Branch fitness of one test: 0 when covered, the normalized distance once
    /// the predicate ran at least twice, 1 otherwise.
    pub fn branch_fitness(trace: &ExecutionTrace, pred: PredId, side: bool) -> f64 {
        let p = trace.pred(pred);
        if p.covered(side) {
            0.0
        } else if p.count >= 2 {
            normalize(p.distance(side))
        } else {
            1.0
        }
    }

    fn line_fitness(&self, trace: &ExecutionTrace, line: Line, method: MethodId, entry: bool, deps: &[BranchSide]) -> f64 {
        if trace.covers_line(line) {
            return 0.0;
        }
        let by_entry = match (entry || deps.is_empty(), trace.entered[method as usize]) {
            (true, true) => 0.0,
            (true, false) => 1.0,
            (false, _) => f64::INFINITY,
        };
        let reach = deps.iter().map(|d| Self::branch_fitness(trace, d.pred, d.side)).fold(by_entry, f64::min);
        1.0 + reach
    }

    #[inline]
    pub fn fitness_at(&self, i: usize, trace: &ExecutionTrace) -> f64 {
        let bit = |b: bool| if b { 0.0 } else { 1.0 };
        match &self.compiled[i] {
            Compiled::Branch { pred, side, direct } => match direct {
                Some(m) if !trace.direct_calls[*m as usize] => 1.0,
                _ => Self::branch_fitness(trace, *pred, *side),
            },
            Compiled::Line { line, method, entry, deps } => self.line_fitness(trace, *line, *method, *entry, deps),
            Compiled::Mutant { slot, line, method, entry, deps } => match trace.infection(*slot as usize) {
                Some(d) => normalize(d),
                None if trace.covers_line(*line) => 1.0,
                None => self.line_fitness(trace, *line, *method, *entry, deps),
            },
            Compiled::Called(m) => bit(trace.direct_calls[*m as usize]),
            Compiled::CalledOk(m) => bit(trace.direct_ok[*m as usize]),
            Compiled::Exception(m, k) => bit(trace.has_exception(*m, *k, true)),
            Compiled::Output(m, p) => bit(trace.returns.iter().any(|(rm, v)| rm == m && p.contains(v))),
        }
    }

    pub fn goal_fitness(&self, goal: &CoverageGoal, trace: &ExecutionTrace) -> Result<f64, GoalError> {
        self.check(trace)?;
        let i = self.index_of(goal).ok_or(GoalError::NotInSet(*goal))?;
        Ok(self.fitness_at(i, trace))
    }

    pub fn fitness_vector(&self, trace: &ExecutionTrace) -> Vec<f64> {
        (0..self.goals.len()).map(|i| self.fitness_at(i, trace)).collect()
    }

    pub fn evaluate(&self, trace: &ExecutionTrace) -> TestFitness {
        let branches = if self.lc_goals.is_empty() {
            Vec::new()
        } else {
            self.unit.branch_sides().map(|b| Self::branch_fitness(trace, b.pred, b.side)).collect()
        };
        TestFitness { goals: self.fitness_vector(trace), branches }
    }

    /// Whole-suite fitness: per goal the best test, summed; the LC goals
    /// together contribute `ν(uncovered lines) + f_BC`.
    pub fn suite_fitness(&self, tests: &[&TestFitness]) -> f64 {
        self.suite_score(tests).0
    }

    /// Whole-suite fitness together with the number of goals some test covers.
    pub fn suite_score(&self, tests: &[&TestFitness]) -> (f64, usize) {
        let mut best = self.worst.clone();
        for t in tests {
            for (b, v) in best.iter_mut().zip(&t.goals) {
                *b = b.min(*v);
            }
        }
        let covered = best.iter().filter(|b| **b == 0.0).count();
        if self.lc_goals.is_empty() {
            return (best.iter().sum(), covered);
        }
        let uncovered_lines = self.lc_goals.iter().filter(|&&i| best[i] > 0.0).count();
        for &i in &self.lc_goals {
            best[i] = 0.0;
        }
        let mut branch_best = vec![1.0f64; self.unit.count_branches()];
        for t in tests {
            for (b, v) in branch_best.iter_mut().zip(&t.branches) {
                *b = b.min(*v);
            }
        }
        (best.iter().sum::<f64>() + normalize(uncovered_lines as f64) + branch_best.iter().sum::<f64>(), covered)
    }

    /// Goals reaching fitness 0 in some trace.
    pub fn covered(&self, traces: &[ExecutionTrace]) -> Vec<bool> {
        (0..self.goals.len()).map(|i| traces.iter().any(|t| self.fitness_at(i, t) == 0.0)).collect()
    }

    pub fn report(&self, traces: &[ExecutionTrace]) -> CoverageReport {
        let covered = self.covered(traces);
        let criteria = Criterion::ALL
            .into_iter()
            .map(|c| {
                let (mut n, mut k) = (0, 0);
                for (g, cov) in self.goals.iter().zip(&covered) {
                    if g.criterion == c {
                        n += 1;
                        k += *cov as usize;
                    }
                }
                CriterionCoverage::new(c, k, n)
            })
            .collect();
        CoverageReport::new(criteria)
    }
}

pub fn goal_fitness(evaluator: &GoalEvaluator, goal: &CoverageGoal, trace: &ExecutionTrace) -> Result<f64, GoalError> {
    evaluator.goal_fitness(goal, trace)
}

pub fn fitness_vector(evaluator: &GoalEvaluator, trace: &ExecutionTrace) -> Vec<f64> {
    evaluator.fitness_vector(trace)
}

pub fn suite_fitness_ws(evaluator: &GoalEvaluator, traces: &[ExecutionTrace]) -> f64 {
    let fits: Vec<TestFitness> = traces.iter().map(|t| evaluator.evaluate(t)).collect();
    let refs: Vec<&TestFitness> = fits.iter().collect();
    evaluator.suite_fitness(&refs)
}

pub fn coverage_report(evaluator: &GoalEvaluator, traces: &[ExecutionTrace]) -> CoverageReport {
    evaluator.report(traces)
}

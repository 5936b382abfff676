//! Goal-set construction: the smart selection pipeline and its baselines.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::goals::{extract_goals, CoverageGoal, Criterion, GoalTarget};
use crate::lang::SourceUnit;
use crate::mutation::{all_operators, generate_mutants, subsuming_mutants, Mutant, MutationError, MutationOperator, SubsumptionTable};

pub const DEFAULT_LINE_THRESHOLD: usize = 8;

/// The four criterion groups and the representative searched for in each.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionGrouping {
    pub groups: Vec<CriterionGroup>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionGroup {
    pub members: Vec<Criterion>,
    pub representative: Criterion,
}

impl CriterionGrouping {
    pub fn standard() -> CriterionGrouping {
        use Criterion::*;
        let g = |members: &[Criterion], representative| CriterionGroup { members: members.to_vec(), representative };
        CriterionGrouping {
            groups: vec![g(&[Bc, Dbc, Lc, Wm], Dbc), g(&[Tmc, Ntmc], Ntmc), g(&[Ec], Ec), g(&[Oc], Oc)],
        }
    }

    pub fn representatives(&self) -> Vec<Criterion> {
        self.groups.iter().map(|g| g.representative).collect()
    }
}

impl Default for CriterionGrouping {
    fn default() -> Self {
        Self::standard()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Smart,
    Original,
    Single(Criterion),
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Smart => f.write_str("smart"),
            Mode::Original => f.write_str("original"),
            Mode::Single(c) => write!(f, "single:{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectionError {
    #[error("unknown mode `{0}` (expected smart, original or single:<criterion>)")]
    UnknownMode(String),
    #[error("line threshold must be at least 1")]
    BadThreshold,
    #[error(transparent)]
    Mutation(#[from] MutationError),
}

impl FromStr for Mode {
    type Err = SelectionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "smart" => Ok(Mode::Smart),
            "original" => Ok(Mode::Original),
            _ => s
                .strip_prefix("single:")
                .and_then(|c| c.parse().ok())
                .map(Mode::Single)
                .ok_or_else(|| SelectionError::UnknownMode(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub line_threshold: usize,
    pub operators: BTreeSet<MutationOperator>,
    pub mode: Mode,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig { line_threshold: DEFAULT_LINE_THRESHOLD, operators: all_operators(), mode: Mode::Smart }
    }
}

/// A goal list together with the mutants its WM goals refer to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalSelection {
    pub goals: Vec<CoverageGoal>,
    pub mutants: Vec<Mutant>,
}

impl GoalSelection {
    pub fn count(&self, c: Criterion) -> usize {
        self.goals.iter().filter(|g| g.criterion == c).count()
    }

    pub fn dump(&self, unit: &SourceUnit, mode: Mode, line_threshold: usize) -> GoalSetDump {
        GoalSetDump {
            class: unit.name.clone(),
            mode: mode.to_string(),
            line_threshold,
            counts: Criterion::ALL.iter().map(|c| (c.name().to_string(), self.count(*c))).collect(),
            total: self.goals.len(),
            goals: self
                .goals
                .iter()
                .map(|g| GoalDump { criterion: g.criterion, label: g.label(unit), target: g.target })
                .collect(),
        }
    }
}

/// JSON audit form of a goal set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalSetDump {
    pub class: String,
    pub mode: String,
    pub line_threshold: usize,
    pub counts: Vec<(String, usize)>,
    pub total: usize,
    pub goals: Vec<GoalDump>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalDump {
    pub criterion: Criterion,
    pub label: String,
    pub target: GoalTarget,
}

/// One LC goal at the last line of every basic block with at least
/// `line_threshold` lines.
pub fn select_line_goals(unit: &SourceUnit, line_threshold: usize) -> Vec<CoverageGoal> {
    let mut lines: Vec<u32> = unit
        .graphs
        .iter()
        .flat_map(|g| g.cfg.code_blocks())
        .filter(|b| !b.lines.is_empty() && b.lines.len() >= line_threshold.max(1))
        .filter_map(|b| b.lines.last().copied())
        .collect();
    lines.sort_unstable();
    lines.into_iter().map(|l| CoverageGoal::new(Criterion::Lc, GoalTarget::Line(l))).collect()
}

pub fn original_goal_set(unit: &SourceUnit, config: &SelectionConfig) -> GoalSelection {
    let mutants = generate_mutants(unit, &config.operators);
    let goals = Criterion::ALL.iter().flat_map(|c| extract_goals(unit, *c, &mutants)).collect();
    GoalSelection { goals, mutants }
}

pub fn smart_goal_set(
    unit: &SourceUnit,
    config: &SelectionConfig,
    table: &SubsumptionTable,
) -> Result<GoalSelection, SelectionError> {
    if config.line_threshold == 0 {
        return Err(SelectionError::BadThreshold);
    }
    let mutants = generate_mutants(unit, &config.operators);
    let grouping = CriterionGrouping::standard();
    let mut goals: Vec<CoverageGoal> =
        grouping.representatives().into_iter().flat_map(|c| extract_goals(unit, c, &mutants)).collect();
    goals.extend(select_line_goals(unit, config.line_threshold));
    let wm_sub = subsuming_mutants(&mutants, table)?;
    goals.extend(extract_goals(unit, Criterion::Wm, &wm_sub));
    Ok(GoalSelection { goals, mutants })
}

/// Goals of one criterion; EC and OC also carry the BC goals.
pub fn single_criterion_set(unit: &SourceUnit, criterion: Criterion, config: &SelectionConfig) -> GoalSelection {
    let mutants = if criterion == Criterion::Wm { generate_mutants(unit, &config.operators) } else { Vec::new() };
    let mut goals = Vec::new();
    if matches!(criterion, Criterion::Ec | Criterion::Oc) {
        goals.extend(extract_goals(unit, Criterion::Bc, &mutants));
    }
    goals.extend(extract_goals(unit, criterion, &mutants));
    GoalSelection { goals, mutants }
}

/// Dispatches on `config.mode`.
pub fn goal_set(unit: &SourceUnit, config: &SelectionConfig, table: &SubsumptionTable) -> Result<GoalSelection, SelectionError> {
    match config.mode {
        Mode::Smart => smart_goal_set(unit, config, table),
        Mode::Original => Ok(original_goal_set(unit, config)),
        Mode::Single(c) => Ok(single_criterion_set(unit, c, config)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    fn body(n: usize) -> String {
        (0..n).map(|i| format!("int v{i} = {i};")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn grouping_partitions_all_criteria() {
        let g = CriterionGrouping::standard();
        let mut all: Vec<Criterion> = g.groups.iter().flat_map(|x| x.members.clone()).collect();
        all.sort();
        assert_eq!(all, Criterion::ALL.to_vec());
        for grp in &g.groups {
            assert!(grp.members.contains(&grp.representative));
        }
    }

    #[test]
    fn line_threshold_boundaries() {
        let seven = parse(&format!("class C {{ public void f(){{ {} }} }}", body(7))).unwrap();
        let eight = parse(&format!("class C {{ public void f(){{ {} }} }}", body(8))).unwrap();
        assert!(select_line_goals(&seven, 8).is_empty());
        assert_eq!(select_line_goals(&eight, 8), vec![CoverageGoal::new(Criterion::Lc, GoalTarget::Line(8))]);
        let u = parse("class C { public int f(int x){ if (x > 0) { return 1; } return 0; } }").unwrap();
        assert_eq!(select_line_goals(&u, 1).len(), 3);
    }

    #[test]
    fn smart_set_on_fixture() {
        let src = format!("class C {{ public bool f(int a, int b){{ {} return a < b; }} }}", body(9));
        let u = parse(&src).unwrap();
        let table = SubsumptionTable::builtin();
        let smart = smart_goal_set(&u, &SelectionConfig::default(), &table).unwrap();
        let original = original_goal_set(&u, &SelectionConfig::default());
        // DBC 0 + NTMC 1 + EC 6 + OC 2 + one LC + three WM
        assert_eq!(smart.count(Criterion::Lc), 1);
        assert_eq!(smart.count(Criterion::Wm), 3);
        assert_eq!(smart.goals.len(), 1 + 6 + 2 + 1 + 3);
        assert!(smart.goals.len() < original.goals.len());
        for g in &smart.goals {
            assert!(original.goals.contains(g));
        }
    }

    #[test]
    fn short_blocks_without_sites_give_only_representatives() {
        let u = parse("class C { public bool f(bool x){ if (x) { return false; } return true; } }").unwrap();
        let smart = smart_goal_set(&u, &SelectionConfig::default(), &SubsumptionTable::builtin()).unwrap();
        let reps: usize = [Criterion::Dbc, Criterion::Ntmc, Criterion::Ec, Criterion::Oc]
            .iter()
            .map(|c| extract_goals(&u, *c, &[]).len())
            .sum();
        assert_eq!(smart.goals.len(), reps);
    }

    #[test]
    fn single_criterion_baselines() {
        let u = parse("class C { public void f(int x){ if (x > 0) { x = 1; } } }").unwrap();
        let cfg = SelectionConfig::default();
        assert_eq!(single_criterion_set(&u, Criterion::Bc, &cfg).goals.len(), 2);
        assert_eq!(single_criterion_set(&u, Criterion::Ec, &cfg).goals.len(), 2 + 6);
        assert_eq!(single_criterion_set(&u, Criterion::Oc, &cfg).goals.len(), 2);
    }

    #[test]
    fn modes_parse() {
        assert_eq!("smart".parse::<Mode>().unwrap(), Mode::Smart);
        assert_eq!("single:ec".parse::<Mode>().unwrap(), Mode::Single(Criterion::Ec));
        assert_eq!(Mode::Single(Criterion::Oc).to_string(), "single:OC");
        assert!("single:xyz".parse::<Mode>().is_err());
    }
}

//! Coverage goals for the eight criteria and their fitness functions.

mod eval;
mod report;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::ast::{ExceptionKind, Line, MethodId, Type};
use crate::lang::{BranchSide, SourceUnit};
use crate::mutation::{Mutant, MutantId};
use crate::runtime::Value;

pub use eval::{coverage_report, fitness_vector, goal_fitness, suite_fitness_ws, GoalEvaluator, TestFitness};
pub use report::{CoverageReport, CriterionCoverage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Criterion {
    #[serde(rename = "BC")]
    Bc,
    #[serde(rename = "DBC")]
    Dbc,
    #[serde(rename = "LC")]
    Lc,
    #[serde(rename = "WM")]
    Wm,
    #[serde(rename = "TMC")]
    Tmc,
    #[serde(rename = "NTMC")]
    Ntmc,
    #[serde(rename = "EC")]
    Ec,
    #[serde(rename = "OC")]
    Oc,
}

impl Criterion {
    /// Canonical order used for the original combination and for reports.
    pub const ALL: [Criterion; 8] = [
        Criterion::Bc,
        Criterion::Dbc,
        Criterion::Lc,
        Criterion::Wm,
        Criterion::Tmc,
        Criterion::Ntmc,
        Criterion::Ec,
        Criterion::Oc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Bc => "BC",
            Criterion::Dbc => "DBC",
            Criterion::Lc => "LC",
            Criterion::Wm => "WM",
            Criterion::Tmc => "TMC",
            Criterion::Ntmc => "NTMC",
            Criterion::Ec => "EC",
            Criterion::Oc => "OC",
        }
    }

    /// LC and WM add one plus a branch fitness when their target was not reached.
    pub fn is_augmented(self) -> bool {
        matches!(self, Criterion::Lc | Criterion::Wm)
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown criterion `{0}` (expected one of BC, DBC, LC, WM, TMC, NTMC, EC, OC)")]
pub struct UnknownCriterion(pub String);

impl FromStr for Criterion {
    type Err = UnknownCriterion;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownCriterion(s.to_string()))
    }
}

/// Output-diversity partition of a return value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Partition {
    True,
    False,
    Negative,
    Zero,
    Positive,
    Empty,
    NonEmpty,
}

impl Partition {
    pub fn for_type(ty: Type) -> &'static [Partition] {
        match ty {
            Type::Bool => &[Partition::True, Partition::False],
            Type::Int | Type::Float => &[Partition::Negative, Partition::Zero, Partition::Positive],
            Type::Str => &[Partition::Empty, Partition::NonEmpty],
        }
    }

    pub fn contains(self, v: &Value) -> bool {
        match (self, v) {
            (Partition::True, Value::Bool(b)) => *b,
            (Partition::False, Value::Bool(b)) => !*b,
            (Partition::Negative, Value::Int(x)) => *x < 0,
            (Partition::Zero, Value::Int(x)) => *x == 0,
            (Partition::Positive, Value::Int(x)) => *x > 0,
            (Partition::Negative, Value::Float(x)) => *x < 0.0,
            (Partition::Zero, Value::Float(x)) => *x == 0.0,
            (Partition::Positive, Value::Float(x)) => *x > 0.0,
            (Partition::Empty, Value::Str(s)) => s.is_empty(),
            (Partition::NonEmpty, Value::Str(s)) => !s.is_empty(),
            _ => false,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Partition::True => "true",
            Partition::False => "false",
            Partition::Negative => "negative",
            Partition::Zero => "zero",
            Partition::Positive => "positive",
            Partition::Empty => "empty",
            Partition::NonEmpty => "nonempty",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GoalTarget {
    Branch(BranchSide),
    Line(Line),
    Mutant(MutantId),
    Method(MethodId),
    Exception(MethodId, ExceptionKind),
    Output(MethodId, Partition),
}

/// A single coverage target. Identity is the (criterion, target) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CoverageGoal {
    pub criterion: Criterion,
    pub target: GoalTarget,
}

impl CoverageGoal {
    pub fn new(criterion: Criterion, target: GoalTarget) -> CoverageGoal {
        CoverageGoal { criterion, target }
    }

    /// Short human-readable name such as `BC:p3T` or `EC:push:E2`.
    pub fn label(&self, unit: &SourceUnit) -> String {
        let m = |id: MethodId| unit.methods().get(id as usize).map_or("?", |m| m.name.as_str()).to_string();
        let t = match self.target {
            GoalTarget::Branch(b) => b.to_string(),
            GoalTarget::Line(l) => format!("L{l}"),
            GoalTarget::Mutant(id) => format!("m{id}"),
            GoalTarget::Method(id) => m(id),
            GoalTarget::Exception(id, k) => format!("{}:{k}", m(id)),
            GoalTarget::Output(id, p) => format!("{}:{}", m(id), p.name()),
        };
        format!("{}:{t}", self.criterion)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GoalError {
    #[error("goal {0:?} does not belong to this unit")]
    ForeignGoal(CoverageGoal),
    #[error("goal {0:?} has no evaluator in this goal set")]
    NotInSet(CoverageGoal),
    #[error("trace was produced for a different unit")]
    TraceMismatch,
    #[error("criterion {criterion} cannot target {target:?}")]
    BadTarget { criterion: Criterion, target: GoalTarget },
}

/// Goals of one criterion. `mutants` is the WM universe; other criteria ignore it.
pub fn extract_goals(unit: &SourceUnit, criterion: Criterion, mutants: &[Mutant]) -> Vec<CoverageGoal> {
    let g = |t| CoverageGoal::new(criterion, t);
    match criterion {
        Criterion::Bc | Criterion::Dbc => unit.branch_sides().map(|b| g(GoalTarget::Branch(b))).collect(),
        Criterion::Lc => unit.lines().map(|l| g(GoalTarget::Line(l))).collect(),
        Criterion::Wm => mutants.iter().map(|m| g(GoalTarget::Mutant(m.id))).collect(),
        Criterion::Tmc | Criterion::Ntmc => unit.public_methods().map(|m| g(GoalTarget::Method(m))).collect(),
        Criterion::Ec => unit
            .public_methods()
            .flat_map(|m| ExceptionKind::ALL.into_iter().map(move |k| g(GoalTarget::Exception(m, k))))
            .collect(),
        Criterion::Oc => unit
            .public_methods()
            .flat_map(|m| {
                let parts = unit.method(m).ret.map_or(&[][..], Partition::for_type);
                parts.iter().map(move |p| g(GoalTarget::Output(m, *p)))
            })
            .collect(),
    }
}

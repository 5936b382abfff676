use serde::{Deserialize, Serialize};

use super::test_case::TestCase;
use super::value::Value;
use crate::lang::ast::{ExceptionKind, Line, MethodId, PredId};
use crate::lang::SourceUnit;
use crate::mutation::MutantSchema;

/// Per-predicate evaluation summary for one test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredEval {
    pub count: u32,
    /// Minimal distance to the true side; infinite while unevaluated.
    pub min_true: f64,
    pub min_false: f64,
}

impl Default for PredEval {
    fn default() -> Self {
        PredEval { count: 0, min_true: f64::INFINITY, min_false: f64::INFINITY }
    }
}

impl PredEval {
    pub fn distance(&self, side: bool) -> f64 {
        if side {
            self.min_true
        } else {
            self.min_false
        }
    }

    pub fn covered(&self, side: bool) -> bool {
        self.count > 0 && self.distance(side) == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExceptionRecord {
    pub method: MethodId,
    pub kind: ExceptionKind,
    /// Raised out of a method the test itself invoked.
    pub direct: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionTrace {
    /// Indexed by `line - 1`.
    pub covered_lines: Vec<bool>,
    pub preds: Vec<PredEval>,
    /// Methods whose body started executing, by any route.
    pub entered: Vec<bool>,
    pub direct_calls: Vec<bool>,
    /// A direct invocation of the method returned normally.
    pub direct_ok: Vec<bool>,
    /// Sorted, deduplicated.
    pub exceptions: Vec<ExceptionRecord>,
    /// Values returned to the test by direct invocations, in order.
    pub returns: Vec<(MethodId, Value)>,
    /// Per schema slot; infinite when the mutant was never reached.
    pub infections: Vec<f64>,
    pub timed_out: bool,
    /// Test statements that ran to completion.
    pub completed_statements: usize,
    pub steps: u64,
}

impl ExecutionTrace {
    pub fn empty(unit: &SourceUnit, schema: Option<&MutantSchema>) -> ExecutionTrace {
        let methods = unit.methods().len();
        ExecutionTrace {
            covered_lines: vec![false; unit.line_count()],
            preds: vec![PredEval::default(); unit.preds.len()],
            entered: vec![false; methods],
            direct_calls: vec![false; methods],
            direct_ok: vec![false; methods],
            exceptions: Vec::new(),
            returns: Vec::new(),
            infections: vec![f64::INFINITY; schema.map_or(0, MutantSchema::len)],
            timed_out: false,
            completed_statements: 0,
            steps: 0,
        }
    }

    pub fn covers_line(&self, line: Line) -> bool {
        line.checked_sub(1).and_then(|i| self.covered_lines.get(i as usize)).copied().unwrap_or(false)
    }

    pub fn covered_line_set(&self) -> Vec<Line> {
        self.covered_lines.iter().enumerate().filter(|(_, c)| **c).map(|(i, _)| i as Line + 1).collect()
    }

    pub fn pred(&self, pred: PredId) -> &PredEval {
        &self.preds[pred as usize]
    }

    pub fn has_exception(&self, method: MethodId, kind: ExceptionKind, direct_only: bool) -> bool {
        self.exceptions.iter().any(|e| e.method == method && e.kind == kind && (e.direct || !direct_only))
    }

    pub(crate) fn add_exception(&mut self, rec: ExceptionRecord) {
        if let Err(at) = self.exceptions.binary_search(&rec) {
            self.exceptions.insert(at, rec);
        }
    }

    pub fn infection(&self, slot: usize) -> Option<f64> {
        self.infections.get(slot).copied().filter(|d| d.is_finite())
    }

    pub fn dump(&self, unit: &SourceUnit, test: &TestCase, schema: Option<&MutantSchema>) -> TraceDump {
        let name = |m: MethodId| unit.method(m).name.clone();
        let names = |flags: &[bool]| -> Vec<String> {
            flags.iter().enumerate().filter(|(_, f)| **f).map(|(m, _)| name(m as MethodId)).collect()
        };
        let finite = |x: f64| x.is_finite().then_some(x);
        TraceDump {
            class: unit.name.clone(),
            test: test.render(unit),
            covered_lines: self.covered_line_set(),
            predicate_evals: self
                .preds
                .iter()
                .enumerate()
                .filter(|(_, p)| p.count > 0)
                .map(|(i, p)| PredDump {
                    pred: i as PredId,
                    line: unit.preds[i].line,
                    count: p.count,
                    min_true: finite(p.min_true),
                    min_false: finite(p.min_false),
                })
                .collect(),
            direct_calls: names(&self.direct_calls),
            exceptions: self
                .exceptions
                .iter()
                .map(|e| ExceptionDump { method: name(e.method), kind: e.kind.name().to_string(), direct: e.direct })
                .collect(),
            returns: self.returns.iter().map(|(m, v)| ReturnDump { method: name(*m), value: v.clone() }).collect(),
            infections: self
                .infections
                .iter()
                .enumerate()
                .map(|(slot, d)| InfectionDump {
                    mutant: schema.map_or(slot as u32, |s| s.mutant(slot as u32).id),
                    reached: d.is_finite(),
                    distance: finite(*d),
                })
                .collect(),
            timed_out: self.timed_out,
            steps: self.steps,
        }
    }
}

/// JSON form of a trace written by `--dump-traces`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDump {
    pub class: String,
    pub test: String,
    pub covered_lines: Vec<Line>,
    pub predicate_evals: Vec<PredDump>,
    pub direct_calls: Vec<String>,
    pub exceptions: Vec<ExceptionDump>,
    pub returns: Vec<ReturnDump>,
    pub infections: Vec<InfectionDump>,
    pub timed_out: bool,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredDump {
    pub pred: PredId,
    pub line: Line,
    pub count: u32,
    pub min_true: Option<f64>,
    pub min_false: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceptionDump {
    pub method: String,
    pub kind: String,
    pub direct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnDump {
    pub method: String,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfectionDump {
    pub mutant: u32,
    pub reached: bool,
    pub distance: Option<f64>,
}

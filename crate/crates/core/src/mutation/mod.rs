//! Weak-mutation targets: UOI, AOR and ROR mutants, their infection distances,
//! and the subsuming-mutant reduction.

mod subsumption;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::ast::*;
use crate::lang::SourceUnit;
use crate::runtime::Value;

pub use subsumption::{
    compute_subsumption_oracle, kill_set, verify_subsuming_selection, Domain, OracleError, SubsumptionEntry,
    SubsumptionTable, TableParseError,
};

pub type MutantId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MutationOperator {
    /// Insert unary operator.
    Uoi,
    /// Replace an arithmetic operator.
    Aor,
    /// Replace a comparison operator.
    Ror,
}

impl MutationOperator {
    pub const ALL: [MutationOperator; 3] = [MutationOperator::Uoi, MutationOperator::Aor, MutationOperator::Ror];

    pub fn name(self) -> &'static str {
        match self {
            MutationOperator::Uoi => "UOI",
            MutationOperator::Aor => "AOR",
            MutationOperator::Ror => "ROR",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for MutationOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What the mutated expression becomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Replacement {
    Arith(ArithOp),
    Rel(RelOp),
    ConstTrue,
    ConstFalse,
    PlusOne,
    MinusOne,
    Negate,
}

impl Replacement {
    pub fn token(self) -> &'static str {
        match self {
            Replacement::Arith(op) => op.token(),
            Replacement::Rel(op) => op.token(),
            Replacement::ConstTrue => "true",
            Replacement::ConstFalse => "false",
            Replacement::PlusOne => "+1",
            Replacement::MinusOne => "-1",
            Replacement::Negate => "neg",
        }
    }

    pub fn from_token(tok: &str) -> Option<Replacement> {
        match tok {
            "true" => Some(Replacement::ConstTrue),
            "false" => Some(Replacement::ConstFalse),
            "+1" => Some(Replacement::PlusOne),
            "-1" => Some(Replacement::MinusOne),
            "neg" => Some(Replacement::Negate),
            t => ArithOp::from_token(t)
                .map(Replacement::Arith)
                .or_else(|| RelOp::from_token(t).map(Replacement::Rel)),
        }
    }
}

/// The original construct at a mutated location.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Original {
    Arith(ArithOp),
    Rel(RelOp),
    Var(String),
}

impl Original {
    pub fn token(&self) -> &str {
        match self {
            Original::Arith(op) => op.token(),
            Original::Rel(op) => op.token(),
            Original::Var(name) => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mutant {
    pub id: MutantId,
    pub operator: MutationOperator,
    pub method: MethodId,
    pub line: Line,
    pub expr: ExprId,
    pub original: Original,
    pub replacement: Replacement,
}

impl fmt::Display for Mutant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}#{}@L{}:e{} {} -> {}",
            self.operator,
            self.id,
            self.line,
            self.expr,
            self.original.token(),
            self.replacement.token()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MutationError {
    #[error("subsumption table has no entry for {operator} `{token}`")]
    MissingTableEntry { operator: MutationOperator, token: String },
}

/// ROR also replaces the whole comparison by the constants `true` and `false`,
/// which is what makes three subsuming mutants per relational operator.
fn ror_replacements(op: RelOp) -> impl Iterator<Item = Replacement> {
    RelOp::ALL
        .into_iter()
        .filter(move |o| *o != op)
        .map(Replacement::Rel)
        .chain([Replacement::ConstTrue, Replacement::ConstFalse])
}

/// Enumerates mutants for the requested operators. Ids are dense in the
/// returned order, which is deterministic (source order, then replacement order).
pub fn generate_mutants(unit: &SourceUnit, operators: &BTreeSet<MutationOperator>) -> Vec<Mutant> {
    let mut out: Vec<Mutant> = Vec::new();
    let mut seen: BTreeSet<(ExprId, Replacement)> = BTreeSet::new();
    for (mid, method) in unit.methods().iter().enumerate() {
        walk_stmts(&method.body, &mut |stmt| {
            for root in stmt_exprs(stmt) {
                walk_expr(root, &mut |e| {
                    let mut push = |operator, original: Original, replacement| {
                        if seen.insert((e.id, replacement)) {
                            out.push(Mutant {
                                id: out.len() as MutantId,
                                operator,
                                method: mid as MethodId,
                                line: stmt.line,
                                expr: e.id,
                                original,
                                replacement,
                            });
                        }
                    };
                    match &e.kind {
                        ExprKind::Binary(BinOp::Arith(op), _, _) if operators.contains(&MutationOperator::Aor) => {
                            for r in ArithOp::ALL.into_iter().filter(|o| o != op) {
                                push(MutationOperator::Aor, Original::Arith(*op), Replacement::Arith(r));
                            }
                        }
                        ExprKind::Binary(BinOp::Rel(op), l, _)
                            if operators.contains(&MutationOperator::Ror) && l.ty.is_numeric() =>
                        {
                            for r in ror_replacements(*op) {
                                push(MutationOperator::Ror, Original::Rel(*op), r);
                            }
                        }
                        ExprKind::Var { name, .. } if operators.contains(&MutationOperator::Uoi) && e.ty.is_numeric() => {
                            for r in [Replacement::PlusOne, Replacement::MinusOne, Replacement::Negate] {
                                push(MutationOperator::Uoi, Original::Var(name.clone()), r);
                            }
                        }
                        _ => {}
                    }
                });
            }
        });
    }
    out
}

pub fn all_operators() -> BTreeSet<MutationOperator> {
    MutationOperator::ALL.into_iter().collect()
}

/// Keeps the AOR/ROR mutants whose replacement is in the subsuming set for
/// their original token. UOI mutants are dropped: reaching them already kills them,
/// so line coverage stands in for them.
pub fn subsuming_mutants(mutants: &[Mutant], table: &SubsumptionTable) -> Result<Vec<Mutant>, MutationError> {
    let mut out = Vec::new();
    for m in mutants {
        let (op, token) = match (&m.operator, &m.original) {
            (MutationOperator::Uoi, _) => continue,
            (op, orig) => (*op, orig.token()),
        };
        let keep = table
            .subsuming(op, token)
            .ok_or_else(|| MutationError::MissingTableEntry { operator: op, token: token.to_string() })?;
        if keep.contains(&m.replacement) {
            out.push(m.clone());
        }
    }
    Ok(out)
}

/// Weak-mutation outcome of evaluating an expression: a value or an abrupt stop.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Value(Value),
    Raised,
}

/// Distance from infecting the program state at the mutated expression.
///
/// UOI is always 0 once reached. AOR is 0 when the values differ, 1 otherwise.
/// ROR is 0 when the boolean outcomes differ and `|lhs - rhs| + 1` otherwise.
pub fn infection_distance(
    mutant: &Mutant,
    original: &Outcome,
    mutated: &Outcome,
    operands: Option<(&Value, &Value)>,
) -> f64 {
    match mutant.operator {
        MutationOperator::Uoi => 0.0,
        MutationOperator::Aor => {
            if outcomes_differ(original, mutated) {
                0.0
            } else {
                1.0
            }
        }
        MutationOperator::Ror => {
            if outcomes_differ(original, mutated) {
                0.0
            } else {
                match operands.and_then(|(l, r)| l.numeric_gap(r)) {
                    Some(gap) => gap + 1.0,
                    None => 1.0,
                }
            }
        }
    }
}

pub(crate) fn outcomes_differ(a: &Outcome, b: &Outcome) -> bool {
    match (a, b) {
        (Outcome::Raised, Outcome::Raised) => false,
        (Outcome::Value(x), Outcome::Value(y)) => !x.same_as(y),
        _ => true,
    }
}

/// Mutants keyed by the expression they instrument, for the interpreter.
#[derive(Debug, Clone, Default)]
pub struct MutantSchema {
    mutants: Vec<Mutant>,
    /// Per expression id: range into `order`.
    ranges: Vec<(u32, u32)>,
    order: Vec<u32>,
}

impl MutantSchema {
    pub fn new(mutants: &[Mutant]) -> MutantSchema {
        let max_expr = mutants.iter().map(|m| m.expr + 1).max().unwrap_or(0) as usize;
        let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); max_expr];
        for (slot, m) in mutants.iter().enumerate() {
            buckets[m.expr as usize].push(slot as u32);
        }
        let mut ranges = Vec::with_capacity(max_expr);
        let mut order = Vec::with_capacity(mutants.len());
        for b in buckets {
            let start = order.len() as u32;
            order.extend(b);
            ranges.push((start, order.len() as u32));
        }
        MutantSchema { mutants: mutants.to_vec(), ranges, order }
    }

    pub fn len(&self) -> usize {
        self.mutants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mutants.is_empty()
    }

    pub fn mutants(&self) -> &[Mutant] {
        &self.mutants
    }

    /// Slots instrumented at an expression.
    #[inline]
    pub fn at(&self, expr: ExprId) -> &[u32] {
        match self.ranges.get(expr as usize) {
            Some(&(s, e)) => &self.order[s as usize..e as usize],
            None => &[],
        }
    }

    #[inline]
    pub fn mutant(&self, slot: u32) -> &Mutant {
        &self.mutants[slot as usize]
    }

    pub fn slot_of(&self, id: MutantId) -> Option<usize> {
        self.mutants.iter().position(|m| m.id == id)
    }
}

/// Rewrites the class with one mutant applied, for type-preservation checks.
pub fn apply_mutant(class: &ClassDecl, mutant: &Mutant) -> ClassDecl {
    let mut out = class.clone();
    fn rewrite(e: &mut Expr, m: &Mutant) {
        if e.id == m.expr {
            let pos = e.pos;
            let ty = e.ty;
            let mk = |kind| Expr { id: u32::MAX, pos, ty, kind };
            match (&mut e.kind, m.replacement) {
                (ExprKind::Binary(op, _, _), Replacement::Arith(r)) => *op = BinOp::Arith(r),
                (ExprKind::Binary(op, _, _), Replacement::Rel(r)) => *op = BinOp::Rel(r),
                (_, Replacement::ConstTrue) => e.kind = ExprKind::Lit(Literal::Bool(true)),
                (_, Replacement::ConstFalse) => e.kind = ExprKind::Lit(Literal::Bool(false)),
                (_, r @ (Replacement::PlusOne | Replacement::MinusOne)) => {
                    let one = if ty == Type::Float { Literal::Float(1.0) } else { Literal::Int(1) };
                    let op = if r == Replacement::PlusOne { ArithOp::Add } else { ArithOp::Sub };
                    let var = std::mem::replace(&mut e.kind, ExprKind::Lit(Literal::Bool(false)));
                    e.kind = ExprKind::Binary(BinOp::Arith(op), Box::new(mk(var)), Box::new(mk(ExprKind::Lit(one))));
                }
                (_, Replacement::Negate) => {
                    let var = std::mem::replace(&mut e.kind, ExprKind::Lit(Literal::Bool(false)));
                    e.kind = ExprKind::Unary(UnaryOp::Neg, Box::new(mk(var)));
                }
                _ => {}
            }
            return;
        }
        match &mut e.kind {
            ExprKind::Unary(_, x) => rewrite(x, m),
            ExprKind::Binary(_, l, r) => {
                rewrite(l, m);
                rewrite(r, m);
            }
            ExprKind::Call { args, .. } => args.iter_mut().for_each(|a| rewrite(a, m)),
            _ => {}
        }
    }
    fn rewrite_body(body: &mut [Stmt], m: &Mutant) {
        for s in body {
            match &mut s.kind {
                StmtKind::Decl { init: e, .. }
                | StmtKind::Assign { value: e, .. }
                | StmtKind::Return(Some(e))
                | StmtKind::Expr(e) => rewrite(e, m),
                StmtKind::If { cond, then_body, else_body, .. } => {
                    rewrite(cond, m);
                    rewrite_body(then_body, m);
                    if let Some(b) = else_body {
                        rewrite_body(b, m);
                    }
                }
                StmtKind::While { cond, body, .. } => {
                    rewrite(cond, m);
                    rewrite_body(body, m);
                }
                StmtKind::Return(None) | StmtKind::Throw(_) => {}
            }
        }
    }
    rewrite_body(&mut out.methods[mutant.method as usize].body, mutant);
    out
}

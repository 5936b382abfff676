//! Branch distances for relational predicates.

use thiserror::Error;

use super::value::{compare, Value};
use crate::lang::ast::RelOp;

/// Distance charged to a branch that just failed.
pub const K: f64 = 1.0;

/// `x / (x + 1)`, mapping `[0, inf)` onto `[0, 1)`.
#[inline]
pub fn normalize(x: f64) -> f64 {
    if x.is_infinite() {
        1.0
    } else {
        x / (x + 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("branch distance on mismatched operands: {lhs} {op} {rhs}")]
pub struct DistanceError {
    pub op: &'static str,
    pub lhs: &'static str,
    pub rhs: &'static str,
}

/// Distance from making `lhs op rhs` evaluate to `side`. Zero exactly when it does.
pub fn branch_distance(op: RelOp, lhs: &Value, rhs: &Value, side: bool) -> Result<f64, DistanceError> {
    let mismatch = || DistanceError { op: op.token(), lhs: lhs.ty().keyword(), rhs: rhs.ty().keyword() };
    if lhs.ty() != rhs.ty() || (!lhs.ty().is_numeric() && !op.is_equality()) {
        return Err(mismatch());
    }
    if compare(op, lhs, rhs) == side {
        return Ok(0.0);
    }
    // Make the wanted outcome an operator that currently fails.
    let want = if side { op } else { negated(op) };
    let d = match (lhs, rhs) {
        (Value::Int(_), Value::Int(_)) | (Value::Float(_), Value::Float(_)) => numeric(want, lhs, rhs),
        (Value::Str(a), Value::Str(b)) if want == RelOp::Eq => strsim::levenshtein(a, b) as f64,
        _ => K,
    };
    // Unsatisfied sides are strictly positive; NaN operands fall back to K.
    Ok(if d > 0.0 { d } else { K })
}

fn negated(op: RelOp) -> RelOp {
    match op {
        RelOp::Lt => RelOp::Ge,
        RelOp::Le => RelOp::Gt,
        RelOp::Gt => RelOp::Le,
        RelOp::Ge => RelOp::Lt,
        RelOp::Eq => RelOp::Ne,
        RelOp::Ne => RelOp::Eq,
    }
}

fn numeric(want: RelOp, lhs: &Value, rhs: &Value) -> f64 {
    // Signed difference a - b, exact for ints.
    let diff = match (lhs, rhs) {
        (Value::Int(a), Value::Int(b)) => (*a as i128 - *b as i128) as f64,
        (Value::Float(a), Value::Float(b)) => a - b,
        _ => unreachable!(),
    };
    match want {
        RelOp::Eq => diff.abs(),
        RelOp::Ne => K,
        RelOp::Lt => diff + K,
        RelOp::Le => diff,
        RelOp::Gt => -diff + K,
        RelOp::Ge => -diff,
    }
}

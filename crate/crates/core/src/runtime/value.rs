use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::lang::ast::{ArithOp, ExceptionKind, Literal, RelOp, Type};

/// A MiniLang runtime value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(Arc<str>),
}

impl Value {
    pub fn ty(&self) -> Type {
        match self {
            Value::Int(_) => Type::Int,
            Value::Float(_) => Type::Float,
            Value::Bool(_) => Type::Bool,
            Value::Str(_) => Type::Str,
        }
    }

    pub fn default_for(ty: Type) -> Value {
        match ty {
            Type::Int => Value::Int(0),
            Type::Float => Value::Float(0.0),
            Type::Bool => Value::Bool(false),
            Type::Str => Value::Str(Arc::from("")),
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// Identity comparison that treats NaN as equal to itself.
    pub fn same_as(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits() || a == b,
            _ => self == other,
        }
    }

    /// `|a - b|` for two numeric values of the same type.
    pub fn numeric_gap(&self, other: &Value) -> Option<f64> {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => Some((*a as i128 - *b as i128).unsigned_abs() as f64),
            (Value::Float(a), Value::Float(b)) => {
                let d = (a - b).abs();
                if d.is_nan() {
                    None
                } else {
                    Some(d)
                }
            }
            _ => None,
        }
    }
}

impl From<&Literal> for Value {
    fn from(lit: &Literal) -> Value {
        match lit {
            Literal::Int(v) => Value::Int(*v),
            Literal::Float(v) => Value::Float(*v),
            Literal::Bool(b) => Value::Bool(*b),
            Literal::Str(s) => Value::Str(Arc::from(s.as_str())),
        }
    }
}

impl From<&Value> for Literal {
    fn from(v: &Value) -> Literal {
        match v {
            Value::Int(x) => Literal::Int(*x),
            Value::Float(x) => Literal::Float(*x),
            Value::Bool(b) => Literal::Bool(*b),
            Value::Str(s) => Literal::Str(s.to_string()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::lang::pretty::literal_to_string(&Literal::from(self)))
    }
}

/// Arithmetic with MiniLang semantics: int overflow and zero divisors raise,
/// division truncates toward zero.
pub fn arith(op: ArithOp, a: &Value, b: &Value) -> Result<Value, ExceptionKind> {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => {
            let r = match op {
                ArithOp::Add => x.checked_add(*y),
                ArithOp::Sub => x.checked_sub(*y),
                ArithOp::Mul => x.checked_mul(*y),
                ArithOp::Div => x.checked_div(*y),
                ArithOp::Rem => x.checked_rem(*y),
            };
            r.map(Value::Int).ok_or(ExceptionKind::Arithmetic)
        }
        (Value::Float(x), Value::Float(y)) => {
            if matches!(op, ArithOp::Div | ArithOp::Rem) && *y == 0.0 {
                return Err(ExceptionKind::Arithmetic);
            }
            Ok(Value::Float(match op {
                ArithOp::Add => x + y,
                ArithOp::Sub => x - y,
                ArithOp::Mul => x * y,
                ArithOp::Div => x / y,
                ArithOp::Rem => x % y,
            }))
        }
        _ => unreachable!("type checker admits only same-typed numeric operands"),
    }
}

pub fn compare(op: RelOp, a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => op.holds(x.cmp(y)),
        (Value::Float(x), Value::Float(y)) => match x.partial_cmp(y) {
            Some(ord) => op.holds(ord),
            None => op == RelOp::Ne,
        },
        (Value::Bool(x), Value::Bool(y)) => op.holds(x.cmp(y)),
        (Value::Str(x), Value::Str(y)) => op.holds(if x == y { Ordering::Equal } else { x.cmp(y) }),
        _ => unreachable!("type checker admits only same-typed comparisons"),
    }
}

pub fn negate(v: &Value) -> Result<Value, ExceptionKind> {
    match v {
        Value::Int(x) => x.checked_neg().map(Value::Int).ok_or(ExceptionKind::Arithmetic),
        Value::Float(x) => Ok(Value::Float(-x)),
        _ => unreachable!("negation of non-numeric value"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn int_overflow_and_zero_divisors_raise() {
        let i = Value::Int;
        assert_eq!(arith(ArithOp::Add, &i(i64::MAX), &i(1)), Err(ExceptionKind::Arithmetic));
        assert_eq!(arith(ArithOp::Div, &i(3), &i(0)), Err(ExceptionKind::Arithmetic));
        assert_eq!(arith(ArithOp::Rem, &i(3), &i(0)), Err(ExceptionKind::Arithmetic));
        assert_eq!(arith(ArithOp::Div, &i(-7), &i(2)), Ok(i(-3)));
        assert_eq!(arith(ArithOp::Rem, &i(-7), &i(2)), Ok(i(-1)));
        assert_eq!(negate(&i(i64::MIN)), Err(ExceptionKind::Arithmetic));
    }

    #[test]
    fn float_division_by_zero_raises() {
        let f = Value::Float;
        assert_eq!(arith(ArithOp::Div, &f(1.0), &f(0.0)), Err(ExceptionKind::Arithmetic));
        assert_eq!(arith(ArithOp::Mul, &f(1.5), &f(2.0)), Ok(f(3.0)));
    }

    #[test]
    fn nan_compares_unequal() {
        let nan = Value::Float(f64::NAN);
        assert!(!compare(RelOp::Eq, &nan, &nan));
        assert!(compare(RelOp::Ne, &nan, &nan));
        assert!(!compare(RelOp::Lt, &nan, &Value::Float(0.0)));
        assert!(nan.same_as(&nan));
    }
}

//! Tree-walking interpreter with branch-distance and weak-mutation instrumentation.

use super::distance::{branch_distance, K};
use super::test_case::{Arg, MalformedTest, Statement, TestCase};
use super::trace::{ExceptionRecord, ExecutionTrace};
use super::value::{arith, compare, negate, Value};
use crate::lang::ast::*;
use crate::lang::SourceUnit;
use crate::mutation::{infection_distance, MutantSchema, Outcome, Replacement};

pub const DEFAULT_STEP_BUDGET: u64 = 100_000;
/// Deeper recursion is treated like an exhausted step budget.
pub const MAX_CALL_DEPTH: u32 = 128;

enum Abort {
    Throw(ExceptionKind),
    Timeout,
}

enum Flow {
    Normal,
    Return(Option<Value>),
}

enum Var {
    Object(Vec<Value>),
    Value(Value),
    Void,
}

struct Machine<'a> {
    unit: &'a SourceUnit,
    schema: Option<&'a MutantSchema>,
    trace: ExecutionTrace,
    steps_left: u64,
    depth: u32,
}

/// Runs `test` against `unit`. With a schema, every listed mutant is evaluated
/// side by side at its expression without changing control flow.
pub fn execute(
    test: &TestCase,
    unit: &SourceUnit,
    schema: Option<&MutantSchema>,
    step_budget: u64,
) -> Result<ExecutionTrace, MalformedTest> {
    test.validate(unit)?;
    Ok(execute_valid(test, unit, schema, step_budget))
}

/// As [`execute`] for a test already known to be well formed.
pub fn execute_valid(test: &TestCase, unit: &SourceUnit, schema: Option<&MutantSchema>, step_budget: u64) -> ExecutionTrace {
    let mut m = Machine { unit, schema, trace: ExecutionTrace::empty(unit, schema), steps_left: step_budget, depth: 0 };
    let mut vars: Vec<Var> = Vec::with_capacity(test.statements.len());
    for st in &test.statements {
        let outcome = match st {
            Statement::Construct { args } => {
                let mut fields: Vec<Value> = unit.class.fields.iter().map(|f| Value::default_for(f.ty)).collect();
                match unit.ctor() {
                    Some(ctor) => {
                        m.trace.direct_calls[ctor as usize] = true;
                        m.call(ctor, args.clone(), &mut fields).map(|_| {
                            m.trace.direct_ok[ctor as usize] = true;
                            Var::Object(fields)
                        })
                        .map_err(|e| (ctor, e))
                    }
                    None => Ok(Var::Object(fields)),
                }
            }
            Statement::Invoke { receiver, method, args } => {
                let values: Vec<Value> = args
                    .iter()
                    .map(|a| match a {
                        Arg::Lit(v) => v.clone(),
                        Arg::Ref(j) => match &vars[*j] {
                            Var::Value(v) => v.clone(),
                            _ => unreachable!("validated reference"),
                        },
                    })
                    .collect();
                let mid = *method as usize;
                m.trace.direct_calls[mid] = true;
                let Var::Object(fields) = &mut vars[*receiver] else { unreachable!("validated receiver") };
                let mut fields = std::mem::take(fields);
                let r = m.call(*method, values, &mut fields);
                vars[*receiver] = Var::Object(fields);
                r.map(|v| {
                    m.trace.direct_ok[mid] = true;
                    match v {
                        Some(v) => {
                            m.trace.returns.push((*method, v.clone()));
                            Var::Value(v)
                        }
                        None => Var::Void,
                    }
                })
                .map_err(|e| (*method, e))
            }
        };
        match outcome {
            Ok(v) => {
                vars.push(v);
                m.trace.completed_statements += 1;
            }
            Err((method, Abort::Throw(kind))) => {
                m.trace.add_exception(ExceptionRecord { method, kind, direct: true });
                break;
            }
            Err((_, Abort::Timeout)) => {
                m.trace.timed_out = true;
                break;
            }
        }
    }
    m.trace.steps = step_budget - m.steps_left;
    m.trace
}

impl Machine<'_> {
    #[inline]
    fn step(&mut self) -> Result<(), Abort> {
        if self.steps_left == 0 {
            return Err(Abort::Timeout);
        }
        self.steps_left -= 1;
        Ok(())
    }

    fn call(&mut self, mid: MethodId, args: Vec<Value>, fields: &mut [Value]) -> Result<Option<Value>, Abort> {
        if self.depth >= MAX_CALL_DEPTH {
            return Err(Abort::Timeout);
        }
        let unit = self.unit;
        let method = unit.method(mid);
        self.trace.entered[mid as usize] = true;
        let mut locals = args;
        locals.resize(method.frame_size as usize, Value::Int(0));
        self.depth += 1;
        let r = self.block(&method.body, &mut locals, fields);
        self.depth -= 1;
        match r? {
            Flow::Return(v) => Ok(v),
            Flow::Normal => Ok(None),
        }
    }

    fn block(&mut self, body: &[Stmt], locals: &mut [Value], fields: &mut [Value]) -> Result<Flow, Abort> {
        for s in body {
            self.step()?;
            self.trace.covered_lines[s.line as usize - 1] = true;
            match &s.kind {
                StmtKind::Decl { slot, init, .. } => {
                    let v = self.eval(init, locals, fields)?;
                    locals[*slot as usize] = v;
                }
                StmtKind::Assign { place, value, .. } => {
                    let v = self.eval(value, locals, fields)?;
                    match place {
                        Place::Local(i) => locals[*i as usize] = v,
                        Place::Field(i) => fields[*i as usize] = v,
                        Place::Unresolved => unreachable!("type checker resolves places"),
                    }
                }
                StmtKind::If { pred, cond, then_body, else_body } => {
                    let taken = self.predicate(*pred, cond, locals, fields)?;
                    let flow = if taken {
                        self.block(then_body, locals, fields)?
                    } else if let Some(e) = else_body {
                        self.block(e, locals, fields)?
                    } else {
                        Flow::Normal
                    };
                    if let Flow::Return(_) = flow {
                        return Ok(flow);
                    }
                }
                StmtKind::While { pred, cond, body } => loop {
                    if !self.predicate(*pred, cond, locals, fields)? {
                        break;
                    }
                    if let Flow::Return(v) = self.block(body, locals, fields)? {
                        return Ok(Flow::Return(v));
                    }
                    self.step()?;
                },
                StmtKind::Return(e) => {
                    let v = match e {
                        Some(e) => Some(self.eval(e, locals, fields)?),
                        None => None,
                    };
                    return Ok(Flow::Return(v));
                }
                StmtKind::Throw(kind) => return Err(Abort::Throw(*kind)),
                StmtKind::Expr(e) => {
                    self.eval(e, locals, fields)?;
                }
            }
        }
        Ok(Flow::Normal)
    }

    fn predicate(&mut self, pred: PredId, cond: &Expr, locals: &[Value], fields: &mut [Value]) -> Result<bool, Abort> {
        let (b, dt, df) = self.cond(cond, locals, fields)?;
        let p = &mut self.trace.preds[pred as usize];
        p.count += 1;
        p.min_true = p.min_true.min(dt);
        p.min_false = p.min_false.min(df);
        Ok(b)
    }

    /// Outcome plus distances to the true and false sides.
    fn cond(&mut self, e: &Expr, locals: &[Value], fields: &mut [Value]) -> Result<(bool, f64, f64), Abort> {
        match &e.kind {
            ExprKind::Binary(BinOp::Rel(op), l, r) => {
                let lv = self.eval(l, locals, fields)?;
                let rv = self.eval(r, locals, fields)?;
                let b = self.rel(e.id, *op, &lv, &rv);
                let dt = branch_distance(*op, &lv, &rv, true).expect("type-checked comparison");
                let df = branch_distance(*op, &lv, &rv, false).expect("type-checked comparison");
                Ok((b, dt, df))
            }
            ExprKind::Binary(BinOp::And, l, r) => {
                let (lb, lt, lf) = self.cond(l, locals, fields)?;
                if !lb {
                    return Ok((false, lt + K, lf));
                }
                let (rb, rt, rf) = self.cond(r, locals, fields)?;
                Ok((rb, lt + rt, lf.min(rf)))
            }
            ExprKind::Binary(BinOp::Or, l, r) => {
                let (lb, lt, lf) = self.cond(l, locals, fields)?;
                if lb {
                    return Ok((true, lt, lf + K));
                }
                let (rb, rt, rf) = self.cond(r, locals, fields)?;
                Ok((rb, lt.min(rt), lf + rf))
            }
            ExprKind::Unary(UnaryOp::Not, inner) => {
                let (b, t, f) = self.cond(inner, locals, fields)?;
                Ok((!b, f, t))
            }
            _ => {
                let b = self.eval(e, locals, fields)?.as_bool().expect("boolean condition");
                Ok(if b { (true, 0.0, K) } else { (false, K, 0.0) })
            }
        }
    }

    fn rel(&mut self, id: ExprId, op: RelOp, l: &Value, r: &Value) -> bool {
        let b = compare(op, l, r);
        if let Some(schema) = self.schema {
            for &slot in schema.at(id) {
                let m = schema.mutant(slot);
                let mb = match m.replacement {
                    Replacement::Rel(o) => compare(o, l, r),
                    Replacement::ConstTrue => true,
                    Replacement::ConstFalse => false,
                    _ => continue,
                };
                let d = infection_distance(
                    m,
                    &Outcome::Value(Value::Bool(b)),
                    &Outcome::Value(Value::Bool(mb)),
                    Some((l, r)),
                );
                self.infect(slot, d);
            }
        }
        b
    }

    #[inline]
    fn infect(&mut self, slot: u32, d: f64) {
        let cur = &mut self.trace.infections[slot as usize];
        if d < *cur {
            *cur = d;
        }
    }

    fn eval(&mut self, e: &Expr, locals: &[Value], fields: &mut [Value]) -> Result<Value, Abort> {
        match &e.kind {
            ExprKind::Lit(lit) => Ok(Value::from(lit)),
            ExprKind::Var { place, .. } => {
                if let Some(schema) = self.schema {
                    for &slot in schema.at(e.id) {
                        self.infect(slot, 0.0);
                    }
                }
                Ok(match place {
                    Place::Local(i) => locals[*i as usize].clone(),
                    Place::Field(i) => fields[*i as usize].clone(),
                    Place::Unresolved => unreachable!("type checker resolves places"),
                })
            }
            ExprKind::Unary(UnaryOp::Neg, inner) => {
                let v = self.eval(inner, locals, fields)?;
                negate(&v).map_err(Abort::Throw)
            }
            ExprKind::Unary(UnaryOp::Not, inner) => {
                let v = self.eval(inner, locals, fields)?;
                Ok(Value::Bool(!v.as_bool().expect("boolean operand")))
            }
            ExprKind::Binary(BinOp::Arith(op), l, r) => {
                let lv = self.eval(l, locals, fields)?;
                let rv = self.eval(r, locals, fields)?;
                let res = arith(*op, &lv, &rv);
                if let Some(schema) = self.schema {
                    let slots = schema.at(e.id);
                    if !slots.is_empty() {
                        let orig = match &res {
                            Ok(v) => Outcome::Value(v.clone()),
                            Err(_) => Outcome::Raised,
                        };
                        for &slot in slots {
                            let m = schema.mutant(slot);
                            let Replacement::Arith(mop) = m.replacement else { continue };
                            let mutated = match arith(mop, &lv, &rv) {
                                Ok(v) => Outcome::Value(v),
                                Err(_) => Outcome::Raised,
                            };
                            let d = infection_distance(m, &orig, &mutated, Some((&lv, &rv)));
                            self.infect(slot, d);
                        }
                    }
                }
                res.map_err(Abort::Throw)
            }
            ExprKind::Binary(BinOp::Rel(op), l, r) => {
                let lv = self.eval(l, locals, fields)?;
                let rv = self.eval(r, locals, fields)?;
                Ok(Value::Bool(self.rel(e.id, *op, &lv, &rv)))
            }
            ExprKind::Binary(BinOp::And, l, r) => {
                if !self.eval(l, locals, fields)?.as_bool().expect("boolean operand") {
                    return Ok(Value::Bool(false));
                }
                self.eval(r, locals, fields)
            }
            ExprKind::Binary(BinOp::Or, l, r) => {
                if self.eval(l, locals, fields)?.as_bool().expect("boolean operand") {
                    return Ok(Value::Bool(true));
                }
                self.eval(r, locals, fields)
            }
            ExprKind::Call { method, args, .. } => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.eval(a, locals, fields)?);
                }
                let mid = method.expect("type checker resolves calls");
                match self.call(mid, values, fields) {
                    Ok(v) => Ok(v.unwrap_or(Value::Bool(false))),
                    Err(Abort::Throw(kind)) => {
                        self.trace.add_exception(ExceptionRecord { method: mid, kind, direct: false });
                        Err(Abort::Throw(kind))
                    }
                    Err(Abort::Timeout) => Err(Abort::Timeout),
                }
            }
        }
    }
}

use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::value::Value;
use crate::lang::ast::{MethodId, Type};
use crate::lang::SourceUnit;

/// An invocation argument: a literal or the result of an earlier statement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Arg {
    Lit(Value),
    Ref(usize),
}

/// One test statement. Statement `i` defines variable `v{i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Statement {
    /// Build an instance with the constructor (or default fields when there is none).
    Construct { args: Vec<Value> },
    Invoke { receiver: usize, method: MethodId, args: Vec<Arg> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub statements: Vec<Statement>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TestSuite {
    pub tests: Vec<TestCase>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed test at statement {index}: {msg}")]
pub struct MalformedTest {
    pub index: usize,
    pub msg: String,
}

impl TestCase {
    pub fn new(statements: Vec<Statement>) -> TestCase {
        TestCase { statements }
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    /// Type of the value statement `i` defines, `None` for objects and void calls.
    pub fn value_type(&self, unit: &SourceUnit, i: usize) -> Option<Type> {
        match self.statements.get(i)? {
            Statement::Construct { .. } => None,
            Statement::Invoke { method, .. } => unit.method(*method).ret,
        }
    }

    pub fn invoked_methods(&self) -> impl Iterator<Item = MethodId> + '_ {
        self.statements.iter().filter_map(|s| match s {
            Statement::Invoke { method, .. } => Some(*method),
            Statement::Construct { .. } => None,
        })
    }

    pub fn validate(&self, unit: &SourceUnit) -> Result<(), MalformedTest> {
        let fail = |index, msg: String| Err(MalformedTest { index, msg });
        let mut invoked = false;
        for (i, st) in self.statements.iter().enumerate() {
            match st {
                Statement::Construct { args } => {
                    let params: Vec<Type> = unit.ctor().map(|c| unit.method(c).params.iter().map(|p| p.ty).collect()).unwrap_or_default();
                    if args.len() != params.len() {
                        return fail(i, format!("constructor takes {} arguments, got {}", params.len(), args.len()));
                    }
                    for (a, t) in args.iter().zip(&params) {
                        if a.ty() != *t {
                            return fail(i, format!("constructor argument {a} is not {t}"));
                        }
                    }
                }
                Statement::Invoke { receiver, method, args } => {
                    if *receiver >= i || !matches!(self.statements[*receiver], Statement::Construct { .. }) {
                        return fail(i, format!("receiver v{receiver} is not an earlier object"));
                    }
                    let Some(m) = unit.methods().get(*method as usize) else {
                        return fail(i, format!("unknown method id {method}"));
                    };
                    if !m.is_test_callable() {
                        return fail(i, format!("method `{}` is not public", m.name));
                    }
                    if args.len() != m.params.len() {
                        return fail(i, format!("`{}` takes {} arguments, got {}", m.name, m.params.len(), args.len()));
                    }
                    for (a, p) in args.iter().zip(&m.params) {
                        let ty = match a {
                            Arg::Lit(v) => Some(v.ty()),
                            Arg::Ref(j) if *j < i => self.value_type(unit, *j),
                            Arg::Ref(j) => return fail(i, format!("v{j} used before definition")),
                        };
                        if ty != Some(p.ty) {
                            return fail(i, format!("argument for `{}` is not {}", p.name, p.ty));
                        }
                    }
                    invoked = true;
                }
            }
        }
        if !invoked {
            return fail(self.statements.len(), "test invokes no method".into());
        }
        Ok(())
    }

    /// MiniLang-flavoured listing for logs and dumps.
    pub fn render(&self, unit: &SourceUnit) -> String {
        let mut out = String::new();
        for (i, st) in self.statements.iter().enumerate() {
            match st {
                Statement::Construct { args } => {
                    let a: Vec<String> = args.iter().map(Value::to_string).collect();
                    let _ = writeln!(out, "{} v{i} = new {}({});", unit.name, unit.name, a.join(", "));
                }
                Statement::Invoke { receiver, method, args } => {
                    let m = unit.method(*method);
                    let a: Vec<String> = args
                        .iter()
                        .map(|a| match a {
                            Arg::Lit(v) => v.to_string(),
                            Arg::Ref(j) => format!("v{j}"),
                        })
                        .collect();
                    match m.ret {
                        Some(t) => {
                            let _ = writeln!(out, "{t} v{i} = v{receiver}.{}({});", m.name, a.join(", "));
                        }
                        None => {
                            let _ = writeln!(out, "v{receiver}.{}({});", m.name, a.join(", "));
                        }
                    }
                }
            }
        }
        out
    }
}

impl TestSuite {
    pub fn new(tests: Vec<TestCase>) -> TestSuite {
        TestSuite { tests }
    }

    pub fn len(&self) -> usize {
        self.tests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tests.is_empty()
    }

    pub fn total_statements(&self) -> usize {
        self.tests.iter().map(TestCase::len).sum()
    }
}

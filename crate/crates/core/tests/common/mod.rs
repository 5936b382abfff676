//! Shared fixtures and an independent reference interpreter.
//!
//! The reference walks the parsed AST directly, resolves variables by name and
//! records plain coverage facts (no distances). It shares nothing with the
//! runtime module beyond the AST.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use covgen_core::goals::{CoverageGoal, Criterion, GoalTarget, Partition};
use covgen_core::lang::ast::{ArithOp, BinOp, ExprId, ExprKind, Literal, RelOp, Stmt, StmtKind, UnaryOp};
use covgen_core::lang::{ExceptionKind, Line, MethodId, PredId, SourceUnit};
use covgen_core::mutation::{Mutant, MutantId, MutationOperator, Replacement};
use covgen_core::runtime::{Statement, TestCase, Value};

/// Int-only units with at most three parameters per method.
pub const FIXTURES: [(&str, &str); 20] = [
    ("Eq", "class Eq { public int f(int x) { if (x == 3) { return 1; } return 0; } }"),
    (
        "Nested",
        "class Nested { public int g(int x, int y) { int r = 0; if (x > 1) { r = 1; if (y == -2) { r = 2; } } return r; } }",
    ),
    (
        "Sign",
        "class Sign { public int s(int x) { if (x < 0) { return -1; } else if (x == 0) { return 0; } if (x < 3) { return 1; } return 2; } }",
    ),
    (
        "Sum",
        "class Sum { public int sum(int n) { int s = 0; int i = 0; while (i < n) { s = s + i; i = i + 1; } return s; } }",
    ),
    (
        "Both",
        "class Both { public int h(int a, int b) { if (a > 0 && b > 0) { return 1; } if (a < 0 || b < 0) { return -1; } return 0; } }",
    ),
    ("Neg", "class Neg { public bool k(int a) { if (!(a >= 2)) { return true; } return false; } }"),
    (
        "Div",
        "class Div { public int d(int a, int b) { return a / b; } public int m(int a, int b) { int r = a % b; if (r == 0) { return 0; } return 1; } }",
    ),
    (
        "Thrower",
        "class Thrower { public int t(int x) { if (x == 1) { throw E1; } if (x > 3) { throw E2; } return x; } }",
    ),
    (
        "Helper",
        "class Helper { public int p(int x) { int y = help(x); return y + 1; } private int help(int v) { if (v < -2) { throw E3; } return v * 2; } }",
    ),
    (
        "Acc",
        "class Acc { int total; int limit; Acc(int l) { limit = l; total = 0; } public int add(int v) { if (total + v > limit) { throw E4; } total = total + v; return total; } public bool full() { return total == limit; } }",
    ),
    (
        "Setter",
        "class Setter { int f0; Setter() { f0 = 0; } public void set(int a, int b) { if (a == b) { f0 = 1; } else { f0 = a - b; } } public int get(int a) { if (f0 > a) { return 1; } return 0; } }",
    ),
    (
        "Tri",
        "class Tri { public int tri(int a, int b, int c) { if (a == b && b == c) { return 3; } if (a == b || b == c || a == c) { return 2; } return 1; } }",
    ),
    (
        "Mix",
        "class Mix { public int ar(int a, int b) { int s = a + b; int p = a * b; int q = s - p; if (q % 2 == 0) { return q; } return -q; } }",
    ),
    (
        "Find",
        "class Find { public int find(int n) { int i = 0; while (i < 5) { if (i * i == n) { return i; } i = i + 1; } return -1; } }",
    ),
    (
        "Grid",
        "class Grid { public int nl(int a, int b) { int c = 0; int i = 0; while (i < a) { int j = 0; while (j < b) { c = c + 1; j = j + 1; } i = i + 1; } return c; } }",
    ),
    ("Fact", "class Fact { public int fact(int n) { if (n <= 1) { return 1; } return n * fact(n - 1); } }"),
    (
        "Chain",
        "class Chain { public int outer(int x) { return inner(x) + 1; } public int inner(int x) { if (x == 0) { throw E5; } return 10 / x; } }",
    ),
    (
        "Max",
        "class Max { public int mx(int a, int b, int c) { int m = a; if (b > m) { m = b; } if (c > m) { m = c; } return m; } }",
    ),
    (
        "Guarded",
        "class Guarded { int k; Guarded(int a) { if (a == -5) { throw E1; } k = a; } public int f(int x) { if (x != k) { return x - k; } return 0; } }",
    ),
    (
        "Flags",
        "class Flags { public int eqs(int a, int b) { bool e = a == b; bool n = a != b; if (e) { return 1; } if (n && a <= b) { return 2; } return 3; } }",
    ),
];

pub const LO: i64 = -5;
pub const HI: i64 = 5;

/// Fixtures that can never exit abnormally.
pub fn normal_exit_fixtures() -> impl Iterator<Item = (&'static str, &'static str)> {
    FIXTURES.into_iter().filter(|(_, s)| !s.contains("throw") && !s.contains('/') && !s.contains('%'))
}

fn tuples(arity: usize) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..arity {
        out = out.into_iter().flat_map(|p| (LO..=HI).map(move |v| [p.clone(), vec![v]].concat())).collect();
    }
    out
}

/// Every construct-then-call test over [LO, HI].
pub fn exhaustive_tests(unit: &SourceUnit) -> Vec<TestCase> {
    let ctor_arity = unit.ctor().map_or(0, |c| unit.method(c).params.len());
    let mut out = Vec::new();
    for cargs in tuples(ctor_arity) {
        let construct = Statement::Construct { args: cargs.iter().map(|v| Value::Int(*v)).collect() };
        for m in unit.public_methods() {
            for margs in tuples(unit.method(m).params.len()) {
                let args = margs.iter().map(|v| covgen_core::runtime::Arg::Lit(Value::Int(*v))).collect();
                out.push(TestCase::new(vec![construct.clone(), Statement::Invoke { receiver: 0, method: m, args }]));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum V {
    I(i64),
    B(bool),
}

impl V {
    fn int(self) -> i64 {
        match self {
            V::I(x) => x,
            V::B(_) => panic!("int expected"),
        }
    }

    fn bool(self) -> bool {
        match self {
            V::B(b) => b,
            V::I(_) => panic!("bool expected"),
        }
    }
}

/// Coverage facts of one test.
#[derive(Debug, Default, Clone)]
pub struct RefCoverage {
    pub lines: BTreeSet<Line>,
    /// (executing method, predicate, outcome)
    pub sides: BTreeSet<(MethodId, PredId, bool)>,
    pub direct: BTreeSet<MethodId>,
    /// Private helpers: their branches count for DBC from any caller.
    pub private: BTreeSet<MethodId>,
    pub direct_ok: BTreeSet<MethodId>,
    pub direct_exceptions: BTreeSet<(MethodId, ExceptionKind)>,
    returns: Vec<(MethodId, V)>,
    pub killed: BTreeSet<MutantId>,
    /// Arithmetic expressions evaluated with a zero right operand.
    pub zero_divisor: BTreeSet<ExprId>,
}

impl RefCoverage {
    pub fn covers(&self, goal: &CoverageGoal) -> bool {
        match (goal.criterion, goal.target) {
            (Criterion::Bc, GoalTarget::Branch(b)) => self.sides.iter().any(|&(_, p, s)| p == b.pred && s == b.side),
            (Criterion::Dbc, GoalTarget::Branch(b)) => {
                self.sides.iter().any(|&(m, p, s)| p == b.pred && s == b.side && (self.direct.contains(&m) || self.private.contains(&m)))
            }
            (Criterion::Lc, GoalTarget::Line(l)) => self.lines.contains(&l),
            (Criterion::Wm, GoalTarget::Mutant(id)) => self.killed.contains(&id),
            (Criterion::Tmc, GoalTarget::Method(m)) => self.direct.contains(&m),
            (Criterion::Ntmc, GoalTarget::Method(m)) => self.direct_ok.contains(&m),
            (Criterion::Ec, GoalTarget::Exception(m, k)) => self.direct_exceptions.contains(&(m, k)),
            (Criterion::Oc, GoalTarget::Output(m, p)) => self.returns.iter().any(|&(rm, v)| {
                rm == m
                    && match (p, v) {
                        (Partition::Negative, V::I(x)) => x < 0,
                        (Partition::Zero, V::I(x)) => x == 0,
                        (Partition::Positive, V::I(x)) => x > 0,
                        (Partition::True, V::B(b)) => b,
                        (Partition::False, V::B(b)) => !b,
                        _ => false,
                    }
            }),
            (c, t) => panic!("unexpected goal {c:?} {t:?}"),
        }
    }
}

enum Stop {
    Throw(ExceptionKind),
}

enum Flow {
    Next,
    Ret(Option<V>),
}

struct Ref<'a> {
    unit: &'a SourceUnit,
    at: HashMap<ExprId, Vec<&'a Mutant>>,
    cov: RefCoverage,
    fuel: u64,
}

fn arith(op: ArithOp, a: i64, b: i64) -> Option<i64> {
    match op {
        ArithOp::Add => a.checked_add(b),
        ArithOp::Sub => a.checked_sub(b),
        ArithOp::Mul => a.checked_mul(b),
        ArithOp::Div => a.checked_div(b),
        ArithOp::Rem => a.checked_rem(b),
    }
}

fn rel(op: RelOp, a: V, b: V) -> bool {
    match (a, b) {
        (V::I(x), V::I(y)) => match op {
            RelOp::Lt => x < y,
            RelOp::Le => x <= y,
            RelOp::Gt => x > y,
            RelOp::Ge => x >= y,
            RelOp::Eq => x == y,
            RelOp::Ne => x != y,
        },
        (V::B(x), V::B(y)) => match op {
            RelOp::Eq => x == y,
            RelOp::Ne => x != y,
            _ => panic!("ordering on bools"),
        },
        _ => panic!("mixed comparison"),
    }
}

type Scopes = Vec<HashMap<String, V>>;

impl<'a> Ref<'a> {
    fn lookup(scopes: &Scopes, fields: &HashMap<String, V>, name: &str) -> V {
        scopes.iter().rev().find_map(|s| s.get(name)).or_else(|| fields.get(name)).copied().expect("bound name")
    }

    fn call(&mut self, m: MethodId, args: Vec<V>, fields: &mut HashMap<String, V>) -> Result<Option<V>, Stop> {
        let decl = self.unit.method(m);
        let frame: HashMap<String, V> = decl.params.iter().map(|p| p.name.clone()).zip(args).collect();
        let mut scopes = vec![frame];
        match self.block(m, &decl.body, &mut scopes, fields)? {
            Flow::Ret(v) => Ok(v),
            Flow::Next => Ok(None),
        }
    }

    fn block(&mut self, m: MethodId, body: &'a [Stmt], scopes: &mut Scopes, fields: &mut HashMap<String, V>) -> Result<Flow, Stop> {
        scopes.push(HashMap::new());
        let r = self.stmts(m, body, scopes, fields);
        scopes.pop();
        r
    }

    fn stmts(&mut self, m: MethodId, body: &'a [Stmt], scopes: &mut Scopes, fields: &mut HashMap<String, V>) -> Result<Flow, Stop> {
        for s in body {
            self.fuel -= 1;
            assert!(self.fuel > 0, "reference interpreter ran out of fuel");
            self.cov.lines.insert(s.line);
            match &s.kind {
                StmtKind::Decl { name, init, .. } => {
                    let v = self.eval(m, init, scopes, fields)?;
                    scopes.last_mut().unwrap().insert(name.clone(), v);
                }
                StmtKind::Assign { name, value, .. } => {
                    let v = self.eval(m, value, scopes, fields)?;
                    match scopes.iter_mut().rev().find(|s| s.contains_key(name)) {
                        Some(s) => {
                            s.insert(name.clone(), v);
                        }
                        None => {
                            fields.insert(name.clone(), v);
                        }
                    }
                }
                StmtKind::If { pred, cond, then_body, else_body } => {
                    let b = self.eval(m, cond, scopes, fields)?.bool();
                    self.cov.sides.insert((m, *pred, b));
                    let flow = match (b, else_body) {
                        (true, _) => self.block(m, then_body, scopes, fields)?,
                        (false, Some(e)) => self.block(m, e, scopes, fields)?,
                        (false, None) => Flow::Next,
                    };
                    if let Flow::Ret(_) = flow {
                        return Ok(flow);
                    }
                }
                StmtKind::While { pred, cond, body } => loop {
                    let b = self.eval(m, cond, scopes, fields)?.bool();
                    self.cov.sides.insert((m, *pred, b));
                    if !b {
                        break;
                    }
                    if let Flow::Ret(v) = self.block(m, body, scopes, fields)? {
                        return Ok(Flow::Ret(v));
                    }
                },
                StmtKind::Return(e) => {
                    let v = match e {
                        Some(e) => Some(self.eval(m, e, scopes, fields)?),
                        None => None,
                    };
                    return Ok(Flow::Ret(v));
                }
                StmtKind::Throw(k) => return Err(Stop::Throw(*k)),
                StmtKind::Expr(e) => {
                    self.eval(m, e, scopes, fields)?;
                }
            }
        }
        Ok(Flow::Next)
    }

    fn mutants(&self, id: ExprId) -> Vec<&'a Mutant> {
        self.at.get(&id).cloned().unwrap_or_default()
    }

    fn eval(&mut self, m: MethodId, e: &'a covgen_core::lang::ast::Expr, scopes: &mut Scopes, fields: &mut HashMap<String, V>) -> Result<V, Stop> {
        match &e.kind {
            ExprKind::Lit(Literal::Int(v)) => Ok(V::I(*v)),
            ExprKind::Lit(Literal::Bool(b)) => Ok(V::B(*b)),
            ExprKind::Lit(l) => panic!("fixtures are int and bool only: {l:?}"),
            ExprKind::Var { name, .. } => {
                for mu in self.mutants(e.id) {
                    assert_eq!(mu.operator, MutationOperator::Uoi);
                    self.cov.killed.insert(mu.id);
                }
                Ok(Self::lookup(scopes, fields, name))
            }
            ExprKind::Unary(UnaryOp::Neg, inner) => {
                let v = self.eval(m, inner, scopes, fields)?.int();
                v.checked_neg().map(V::I).ok_or(Stop::Throw(ExceptionKind::Arithmetic))
            }
            ExprKind::Unary(UnaryOp::Not, inner) => Ok(V::B(!self.eval(m, inner, scopes, fields)?.bool())),
            ExprKind::Binary(BinOp::And, l, r) => {
                if !self.eval(m, l, scopes, fields)?.bool() {
                    return Ok(V::B(false));
                }
                self.eval(m, r, scopes, fields)
            }
            ExprKind::Binary(BinOp::Or, l, r) => {
                if self.eval(m, l, scopes, fields)?.bool() {
                    return Ok(V::B(true));
                }
                self.eval(m, r, scopes, fields)
            }
            ExprKind::Binary(BinOp::Arith(op), l, r) => {
                let a = self.eval(m, l, scopes, fields)?.int();
                let b = self.eval(m, r, scopes, fields)?.int();
                let res = arith(*op, a, b);
                if b == 0 {
                    self.cov.zero_divisor.insert(e.id);
                }
                for mu in self.mutants(e.id) {
                    let Replacement::Arith(mop) = mu.replacement else { panic!("non-AOR mutant on arithmetic") };
                    if arith(mop, a, b) != res {
                        self.cov.killed.insert(mu.id);
                    }
                }
                res.map(V::I).ok_or(Stop::Throw(ExceptionKind::Arithmetic))
            }
            ExprKind::Binary(BinOp::Rel(op), l, r) => {
                let a = self.eval(m, l, scopes, fields)?;
                let b = self.eval(m, r, scopes, fields)?;
                let res = rel(*op, a, b);
                for mu in self.mutants(e.id) {
                    let mres = match mu.replacement {
                        Replacement::Rel(o) => rel(o, a, b),
                        Replacement::ConstTrue => true,
                        Replacement::ConstFalse => false,
                        other => panic!("unexpected ROR replacement {other:?}"),
                    };
                    if mres != res {
                        self.cov.killed.insert(mu.id);
                    }
                }
                Ok(V::B(res))
            }
            ExprKind::Call { name, args, .. } => {
                let mut vals = Vec::new();
                for a in args {
                    vals.push(self.eval(m, a, scopes, fields)?);
                }
                let callee = self.unit.method_id(name).expect("known method");
                Ok(self.call(callee, vals, fields)?.expect("value call"))
            }
        }
    }
}

fn int_of(v: &Value) -> i64 {
    match v {
        Value::Int(x) => *x,
        other => panic!("int argument expected, got {other:?}"),
    }
}

/// Runs a construct-then-invoke test with the reference semantics.
pub fn reference_run(unit: &SourceUnit, mutants: &[Mutant], test: &TestCase) -> RefCoverage {
    let mut at: HashMap<ExprId, Vec<&Mutant>> = HashMap::new();
    for mu in mutants {
        at.entry(mu.expr).or_default().push(mu);
    }
    let mut r = Ref { unit, at, cov: RefCoverage::default(), fuel: 1_000_000 };
    r.cov.private = (0..unit.methods().len() as MethodId)
        .filter(|&m| !unit.method(m).is_ctor && unit.method(m).visibility == covgen_core::lang::Visibility::Private)
        .collect();
    let mut fields: HashMap<String, V> = HashMap::new();
    for f in &unit.class.fields {
        let v = match f.ty {
            covgen_core::lang::Type::Bool => V::B(false),
            _ => V::I(0),
        };
        fields.insert(f.name.clone(), v);
    }
    for st in &test.statements {
        match st {
            Statement::Construct { args } => {
                let Some(c) = unit.ctor() else { continue };
                r.cov.direct.insert(c);
                let vals = args.iter().map(|v| V::I(int_of(v))).collect();
                match r.call(c, vals, &mut fields) {
                    Ok(_) => {
                        r.cov.direct_ok.insert(c);
                    }
                    Err(Stop::Throw(k)) => {
                        r.cov.direct_exceptions.insert((c, k));
                        break;
                    }
                }
            }
            Statement::Invoke { method, args, .. } => {
                r.cov.direct.insert(*method);
                let vals = args
                    .iter()
                    .map(|a| match a {
                        covgen_core::runtime::Arg::Lit(v) => V::I(int_of(v)),
                        covgen_core::runtime::Arg::Ref(_) => panic!("fixtures use literals only"),
                    })
                    .collect();
                match r.call(*method, vals, &mut fields) {
                    Ok(v) => {
                        r.cov.direct_ok.insert(*method);
                        if let Some(v) = v {
                            r.cov.returns.push((*method, v));
                        }
                    }
                    Err(Stop::Throw(k)) => {
                        r.cov.direct_exceptions.insert((*method, k));
                        break;
                    }
                }
            }
        }
    }
    r.cov
}

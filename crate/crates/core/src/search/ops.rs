//! Random test generation and test-level variation operators.
//!
//! Tests produced here keep a fixed shape: statement 0 constructs the object
//! and every later statement invokes a public method on it.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::lang::ast::{Literal, MethodId, Type};
use crate::lang::SourceUnit;
use crate::runtime::{Arg, Statement, TestCase, Value};

const SMALL_RANGE: i64 = 100;
const REF_PROB: f64 = 0.25;

/// Seeded literal pool: common values plus the constants of the unit.
#[derive(Debug, Clone, PartialEq)]
pub struct ValuePool {
    pub ints: Vec<i64>,
    pub floats: Vec<f64>,
    pub strings: Vec<String>,
}

impl ValuePool {
    pub fn from_unit(unit: &SourceUnit) -> ValuePool {
        let mut pool = ValuePool { ints: vec![0, 1, -1], floats: vec![0.0, 1.0, -1.0], strings: vec![String::new()] };
        for c in &unit.constants {
            match c {
                Literal::Int(v) if !pool.ints.contains(v) => pool.ints.push(*v),
                Literal::Float(v) if !pool.floats.contains(v) => pool.floats.push(*v),
                Literal::Str(s) if !pool.strings.contains(s) => pool.strings.push(s.clone()),
                _ => {}
            }
        }
        pool
    }

    pub fn contains(&self, v: &Value) -> bool {
        match v {
            Value::Int(x) => self.ints.contains(x),
            Value::Float(x) => self.floats.contains(x),
            Value::Str(s) => self.strings.iter().any(|p| p.as_str() == &**s),
            Value::Bool(_) => true,
        }
    }

    pub fn sample<R: Rng>(&self, ty: Type, rng: &mut R) -> Value {
        let from_pool = rng.random_bool(0.5);
        match ty {
            Type::Int if from_pool => Value::Int(*self.ints.choose(rng).expect("nonempty")),
            Type::Int => Value::Int(rng.random_range(-SMALL_RANGE..=SMALL_RANGE)),
            Type::Float if from_pool => Value::Float(*self.floats.choose(rng).expect("nonempty")),
            Type::Float => Value::Float((rng.random_range(-100.0..=100.0f64) * 100.0).round() / 100.0),
            Type::Bool => Value::Bool(rng.random_bool(0.5)),
            Type::Str if from_pool => Value::Str(self.strings.choose(rng).expect("nonempty").as_str().into()),
            Type::Str => {
                let n = rng.random_range(0..=5);
                let s: String = (0..n).map(|_| rng.random_range(b'a'..=b'z') as char).collect();
                Value::Str(s.into())
            }
        }
    }

    /// Small perturbation of a value, or a fresh sample.
    pub fn perturb<R: Rng>(&self, v: &Value, rng: &mut R) -> Value {
        match v {
            Value::Int(x) => match rng.random_range(0..3) {
                0 => Value::Int(x.saturating_add(if rng.random_bool(0.5) { 1 } else { -1 })),
                1 => Value::Int(x.saturating_add(rng.random_range(-10..=10))),
                _ => self.sample(Type::Int, rng),
            },
            Value::Float(x) => match rng.random_range(0..3) {
                0 => Value::Float(x + if rng.random_bool(0.5) { 1.0 } else { -1.0 }),
                1 => Value::Float(x + rng.random_range(-1.0..=1.0)),
                _ => self.sample(Type::Float, rng),
            },
            Value::Bool(b) => Value::Bool(!b),
            Value::Str(s) => {
                let mut chars: Vec<char> = s.chars().collect();
                match rng.random_range(0..4) {
                    0 if !chars.is_empty() => {
                        let i = rng.random_range(0..chars.len());
                        chars.remove(i);
                    }
                    1 => {
                        let i = rng.random_range(0..=chars.len());
                        chars.insert(i, rng.random_range(b'a'..=b'z') as char);
                    }
                    2 if !chars.is_empty() => {
                        let i = rng.random_range(0..chars.len());
                        chars[i] = rng.random_range(b'a'..=b'z') as char;
                    }
                    _ => return self.sample(Type::Str, rng),
                }
                Value::Str(chars.into_iter().collect::<String>().into())
            }
        }
    }
}

fn ctor_params(unit: &SourceUnit) -> Vec<Type> {
    unit.ctor().map(|c| unit.method(c).params.iter().map(|p| p.ty).collect()).unwrap_or_default()
}

/// A random invocation to be placed at index `pos`, possibly reusing earlier results.
fn random_invocation<R: Rng>(
    unit: &SourceUnit,
    methods: &[MethodId],
    test: &TestCase,
    pos: usize,
    pool: &ValuePool,
    rng: &mut R,
) -> Statement {
    let method = *methods.choose(rng).expect("unit has a public method");
    let args = unit
        .method(method)
        .params
        .iter()
        .map(|p| {
            if rng.random_bool(REF_PROB) {
                let refs: Vec<usize> = (1..pos).filter(|&j| test.value_type(unit, j) == Some(p.ty)).collect();
                if let Some(&j) = refs.choose(rng) {
                    return Arg::Ref(j);
                }
            }
            Arg::Lit(pool.sample(p.ty, rng))
        })
        .collect();
    Statement::Invoke { receiver: 0, method, args }
}

/// Construct the object, then call 1 to 10 random public methods.
pub fn random_test<R: Rng>(unit: &SourceUnit, pool: &ValuePool, rng: &mut R) -> TestCase {
    let methods: Vec<MethodId> = unit.public_methods().collect();
    let args = ctor_params(unit).into_iter().map(|t| pool.sample(t, rng)).collect();
    let mut test = TestCase::new(vec![Statement::Construct { args }]);
    let n = rng.random_range(1..=10);
    for _ in 0..n {
        let pos = test.statements.len();
        let st = random_invocation(unit, &methods, &test, pos, pool, rng);
        test.statements.push(st);
    }
    test
}

fn remove_statement<R: Rng>(test: &mut TestCase, k: usize, unit: &SourceUnit, pool: &ValuePool, rng: &mut R) {
    let removed_ty = test.value_type(unit, k);
    test.statements.remove(k);
    for st in test.statements.iter_mut().skip(k) {
        if let Statement::Invoke { args, method, .. } = st {
            let params = &unit.method(*method).params;
            for (a, p) in args.iter_mut().zip(params) {
                if let Arg::Ref(j) = a {
                    if *j == k {
                        debug_assert_eq!(removed_ty, Some(p.ty));
                        *a = Arg::Lit(pool.sample(p.ty, rng));
                    } else if *j > k {
                        *j -= 1;
                    }
                }
            }
        }
    }
}

fn insert_statement(test: &mut TestCase, pos: usize, st: Statement) {
    for later in test.statements.iter_mut().skip(pos) {
        if let Statement::Invoke { args, .. } = later {
            for a in args.iter_mut() {
                if let Arg::Ref(j) = a {
                    if *j >= pos {
                        *j += 1;
                    }
                }
            }
        }
    }
    test.statements.insert(pos, st);
}

/// Delete, change and insert statements, each with probability 1/3, retrying
/// until something changed.
pub fn mutate_test<R: Rng>(test: &TestCase, unit: &SourceUnit, pool: &ValuePool, max_len: usize, rng: &mut R) -> TestCase {
    let methods: Vec<MethodId> = unit.public_methods().collect();
    let mut t = test.clone();
    let mut changed = false;
    while !changed {
        if rng.random_bool(1.0 / 3.0) && t.len() > 2 {
            let n = (t.len() - 1) as f64;
            for k in (1..t.len()).rev() {
                if t.len() > 2 && rng.random_bool(1.0 / n) {
                    remove_statement(&mut t, k, unit, pool, rng);
                    changed = true;
                }
            }
        }
        if rng.random_bool(1.0 / 3.0) {
            let n = t.len() as f64;
            for k in 0..t.len() {
                if !rng.random_bool(1.0 / n) {
                    continue;
                }
                changed |= change_statement(&mut t, k, unit, &methods, pool, rng);
            }
        }
        if rng.random_bool(1.0 / 3.0) {
            let mut p = 1.0;
            while t.len() < max_len && rng.random_bool(p) {
                let pos = rng.random_range(1..=t.len());
                let st = random_invocation(unit, &methods, &t, pos, pool, rng);
                insert_statement(&mut t, pos, st);
                changed = true;
                p *= 0.5;
            }
        }
    }
    t
}

fn change_statement<R: Rng>(
    t: &mut TestCase,
    k: usize,
    unit: &SourceUnit,
    methods: &[MethodId],
    pool: &ValuePool,
    rng: &mut R,
) -> bool {
    match &mut t.statements[k] {
        Statement::Construct { args } => {
            if args.is_empty() {
                return false;
            }
            let i = rng.random_range(0..args.len());
            args[i] = pool.perturb(&args[i], rng);
            true
        }
        Statement::Invoke { args, method, .. } => {
            if !args.is_empty() && rng.random_bool(0.8) {
                let i = rng.random_range(0..args.len());
                let ty = unit.method(*method).params[i].ty;
                args[i] = match &args[i] {
                    Arg::Lit(v) => Arg::Lit(pool.perturb(v, rng)),
                    Arg::Ref(_) => Arg::Lit(pool.sample(ty, rng)),
                };
                return true;
            }
            // Replace the call; later references to its result need the old type.
            let old_ty = t.value_type(unit, k);
            let st = random_invocation(unit, methods, t, k, pool, rng);
            t.statements[k] = st;
            if t.value_type(unit, k) != old_ty {
                detach_refs(t, k, unit, pool, rng);
            }
            true
        }
    }
}

/// Replaces every reference to statement `k` with a literal.
fn detach_refs<R: Rng>(t: &mut TestCase, k: usize, unit: &SourceUnit, pool: &ValuePool, rng: &mut R) {
    for st in t.statements.iter_mut().skip(k + 1) {
        if let Statement::Invoke { args, method, .. } = st {
            for (a, p) in args.iter_mut().zip(&unit.method(*method).params) {
                if matches!(a, Arg::Ref(j) if *j == k) {
                    *a = Arg::Lit(pool.sample(p.ty, rng));
                }
            }
        }
    }
}

/// Single-point crossover: the head of `a` joined to the tail of `b`.
/// Dangling references in the tail become fresh literals.
pub fn crossover_tests<R: Rng>(
    a: &TestCase,
    b: &TestCase,
    unit: &SourceUnit,
    pool: &ValuePool,
    max_len: usize,
    rng: &mut R,
) -> TestCase {
    let cut_a = rng.random_range(1..=a.len());
    let cut_b = rng.random_range(1..=b.len());
    let mut child = TestCase::new(a.statements[..cut_a].to_vec());
    for (offset, st) in b.statements[cut_b..].iter().enumerate() {
        if child.len() >= max_len {
            break;
        }
        let Statement::Invoke { method, args, .. } = st else { continue };
        let params = &unit.method(*method).params;
        let args = args
            .iter()
            .zip(params)
            .map(|(arg, p)| match arg {
                Arg::Ref(j) if *j >= cut_b && *j < cut_b + offset => Arg::Ref(*j - cut_b + cut_a),
                Arg::Ref(_) => Arg::Lit(pool.sample(p.ty, rng)),
                lit => lit.clone(),
            })
            .collect();
        child.statements.push(Statement::Invoke { receiver: 0, method: *method, args });
    }
    if child.len() < 2 {
        let st = random_invocation(unit, &unit.public_methods().collect::<Vec<_>>(), &child, 1, pool, rng);
        child.statements.push(st);
    }
    child
}

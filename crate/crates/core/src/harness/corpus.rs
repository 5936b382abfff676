//! Synthetic MiniLang corpus generation.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::lang::{parse, Type};

/// Classes with at least this many branches count as big.
pub const BIG_CLASS_BRANCHES: usize = 200;
pub const SMALL_CLASS_MIN_BRANCHES: usize = 50;

/// Relative frequency of optional constructs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureWeights {
    pub loops: f64,
    pub throws: f64,
    pub arithmetic: f64,
    pub long_blocks: f64,
    pub calls: f64,
    pub compound: f64,
    /// Chance a non-first public method returns void.
    pub void_methods: f64,
}

impl Default for FeatureWeights {
    fn default() -> Self {
        FeatureWeights {
            loops: 0.1,
            throws: 0.15,
            arithmetic: 0.35,
            long_blocks: 0.2,
            calls: 0.15,
            compound: 0.15,
            void_methods: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub small_classes: usize,
    pub big_classes: usize,
    /// Predicates per small class; branches are twice this.
    pub small_predicates: usize,
    pub big_predicates: usize,
    pub weights: FeatureWeights,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec { small_classes: 30, big_classes: 10, small_predicates: 30, big_predicates: 110, weights: FeatureWeights::default() }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.small_classes > 0 && 2 * self.small_predicates < SMALL_CLASS_MIN_BRANCHES {
            return Err(HarnessError::InfeasibleSpec(format!(
                "small classes need at least {} predicates, got {}",
                SMALL_CLASS_MIN_BRANCHES / 2,
                self.small_predicates
            )));
        }
        if self.big_classes > 0 && 2 * self.big_predicates < BIG_CLASS_BRANCHES {
            return Err(HarnessError::InfeasibleSpec(format!(
                "big classes need at least {} predicates, got {}",
                BIG_CLASS_BRANCHES / 2,
                self.big_predicates
            )));
        }
        let w = &self.weights;
        for x in [w.loops, w.throws, w.arithmetic, w.long_blocks, w.calls, w.compound, w.void_methods] {
            if !(0.0..=1.0).contains(&x) {
                return Err(HarnessError::InfeasibleSpec("feature weights must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedClass {
    pub name: String,
    pub predicates: usize,
    pub source: String,
}

/// Generates the corpus in memory. Deterministic in `seed`.
pub fn generate_corpus(spec: &CorpusSpec, seed: u64) -> Result<Vec<GeneratedClass>, HarnessError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let jobs = (0..spec.small_classes)
        .map(|i| (format!("Small{i:02}"), spec.small_predicates))
        .chain((0..spec.big_classes).map(|i| (format!("Big{i:02}"), spec.big_predicates)));
    for (name, preds) in jobs {
        let source = ClassGen::new(&mut rng, &spec.weights).class(&name, preds);
        let unit = parse(&source).map_err(|e| HarnessError::Generator(format!("{name}: {e}")))?;
        if unit.count_branches() != 2 * preds {
            return Err(HarnessError::Generator(format!(
                "{name}: expected {} branches, generated {}",
                2 * preds,
                unit.count_branches()
            )));
        }
        out.push(GeneratedClass { name, predicates: preds, source });
    }
    Ok(out)
}

/// Writes one `<Class>.mini` per class into `dir` and returns the paths.
pub fn gen_corpus(spec: &CorpusSpec, seed: u64, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let classes = generate_corpus(spec, seed)?;
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut paths = Vec::with_capacity(classes.len());
    for c in classes {
        let p = dir.join(format!("{}.mini", c.name));
        fs::write(&p, c.source).map_err(|e| HarnessError::io(&p, e))?;
        paths.push(p);
    }
    Ok(paths)
}

const EXCEPTIONS: [&str; 5] = ["E1", "E2", "E3", "E4", "E5"];
const WORDS: [&str; 6] = ["", "a", "ab", "key", "miniLang", "zz"];
const MAX_DEPTH: usize = 3;

struct Method {
    name: String,
    params: Vec<(String, Type)>,
    ret: Option<Type>,
}

struct ClassGen<'r> {
    rng: &'r mut ChaCha8Rng,
    w: FeatureWeights,
    out: String,
    scopes: Vec<Vec<(String, Type)>>,
    next_var: usize,
    helpers: Vec<Method>,
    inputs: Vec<(String, Type)>,
    ret: Option<Type>,
}

fn type_kw(t: Option<Type>) -> &'static str {
    t.map_or("void", Type::keyword)
}

impl<'r> ClassGen<'r> {
    fn new(rng: &'r mut ChaCha8Rng, w: &FeatureWeights) -> ClassGen<'r> {
        ClassGen { rng, w: w.clone(), out: String::new(), scopes: Vec::new(), next_var: 0, helpers: Vec::new(), inputs: Vec::new(), ret: None }
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.random_bool(p.clamp(0.0, 1.0))
    }

    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.out.push_str("    ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn vars(&self, ty: Type) -> Vec<String> {
        self.scopes.iter().flatten().filter(|(_, t)| *t == ty).map(|(n, _)| n.clone()).collect()
    }

    fn pick_var(&mut self, ty: Type) -> Option<String> {
        let vs = self.vars(ty);
        vs.choose(self.rng).cloned()
    }

    fn fresh(&mut self, ty: Type) -> String {
        self.fresh_named('v', ty)
    }

    /// Loop counters get their own prefix so plain assignments never touch them.
    fn fresh_named(&mut self, prefix: char, ty: Type) -> String {
        let n = format!("{prefix}{}", self.next_var);
        self.next_var += 1;
        self.scopes.last_mut().expect("inside a method").push((n.clone(), ty));
        n
    }

    fn int_const(&mut self) -> i64 {
        self.rng.random_range(-20..=60)
    }

    fn int_atom(&mut self) -> String {
        if self.chance(0.7) {
            if let Some(v) = self.pick_var(Type::Int) {
                return v;
            }
        }
        self.rng.random_range(0..=30).to_string()
    }

    fn int_expr(&mut self) -> String {
        let a = self.int_atom();
        if !self.chance(self.w.arithmetic) {
            return a;
        }
        let b = self.int_atom();
        let op = ["+", "-", "*", "+", "-"].choose(self.rng).copied().unwrap_or("+");
        if self.chance(0.25) {
            // divisor may hit zero
            let k = self.rng.random_range(1..=9);
            let d = ["/", "%"].choose(self.rng).copied().unwrap_or("/");
            return format!("{a} {op} {b} {d} ({} - {k})", self.int_atom());
        }
        format!("{a} {op} {b}")
    }

    fn float_expr(&mut self) -> String {
        match self.pick_var(Type::Float) {
            Some(v) if self.chance(0.5) => format!("{v} * {}.5", self.rng.random_range(0..4)),
            Some(v) => format!("{v} + {}.25", self.rng.random_range(0..9)),
            None => format!("{}.5", self.rng.random_range(0..9)),
        }
    }

    /// Parameters and fields, which tests control, dominate conditions.
    fn cond_var(&mut self, ty: Type) -> Option<String> {
        if self.chance(0.8) {
            let ins: Vec<String> = self.inputs.iter().filter(|(_, t)| *t == ty).map(|(n, _)| n.clone()).collect();
            if let Some(v) = ins.choose(self.rng) {
                return Some(v.clone());
            }
        }
        self.pick_var(ty)
    }

    fn relation(&mut self) -> String {
        let r: f64 = self.rng.random();
        if r < 0.12 {
            if let Some(s) = self.cond_var(Type::Str) {
                let op = if self.chance(0.7) { "==" } else { "!=" };
                let w = WORDS.choose(self.rng).copied().unwrap_or("a");
                return format!("{s} {op} \"{w}\"");
            }
        }
        if r < 0.2 {
            if let Some(b) = self.cond_var(Type::Bool) {
                return if self.chance(0.5) { b } else { format!("!{b}") };
            }
        }
        if r < 0.28 {
            if let Some(f) = self.cond_var(Type::Float) {
                let op = ["<", ">", "<=", ">="].choose(self.rng).copied().unwrap_or("<");
                return format!("{f} {op} {}.5", self.rng.random_range(-5..10));
            }
        }
        let v = self.cond_var(Type::Int).unwrap_or_else(|| "f0".to_string());
        let lhs = if self.chance(self.w.arithmetic * 0.4) {
            let op = ["+", "-", "*"].choose(self.rng).copied().unwrap_or("+");
            format!("{v} {op} {}", self.rng.random_range(1..=5))
        } else {
            v
        };
        let op = ["<", "<=", ">", ">=", "==", "!="].choose(self.rng).copied().unwrap_or("<");
        let rhs = match self.cond_var(Type::Int) {
            Some(w) if self.chance(0.25) => w,
            _ => self.int_const().to_string(),
        };
        format!("{lhs} {op} {rhs}")
    }

    /// A rarely true guard for a throw.
    fn guard(&mut self) -> String {
        let v = self.cond_var(Type::Int).unwrap_or_else(|| "f0".to_string());
        let k = self.int_const();
        match self.rng.random_range(0..3) {
            0 | 1 => format!("{v} == {k}"),
            _ => format!("{v} > {}", k + 40),
        }
    }

    fn condition(&mut self) -> String {
        let a = self.relation();
        if self.chance(self.w.compound) {
            let b = self.relation();
            let op = if self.chance(0.5) { "&&" } else { "||" };
            format!("{a} {op} {b}")
        } else {
            a
        }
    }

    fn expr_of(&mut self, ty: Type) -> String {
        match ty {
            Type::Int => self.int_expr(),
            Type::Float => self.float_expr(),
            Type::Bool => self.relation(),
            Type::Str => match self.pick_var(Type::Str) {
                Some(v) if self.chance(0.5) => v,
                _ => format!("\"{}\"", WORDS.choose(self.rng).copied().unwrap_or("a")),
            },
        }
    }

    fn simple(&mut self, depth: usize) {
        let r: f64 = self.rng.random();
        if r < self.w.calls && !self.helpers.is_empty() {
            let i = self.rng.random_range(0..self.helpers.len());
            let params: Vec<Type> = self.helpers[i].params.iter().map(|p| p.1).collect();
            let args: Vec<String> = params.into_iter().map(|t| self.expr_of(t)).collect();
            let call = format!("{}({})", self.helpers[i].name, args.join(", "));
            match self.helpers[i].ret {
                Some(t) => {
                    let v = self.fresh(t);
                    self.line(depth, &format!("{} {v} = {call};", t.keyword()));
                }
                None => self.line(depth, &format!("{call};")),
            }
            return;
        }
        let existing = self.vars(Type::Int).into_iter().filter(|v| v.starts_with('v') || v.starts_with('f')).collect::<Vec<_>>();
        if r < 0.5 && !existing.is_empty() {
            let v = existing.choose(self.rng).cloned().unwrap_or_default();
            let e = self.int_expr();
            self.line(depth, &format!("{v} = {e};"));
        } else if r < 0.6 && !self.vars(Type::Float).is_empty() {
            let e = self.float_expr();
            let v = self.fresh(Type::Float);
            self.line(depth, &format!("float {v} = {e};"));
        } else {
            let e = self.int_expr();
            let v = self.fresh(Type::Int);
            self.line(depth, &format!("int {v} = {e};"));
        }
    }

    fn straight(&mut self, depth: usize, n: usize) {
        for _ in 0..n {
            self.simple(depth);
        }
    }

    fn push_scope(&mut self) {
        self.scopes.push(Vec::new());
    }

    fn pop_scope(&mut self) {
        self.scopes.pop();
    }

    fn ret_stmt(&mut self, depth: usize) {
        match self.ret {
            Some(t) => {
                let e = self.expr_of(t);
                self.line(depth, &format!("return {e};"));
            }
            None => self.line(depth, "return;"),
        }
    }

    /// Emits statements using exactly `budget` predicates.
    fn stmts(&mut self, depth: usize, mut budget: usize) {
        let nest = depth - 2;
        while budget > 0 {
            if self.chance(self.w.long_blocks) {
                let n = self.rng.random_range(8..=12);
                self.straight(depth, n);
            } else {
                let n = self.rng.random_range(0..=2);
                self.straight(depth, n);
            }
            let r: f64 = self.rng.random();
            if r < self.w.throws {
                let c = self.guard();
                let k = EXCEPTIONS.choose(self.rng).copied().unwrap_or("E1");
                self.line(depth, &format!("if ({c}) {{"));
                self.line(depth + 1, &format!("throw {k};"));
                self.line(depth, "}");
                budget -= 1;
            } else if r < self.w.throws + self.w.loops && nest < MAX_DEPTH {
                self.push_scope();
                let i = self.fresh_named('i', Type::Int);
                let bound = self.int_atom();
                let cap = self.rng.random_range(3..=12);
                self.line(depth, &format!("int {i} = 0;"));
                self.line(depth, &format!("while ({i} < {bound} && {i} < {cap}) {{"));
                budget -= 1;
                let inner = if budget > 0 && self.chance(0.5) { 1 } else { 0 };
                self.push_scope();
                self.stmts(depth + 1, inner);
                budget -= inner;
                self.simple(depth + 1);
                self.line(depth + 1, &format!("{i} = {i} + 1;"));
                self.pop_scope();
                self.line(depth, "}");
                self.pop_scope();
            } else {
                let c = self.condition();
                self.line(depth, &format!("if ({c}) {{"));
                budget -= 1;
                let max_inner = if nest < MAX_DEPTH { budget.min(3) } else { 0 };
                let inner = self.rng.random_range(0..=max_inner);
                budget -= inner;
                self.push_scope();
                let n = self.rng.random_range(1..=3);
                self.straight(depth + 1, n);
                self.stmts(depth + 1, inner);
                if self.chance(0.15) {
                    self.ret_stmt(depth + 1);
                }
                self.pop_scope();
                if self.chance(0.4) {
                    let max_else = if nest < MAX_DEPTH { budget.min(2) } else { 0 };
                    let inner = self.rng.random_range(0..=max_else);
                    budget -= inner;
                    self.line(depth, "} else {");
                    self.push_scope();
                    let n = self.rng.random_range(1..=2);
                    self.straight(depth + 1, n);
                    self.stmts(depth + 1, inner);
                    self.pop_scope();
                }
                self.line(depth, "}");
            }
        }
    }

    fn param_types(&mut self, n: usize) -> Vec<Type> {
        let mut ts = vec![Type::Int];
        for _ in 1..n {
            let r: f64 = self.rng.random();
            ts.push(if r < 0.55 {
                Type::Int
            } else if r < 0.7 {
                Type::Bool
            } else if r < 0.85 {
                Type::Str
            } else {
                Type::Float
            });
        }
        ts
    }

    fn ret_type(&mut self) -> Option<Type> {
        if self.chance(self.w.void_methods) {
            return None;
        }
        let r: f64 = self.rng.random();
        Some(if r < 0.5 {
            Type::Int
        } else if r < 0.75 {
            Type::Bool
        } else if r < 0.88 {
            Type::Float
        } else {
            Type::Str
        })
    }

    fn method(&mut self, public: bool, m: &Method, budget: usize) {
        let params: Vec<String> = m.params.iter().map(|(n, t)| format!("{} {n}", t.keyword())).collect();
        let vis = if public { "public" } else { "private" };
        self.line(1, &format!("{vis} {} {}({}) {{", type_kw(m.ret), m.name, params.join(", ")));
        self.scopes = vec![vec![("f0".into(), Type::Int), ("f1".into(), Type::Int)], m.params.clone(), Vec::new()];
        self.inputs = self.scopes[0].iter().chain(&m.params).cloned().collect();
        self.next_var = 0;
        self.ret = m.ret;
        self.stmts(2, budget);
        let n = self.rng.random_range(0..=2);
        self.straight(2, n);
        if m.ret.is_some() {
            self.ret_stmt(2);
        }
        self.line(1, "}");
    }

    fn split(&mut self, total: usize, parts: usize) -> Vec<usize> {
        let mut v = vec![1; parts];
        for _ in parts..total {
            let i = self.rng.random_range(0..parts);
            v[i] += 1;
        }
        v
    }

    fn class(mut self, name: &str, preds: usize) -> String {
        let publics = (preds / 7).clamp(2, 20);
        let privates = (preds / 25).clamp(1, 5);
        let helper_preds = privates.min(preds.saturating_sub(publics));
        let mut helpers = Vec::new();
        for i in 0..privates {
            let n = self.rng.random_range(1..=2);
            let ts = self.param_types(n);
            let params = ts.into_iter().enumerate().map(|(j, t)| (format!("h{j}"), t)).collect();
            let ret = if self.chance(0.8) { Some(Type::Int) } else { None };
            helpers.push(Method { name: format!("help{i}"), params, ret });
        }
        let mut methods = Vec::new();
        for i in 0..publics {
            let n = self.rng.random_range(1..=3);
            let ts = self.param_types(n);
            let params = ts.into_iter().enumerate().map(|(j, t)| (format!("p{j}"), t)).collect();
            let ret = if i == 0 { Some(Type::Int) } else { self.ret_type() };
            methods.push(Method { name: format!("m{i}"), params, ret });
        }
        let pub_budget = self.split(preds - helper_preds, publics);
        let helper_budget: Vec<usize> = (0..privates).map(|i| usize::from(i < helper_preds)).collect();

        let _ = writeln!(self.out, "class {name} {{");
        self.line(1, "int f0;");
        self.line(1, "int f1;");
        self.line(1, &format!("{name}(int a, int b) {{"));
        self.line(2, "f0 = a;");
        self.line(2, "f1 = b;");
        self.line(1, "}");
        // helpers never call each other, so they are emitted without call sites
        for (m, b) in helpers.iter().zip(helper_budget) {
            self.method(false, m, b);
        }
        self.helpers = helpers;
        for (m, b) in methods.iter().zip(pub_budget) {
            self.method(true, m, b);
        }
        self.out.push_str("}\n");
        self.out
    }
}

mod common;

use covgen_core::harness::{generate_corpus, CorpusSpec};
use covgen_core::lang::{parse, SourceUnit};
use covgen_core::mutation::{all_operators, generate_mutants, MutantSchema};
use covgen_core::runtime::{execute, ExecutionTrace, TestCase, DEFAULT_STEP_BUDGET};
use covgen_core::search::{random_test, ValuePool};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn units() -> Vec<SourceUnit> {
    let spec = CorpusSpec { small_classes: 3, big_classes: 0, ..CorpusSpec::default() };
    let mut out: Vec<SourceUnit> = common::FIXTURES.iter().map(|(_, s)| parse(s).unwrap()).collect();
    out.extend(generate_corpus(&spec, 5).unwrap().iter().map(|c| parse(&c.source).unwrap()));
    out
}

fn random_tests(unit: &SourceUnit, seed: u64, n: usize) -> Vec<TestCase> {
    let pool = ValuePool::from_unit(unit);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_test(unit, &pool, &mut rng)).collect()
}

fn same_behaviour(a: &ExecutionTrace, b: &ExecutionTrace) -> bool {
    a.covered_lines == b.covered_lines
        && a.preds == b.preds
        && a.entered == b.entered
        && a.direct_calls == b.direct_calls
        && a.direct_ok == b.direct_ok
        && a.exceptions == b.exceptions
        && a.returns == b.returns
        && a.timed_out == b.timed_out
        && a.completed_statements == b.completed_statements
}

#[test]
fn execution_is_deterministic() {
    for u in units() {
        let schema = MutantSchema::new(&generate_mutants(&u, &all_operators()));
        for t in random_tests(&u, 1, 30) {
            let a = execute(&t, &u, Some(&schema), DEFAULT_STEP_BUDGET).unwrap();
            let b = execute(&t, &u, Some(&schema), DEFAULT_STEP_BUDGET).unwrap();
            assert_eq!(a, b, "{}", u.name);
        }
    }
}

#[test]
fn mutant_schema_does_not_change_behaviour() {
    for u in units() {
        let schema = MutantSchema::new(&generate_mutants(&u, &all_operators()));
        for t in random_tests(&u, 2, 30) {
            let plain = execute(&t, &u, None, DEFAULT_STEP_BUDGET).unwrap();
            let instrumented = execute(&t, &u, Some(&schema), DEFAULT_STEP_BUDGET).unwrap();
            assert!(same_behaviour(&plain, &instrumented), "{}: {}", u.name, t.render(&u));
            assert_eq!(instrumented.infections.len(), schema.len());
        }
    }
}

#[test]
fn predicates_run_once_or_more_have_one_zero_side() {
    for u in units() {
        for t in random_tests(&u, 3, 30) {
            let tr = execute(&t, &u, None, DEFAULT_STEP_BUDGET).unwrap();
            for p in &tr.preds {
                if p.count == 0 {
                    assert!(p.min_true.is_infinite() && p.min_false.is_infinite());
                } else {
                    assert!(p.min_true >= 0.0 && p.min_false >= 0.0);
                    assert!(p.min_true == 0.0 || p.min_false == 0.0, "{}: {p:?}", u.name);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Running more statements never loses coverage or raises a minimum.
    #[test]
    fn traces_grow_monotonically(which in 0usize..23, seed in any::<u64>()) {
        let units = units();
        let u = &units[which % units.len()];
        let schema = MutantSchema::new(&generate_mutants(u, &all_operators()));
        let t = random_tests(u, seed, 1).remove(0);
        let full = execute(&t, u, Some(&schema), DEFAULT_STEP_BUDGET).unwrap();
        for k in 1..t.len() {
            let prefix = TestCase::new(t.statements[..k].to_vec());
            let Ok(short) = execute(&prefix, u, Some(&schema), DEFAULT_STEP_BUDGET) else { continue };
            for (a, b) in short.covered_lines.iter().zip(&full.covered_lines) {
                prop_assert!(!a || *b);
            }
            for (a, b) in short.direct_calls.iter().zip(&full.direct_calls) {
                prop_assert!(!a || *b);
            }
            for (p, q) in short.preds.iter().zip(&full.preds) {
                prop_assert!(q.count >= p.count);
                prop_assert!(q.min_true <= p.min_true && q.min_false <= p.min_false);
            }
            for (a, b) in short.infections.iter().zip(&full.infections) {
                prop_assert!(b <= a);
            }
            prop_assert!(short.exceptions.iter().all(|e| full.exceptions.contains(e)));
        }
    }
}

#[test]
fn nonterminating_loop_times_out() {
    let u = parse("class W { public int spin(int x) { while (true) { x = x + 0; } return x; } }").unwrap();
    let t = random_tests(&u, 0, 1).remove(0);
    let tr = execute(&t, &u, None, 10_000).unwrap();
    assert!(tr.timed_out);
    assert!(tr.covered_lines[1]);
}

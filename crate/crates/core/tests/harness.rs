use std::fs;
use std::path::Path;

use covgen_core::goals::Criterion;
use covgen_core::harness::{
    gen_corpus, generate_corpus, read_runs, run_experiment, write_report, CellKey, CorpusSpec, ExperimentPlan,
    FAILURES_FILE, RUNS_FILE,
};
use covgen_core::lang::{parse, ExceptionKind};
use covgen_core::runtime::execute;
use covgen_core::search::{random_test, ValuePool};
use covgen_core::selection::{original_goal_set, Mode, SelectionConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const A: &str = "class A { public int f(int x) { if (x > 3) { return 1; } return 0; } }";
const B: &str = "class B { public bool g(int x, int y) { if (x == y) { return true; } return false; } }";

fn corpus(dir: &Path) {
    fs::create_dir_all(dir.join("corpus")).unwrap();
    fs::write(dir.join("corpus/A.mini"), A).unwrap();
    fs::write(dir.join("corpus/B.mini"), B).unwrap();
}

fn plan(dir: &Path, out: &str) -> ExperimentPlan {
    ExperimentPlan {
        corpus: vec![dir.join("corpus")],
        modes: vec![Mode::Smart, Mode::Original],
        rounds: 3,
        budget: 400,
        base_seed: 5,
        out_dir: dir.join(out),
        ..ExperimentPlan::default()
    }
}

#[test]
fn matrix_has_one_row_per_cell_and_resumes() {
    let d = tempfile::tempdir().unwrap();
    corpus(d.path());
    let p = plan(d.path(), "res");
    let s = run_experiment(&p).unwrap();
    assert_eq!((s.planned, s.completed, s.skipped), (12, 12, 0));
    let runs = p.out_dir.join(RUNS_FILE);
    let first = read_runs(&runs).unwrap();
    assert_eq!(first.len(), 12);

    // drop the last row; only that cell reruns and reproduces it
    let text = fs::read_to_string(&runs).unwrap();
    let kept: Vec<&str> = text.lines().collect();
    fs::write(&runs, kept[..kept.len() - 1].join("\n") + "\n").unwrap();
    let s = run_experiment(&p).unwrap();
    assert_eq!((s.completed, s.skipped), (1, 11));
    let mut again = read_runs(&runs).unwrap();
    let mut first = first;
    let key = |r: &covgen_core::harness::RunRow| (r.class.clone(), r.mode.clone(), r.round);
    first.sort_by_key(key);
    again.sort_by_key(key);
    assert_eq!(first, again);

    let (rep, files) = write_report(&runs, &p.out_dir).unwrap();
    assert_eq!(rep.runs, 12);
    assert!(files.iter().all(|f| f.exists()));
}

#[test]
fn full_matrix_is_deterministic() {
    let d = tempfile::tempdir().unwrap();
    corpus(d.path());
    run_experiment(&plan(d.path(), "one")).unwrap();
    run_experiment(&plan(d.path(), "two")).unwrap();
    let read = |o: &str| fs::read(d.path().join(o).join(RUNS_FILE)).unwrap();
    assert_eq!(read("one"), read("two"));
    let events = |o: &str| {
        let mut v: Vec<_> = fs::read_dir(d.path().join(o).join("events"))
            .unwrap()
            .map(|e| fs::read(e.unwrap().path()).unwrap())
            .collect();
        v.sort();
        v
    };
    assert_eq!(events("one"), events("two"));
}

#[test]
fn a_different_plan_is_refused() {
    let d = tempfile::tempdir().unwrap();
    corpus(d.path());
    run_experiment(&plan(d.path(), "res")).unwrap();
    let mut p = plan(d.path(), "res");
    p.budget = 401;
    let e = run_experiment(&p).unwrap_err();
    assert!(e.is_plan_error(), "{e}");
}

#[test]
fn injected_panic_is_isolated() {
    let d = tempfile::tempdir().unwrap();
    corpus(d.path());
    let mut p = plan(d.path(), "res");
    p.inject_panic = Some(CellKey::new("B", Mode::Original, 1));
    let s = run_experiment(&p).unwrap();
    assert_eq!(s.completed, 11);
    assert_eq!(s.failed.len(), 1);
    assert!(p.out_dir.join(FAILURES_FILE).exists());
    assert_eq!(read_runs(&p.out_dir.join(RUNS_FILE)).unwrap().len(), 11);
}

#[test]
fn corpus_is_byte_identical_per_seed() {
    let d = tempfile::tempdir().unwrap();
    let spec = CorpusSpec { small_classes: 3, big_classes: 1, ..CorpusSpec::default() };
    let a = gen_corpus(&spec, 42, &d.path().join("a")).unwrap();
    let b = gen_corpus(&spec, 42, &d.path().join("b")).unwrap();
    assert_eq!(a.len(), 4);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
    let other = generate_corpus(&spec, 43).unwrap();
    assert_ne!(fs::read_to_string(&a[0]).unwrap(), other[0].source);
}

#[test]
fn generated_classes_hit_their_branch_targets() {
    let spec = CorpusSpec { small_classes: 4, big_classes: 1, ..CorpusSpec::default() };
    for c in generate_corpus(&spec, 3).unwrap() {
        let u = parse(&c.source).unwrap();
        assert_eq!(u.count_branches(), 2 * c.predicates, "{}", c.name);
    }
}

#[test]
fn zero_throw_weight_leaves_only_arithmetic_exceptions() {
    let mut spec = CorpusSpec { small_classes: 5, big_classes: 0, ..CorpusSpec::default() };
    spec.weights.throws = 0.0;
    spec.weights.arithmetic = 1.0;
    let mut seen_arith = false;
    for c in generate_corpus(&spec, 9).unwrap() {
        assert!(!c.source.contains("throw"), "{}", c.name);
        let u = parse(&c.source).unwrap();
        let pool = ValuePool::from_unit(&u);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let t = random_test(&u, &pool, &mut rng);
            let tr = execute(&t, &u, None, 100_000).unwrap();
            for e in &tr.exceptions {
                assert_eq!(e.kind, ExceptionKind::Arithmetic, "{}", c.name);
                seen_arith = true;
            }
        }
    }
    assert!(seen_arith, "arithmetic weight 1 should raise something");
}

#[test]
fn every_criterion_has_goals_in_most_classes() {
    let classes = generate_corpus(&CorpusSpec::default(), 0).unwrap();
    let cfg = SelectionConfig::default();
    let units: Vec<_> = classes.iter().map(|c| parse(&c.source).unwrap()).collect();
    for c in Criterion::ALL {
        let with = units.iter().filter(|u| original_goal_set(u, &cfg).count(c) > 0).count();
        assert!(with * 10 >= units.len() * 9, "{}: {with}/{}", c.name(), units.len());
    }
}

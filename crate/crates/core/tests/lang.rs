mod common;

use covgen_core::harness::{generate_corpus, CorpusSpec};
use covgen_core::lang::{parse, pretty_print, SourceUnit};
use covgen_core::runtime::execute;
use proptest::prelude::*;

fn small_class(seed: u64) -> String {
    let spec = CorpusSpec { small_classes: 1, big_classes: 0, ..CorpusSpec::default() };
    generate_corpus(&spec, seed).unwrap().remove(0).source
}

fn check_lines(unit: &SourceUnit) {
    assert_eq!(unit.line_count(), unit.stmts.len());
    for (i, s) in unit.stmts.iter().enumerate() {
        assert_eq!(s.line as usize, i + 1);
        assert!(unit.line_info(s.line).is_some());
    }
    let table = unit.line_table();
    assert_eq!(table.len(), unit.line_count());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pretty_print_round_trips(seed in any::<u64>()) {
        let src = small_class(seed);
        let a = parse(&src).unwrap();
        let printed = pretty_print(&a.class);
        let b = parse(&printed).unwrap();
        prop_assert_eq!(pretty_print(&b.class), printed);
        prop_assert_eq!(a.line_count(), b.line_count());
        prop_assert_eq!(a.count_branches(), b.count_branches());
        prop_assert_eq!(&a.stmts, &b.stmts);
    }

    #[test]
    fn lines_are_statement_ordinals(seed in any::<u64>()) {
        check_lines(&parse(&small_class(seed)).unwrap());
    }
}

#[test]
fn fixture_lines_are_conserved() {
    for (name, src) in common::FIXTURES {
        let u = parse(src).unwrap_or_else(|e| panic!("{name}: {e}"));
        check_lines(&u);
        let again = parse(&pretty_print(&u.class)).unwrap();
        assert_eq!(u.stmts, again.stmts, "{name}");
    }
}

/// A line that ran and is not run on every method entry must have seen one
/// of its controlling branch sides taken in the same test.
#[test]
fn control_dependencies_hold_on_every_exhaustive_input() {
    for (name, src) in common::FIXTURES {
        let u = parse(src).unwrap();
        for t in common::exhaustive_tests(&u) {
            let tr = execute(&t, &u, None, 1_000_000).unwrap();
            for line in u.lines() {
                if !tr.covered_lines[line as usize - 1] {
                    continue;
                }
                let deps = u.line_deps(line);
                if deps.is_empty() || u.line_on_entry(line) {
                    continue;
                }
                let taken = deps.iter().any(|d| {
                    let p = &tr.preds[d.pred as usize];
                    p.count > 0 && if d.side { p.min_true == 0.0 } else { p.min_false == 0.0 }
                });
                assert!(taken, "{name}: line {line} ran without any of {deps:?}");
            }
        }
    }
}

/// On normal exits the converse also holds: an entered method runs every
/// line with no dependencies and every line one of whose sides was taken.
#[test]
fn taken_sides_reach_their_dependents() {
    for (name, src) in common::normal_exit_fixtures() {
        let u = parse(src).unwrap();
        for t in common::exhaustive_tests(&u) {
            let tr = execute(&t, &u, None, 1_000_000).unwrap();
            if tr.timed_out || !tr.exceptions.is_empty() {
                continue;
            }
            for line in u.lines() {
                let m = u.line_info(line).unwrap().method;
                if !tr.entered[m as usize] {
                    continue;
                }
                let deps = u.line_deps(line);
                let reached = deps.is_empty()
                    || u.line_on_entry(line)
                    || deps.iter().any(|d| {
                        let p = &tr.preds[d.pred as usize];
                        p.count > 0 && if d.side { p.min_true == 0.0 } else { p.min_false == 0.0 }
                    });
                if reached {
                    assert!(tr.covered_lines[line as usize - 1], "{name}: line {line} not run");
                }
            }
        }
    }
}

#[test]
fn syntax_errors_carry_positions() {
    let e = parse("class X {\n  public int f( {\n}").unwrap_err();
    assert!(e.to_string().contains("2:"), "{e}");
}

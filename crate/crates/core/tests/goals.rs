mod common;

use std::sync::Arc;

use covgen_core::goals::{Criterion, CoverageGoal, GoalEvaluator};
use covgen_core::harness::{generate_corpus, CorpusSpec};
use covgen_core::lang::parse;
use covgen_core::search::{random_test, ValuePool};
use covgen_core::selection::{original_goal_set, SelectionConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn evaluators() -> Vec<GoalEvaluator> {
    let spec = CorpusSpec { small_classes: 3, big_classes: 0, ..CorpusSpec::default() };
    let mut srcs: Vec<String> = common::FIXTURES.iter().map(|(_, s)| s.to_string()).collect();
    srcs.extend(generate_corpus(&spec, 11).unwrap().into_iter().map(|c| c.source));
    srcs.iter()
        .map(|s| {
            let u = Arc::new(parse(s).unwrap());
            let sel = original_goal_set(&u, &SelectionConfig::default());
            GoalEvaluator::new(u, sel.goals, &sel.mutants).unwrap()
        })
        .collect()
}

fn partner(ev: &GoalEvaluator, g: &CoverageGoal, c: Criterion) -> usize {
    ev.index_of(&CoverageGoal::new(c, g.target)).expect("partner goal present")
}

#[test]
fn stronger_goals_imply_weaker_ones() {
    for ev in evaluators() {
        let u = ev.unit().clone();
        let pool = ValuePool::from_unit(&u);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let traces: Vec<_> = (0..60).map(|_| ev.run_valid(&random_test(&u, &pool, &mut rng))).collect();
        for tr in &traces {
            let f = ev.fitness_vector(tr);
            assert!(f.iter().all(|x| (0.0..=2.0).contains(x)), "{}", u.name);
            for (i, g) in ev.goals().iter().enumerate() {
                let weaker = match g.criterion {
                    Criterion::Dbc => Criterion::Bc,
                    Criterion::Ntmc => Criterion::Tmc,
                    _ => continue,
                };
                if f[i] == 0.0 {
                    assert_eq!(f[partner(&ev, g, weaker)], 0.0, "{}: {}", u.name, g.label(&u));
                }
            }
        }
        // the same holds for the suite
        let covered = ev.covered(&traces);
        for (i, g) in ev.goals().iter().enumerate() {
            match g.criterion {
                Criterion::Dbc if covered[i] => assert!(covered[partner(&ev, g, Criterion::Bc)]),
                Criterion::Ntmc if covered[i] => assert!(covered[partner(&ev, g, Criterion::Tmc)]),
                _ => {}
            }
        }
        let rep = ev.report(&traces);
        assert!(rep.ratio(Criterion::Dbc) <= rep.ratio(Criterion::Bc) + 1e-12);
        assert!(rep.ratio(Criterion::Ntmc) <= rep.ratio(Criterion::Tmc) + 1e-12);
    }
}

#[test]
fn fitness_zero_iff_covered() {
    for ev in evaluators() {
        let u = ev.unit().clone();
        let pool = ValuePool::from_unit(&u);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..40 {
            let tr = ev.run_valid(&random_test(&u, &pool, &mut rng));
            let f = ev.fitness_vector(&tr);
            let cov = ev.covered(std::slice::from_ref(&tr));
            for i in 0..f.len() {
                assert_eq!(f[i] == 0.0, cov[i], "{}: {}", u.name, ev.goals()[i].label(&u));
            }
        }
    }
}

//! Whole-suite search: a GA over test suites minimizing the summed goal fitness.

use std::cmp::Ordering;

use rand::Rng;

use super::{report_from_fitness, Engine, SearchEvent, SearchResult, TestInd};
use crate::goals::TestFitness;
use crate::runtime::TestSuite;

const RANK_BIAS: f64 = 1.7;
const INIT_MAX_TESTS: usize = 10;
const INSERT_PROB: f64 = 1.0 / 3.0;

#[derive(Debug, Clone)]
struct Suite {
    tests: Vec<TestInd>,
    fitness: f64,
    covered: usize,
    length: usize,
}

impl Suite {
    fn new(tests: Vec<TestInd>, e: &Engine) -> Suite {
        let fits: Vec<&TestFitness> = tests.iter().map(|t| &*t.fit).collect();
        let (fitness, covered) = e.ev.suite_score(&fits);
        let length = tests.iter().map(|t| t.test.len()).sum();
        Suite { tests, fitness, covered, length }
    }

    /// GA ordering: fitness, then total length.
    fn cmp_ga(&self, other: &Suite) -> Ordering {
        self.fitness.total_cmp(&other.fitness).then(self.length.cmp(&other.length))
    }

    /// Ordering for the reported best: more covered goals first.
    fn cmp_best(&self, other: &Suite) -> Ordering {
        other.covered.cmp(&self.covered).then(self.cmp_ga(other))
    }
}

fn rank_select<R: Rng>(n: usize, rng: &mut R) -> usize {
    let r: f64 = rng.random();
    let b = RANK_BIAS;
    let idx = n as f64 * (b - (b * b - 4.0 * (b - 1.0) * r).sqrt()) / (2.0 * (b - 1.0));
    (idx as usize).min(n - 1)
}

/// Mutates a suite in place. Returns false when the budget ran out.
fn mutate_suite(e: &mut Engine, tests: &mut Vec<TestInd>) -> bool {
    let n = tests.len().max(1) as f64;
    for t in tests.iter_mut() {
        if e.rng.random_bool(1.0 / n) {
            let m = e.mutate(&t.test);
            match e.evaluate(m) {
                Some(ind) => *t = ind,
                None => return false,
            }
        }
    }
    let mut p = INSERT_PROB;
    while tests.len() < e.cfg.max_suite_size && e.rng.random_bool(p) {
        let t = e.random_test();
        match e.evaluate(t) {
            Some(ind) => tests.push(ind),
            None => return false,
        }
        p *= INSERT_PROB;
    }
    if tests.is_empty() {
        let t = e.random_test();
        match e.evaluate(t) {
            Some(ind) => tests.push(ind),
            None => return false,
        }
    }
    true
}

fn crossover(e: &mut Engine, a: &Suite, b: &Suite) -> (Vec<TestInd>, Vec<TestInd>) {
    let alpha: f64 = e.rng.random();
    let ca = (alpha * a.tests.len() as f64).round() as usize;
    let cb = (alpha * b.tests.len() as f64).round() as usize;
    let mut c1: Vec<TestInd> = a.tests[..ca].to_vec();
    c1.extend_from_slice(&b.tests[cb..]);
    let mut c2: Vec<TestInd> = b.tests[..cb].to_vec();
    c2.extend_from_slice(&a.tests[ca..]);
    let cap = e.cfg.max_suite_size;
    c1.truncate(cap);
    c2.truncate(cap);
    (c1, c2)
}

pub(super) fn run(mut e: Engine) -> SearchResult {
    let n = e.cfg.population_size;
    e.events.push(SearchEvent::Start { algorithm: e.cfg.algorithm, goals: e.ev.len(), active: e.ev.len() });

    let mut pop: Vec<Suite> = Vec::with_capacity(n);
    'init: for _ in 0..n {
        let k = e.rng.random_range(1..=INIT_MAX_TESTS.min(e.cfg.max_suite_size));
        let mut tests = Vec::with_capacity(k);
        for _ in 0..k {
            let t = e.random_test();
            match e.evaluate(t) {
                Some(ind) => tests.push(ind),
                None => {
                    if !tests.is_empty() {
                        pop.push(Suite::new(tests, &e));
                    }
                    break 'init;
                }
            }
        }
        pop.push(Suite::new(tests, &e));
    }
    e.end_init();
    pop.sort_by(Suite::cmp_ga);
    let mut best = pop.iter().min_by(|a, b| a.cmp_best(b)).cloned();
    let mut generation = 0u32;

    'search: while !pop.is_empty() && !e.exhausted() && pop[0].fitness > 0.0 {
        generation += 1;
        let mut next: Vec<Suite> = pop.iter().take(e.cfg.elitism).cloned().collect();
        while next.len() < n {
            let p1 = &pop[rank_select(pop.len(), &mut e.rng)];
            let p2 = &pop[rank_select(pop.len(), &mut e.rng)];
            let (mut c1, mut c2) = if e.rng.random_bool(e.cfg.crossover_rate) {
                crossover(&mut e, p1, p2)
            } else {
                (p1.tests.clone(), p2.tests.clone())
            };
            if !mutate_suite(&mut e, &mut c1) || !mutate_suite(&mut e, &mut c2) {
                break 'search;
            }
            let (o1, o2) = (Suite::new(c1, &e), Suite::new(c2, &e));
            // Offspring replace their parents only when at least as good.
            let best_parent = if p1.cmp_ga(p2).is_le() { p1 } else { p2 };
            let best_child = if o1.cmp_ga(&o2).is_le() { &o1 } else { &o2 };
            if best_child.cmp_ga(best_parent).is_le() {
                next.push(o1);
                next.push(o2);
            } else {
                next.push(p1.clone());
                next.push(p2.clone());
            }
        }
        next.truncate(n);
        pop = next;
        pop.sort_by(Suite::cmp_ga);
        if let Some(cand) = pop.iter().min_by(|a, b| a.cmp_best(b)) {
            if best.as_ref().is_none_or(|b| cand.cmp_best(b).is_lt()) {
                best = Some(cand.clone());
            }
        }
        let b = best.as_ref().expect("population is nonempty");
        e.events.push(SearchEvent::Generation {
            generation,
            evaluations: e.used,
            best_fitness: b.fitness,
            covered: b.covered,
            active: e.ev.len(),
        });
    }

    let best_tests = best.map(|b| b.tests).unwrap_or_default();
    let fits: Vec<&TestFitness> = best_tests.iter().map(|t| &*t.fit).collect();
    let (covered, report) = report_from_fitness(e.ev, &fits);
    e.events.push(SearchEvent::Finish { generations: generation, evaluations: e.used, covered: covered.len() });
    SearchResult {
        algorithm: e.cfg.algorithm,
        seed: e.cfg.seed,
        suite: TestSuite::new(best_tests.into_iter().map(|t| t.test).collect()),
        covered,
        report,
        evaluations: e.used,
        generations: generation,
        events: e.events,
        elapsed: Default::default(),
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::rank_select;

    #[test]
    fn rank_selection_prefers_the_front() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut hits = [0usize; 10];
        for _ in 0..10_000 {
            hits[rank_select(10, &mut rng)] += 1;
        }
        assert!(hits[0] > hits[9] * 2);
        assert!(hits.iter().all(|&h| h > 0));
    }
}

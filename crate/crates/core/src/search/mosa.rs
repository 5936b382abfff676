//! Many-objective search over single tests (MOSA), optionally with the
//! dynamic goal activation of DynaMOSA.

use std::cmp::Ordering;

use rand::Rng;

use super::{report_from_fitness, Engine, SearchEvent, SearchResult, TestInd};
use crate::goals::TestFitness;
use crate::runtime::TestSuite;

/// Pareto dominance restricted to `targets`.
pub fn dominates(a: &[f64], b: &[f64], targets: &[usize]) -> bool {
    let mut better = false;
    for &t in targets {
        match a[t].total_cmp(&b[t]) {
            Ordering::Greater => return false,
            Ordering::Less => better = true,
            Ordering::Equal => {}
        }
    }
    better
}

/// Crowding distance of every member of a front over the target objectives.
/// Objectives constant across the front are skipped.
pub fn crowding_distance(front: &[&[f64]], targets: &[usize]) -> Vec<f64> {
    let n = front.len();
    let mut d = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let mut idx: Vec<usize> = (0..n).collect();
    for &t in targets {
        idx.sort_by(|&a, &b| front[a][t].total_cmp(&front[b][t]));
        let lo = front[idx[0]][t];
        let hi = front[idx[n - 1]][t];
        if hi <= lo {
            continue;
        }
        d[idx[0]] = f64::INFINITY;
        d[idx[n - 1]] = f64::INFINITY;
        for k in 1..n - 1 {
            d[idx[k]] += (front[idx[k + 1]][t] - front[idx[k - 1]][t]) / (hi - lo);
        }
    }
    d
}

/// Preference sorting. Front 0 holds the best individual for each target
/// (shorter wins ties); the rest are split into non-dominated fronts until at
/// least `n` individuals are ranked. Individuals left over are not returned.
pub fn preference_sort(objs: &[&[f64]], lens: &[usize], targets: &[usize], n: usize) -> Vec<Vec<usize>> {
    let m = objs.len();
    let mut ranked = vec![false; m];
    let mut f0 = Vec::new();
    for &t in targets {
        let best = (0..m).min_by(|&a, &b| objs[a][t].total_cmp(&objs[b][t]).then(lens[a].cmp(&lens[b])));
        if let Some(b) = best {
            if !ranked[b] {
                ranked[b] = true;
                f0.push(b);
            }
        }
    }
    f0.sort_unstable();
    let mut fronts = Vec::new();
    let mut count = f0.len();
    if !f0.is_empty() {
        fronts.push(f0);
    }
    let mut rest: Vec<usize> = (0..m).filter(|&i| !ranked[i]).collect();
    while count < n && !rest.is_empty() {
        let front: Vec<usize> = rest
            .iter()
            .copied()
            .filter(|&i| !rest.iter().any(|&j| j != i && dominates(objs[j], objs[i], targets)))
            .collect();
        rest.retain(|i| !front.contains(i));
        count += front.len();
        fronts.push(front);
    }
    fronts
}

struct Ranked {
    ind: TestInd,
    rank: usize,
    crowd: f64,
}

fn targets(e: &Engine) -> Vec<usize> {
    let open: Vec<usize> = (0..e.ev.len()).filter(|&g| e.active[g] && !e.archive.is_covered(g)).collect();
    if open.is_empty() {
        // Uncovered goals may stay inactive when no goal guards their
        // controlling branches; search for them directly.
        (0..e.ev.len()).filter(|&g| !e.archive.is_covered(g)).collect()
    } else {
        open
    }
}

fn tournament<R: Rng>(pop: &[Ranked], rng: &mut R) -> usize {
    let a = rng.random_range(0..pop.len());
    let b = rng.random_range(0..pop.len());
    let (x, y) = (&pop[a], &pop[b]);
    match x.rank.cmp(&y.rank).then(y.crowd.total_cmp(&x.crowd)) {
        Ordering::Greater => b,
        _ => a,
    }
}

fn select(e: &Engine, inds: Vec<TestInd>, n: usize) -> Vec<Ranked> {
    let t = targets(e);
    let objs: Vec<&[f64]> = inds.iter().map(|i| i.fit.goals.as_slice()).collect();
    let lens: Vec<usize> = inds.iter().map(|i| i.test.len()).collect();
    let fronts = preference_sort(&objs, &lens, &t, n);
    let mut chosen: Vec<(usize, usize, f64)> = Vec::with_capacity(n);
    for (rank, front) in fronts.iter().enumerate() {
        if chosen.len() >= n {
            break;
        }
        let fo: Vec<&[f64]> = front.iter().map(|&i| objs[i]).collect();
        let cd = crowding_distance(&fo, &t);
        let mut order: Vec<usize> = (0..front.len()).collect();
        if chosen.len() + front.len() > n {
            order.sort_by(|&a, &b| cd[b].total_cmp(&cd[a]).then(a.cmp(&b)));
            order.truncate(n - chosen.len());
        }
        chosen.extend(order.into_iter().map(|k| (front[k], rank, cd[k])));
    }
    let mut slots: Vec<Option<TestInd>> = inds.into_iter().map(Some).collect();
    chosen
        .into_iter()
        .map(|(i, rank, crowd)| Ranked { ind: slots[i].take().expect("chosen once"), rank, crowd })
        .collect()
}

fn offspring(e: &mut Engine, pop: &[Ranked]) -> Option<Vec<TestInd>> {
    let n = e.cfg.population_size;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p1 = &pop[tournament(pop, &mut e.rng)].ind;
        let p2 = &pop[tournament(pop, &mut e.rng)].ind;
        let crossed = e.rng.random_bool(e.cfg.crossover_rate);
        let (mut c1, mut c2) = if crossed {
            (e.crossover(&p1.test, &p2.test), e.crossover(&p2.test, &p1.test))
        } else {
            (p1.test.clone(), p2.test.clone())
        };
        let m1 = e.rng.random_bool(e.cfg.test_mutation_rate);
        let m2 = e.rng.random_bool(e.cfg.test_mutation_rate);
        if m1 {
            c1 = e.mutate(&c1);
        }
        if m2 {
            c2 = e.mutate(&c2);
        }
        for (c, changed, parent) in [(c1, crossed || m1, p1), (c2, crossed || m2, p2)] {
            if out.len() >= n {
                break;
            }
            if changed {
                out.push(e.evaluate(c)?);
            } else {
                out.push(TestInd { test: c, fit: parent.fit.clone() });
            }
        }
    }
    Some(out)
}

fn summed_best(e: &Engine, pop: &[Ranked]) -> f64 {
    (0..e.ev.len())
        .map(|g| if e.archive.is_covered(g) { 0.0 } else { pop.iter().map(|r| r.ind.fit.goals[g]).fold(f64::INFINITY, f64::min) })
        .sum()
}

pub(super) fn run(mut e: Engine) -> SearchResult {
    let n = e.cfg.population_size;
    e.events.push(SearchEvent::Start { algorithm: e.cfg.algorithm, goals: e.ev.len(), active: e.active_count() });

    let mut init = Vec::with_capacity(n);
    for _ in 0..n {
        let t = e.random_test();
        match e.evaluate(t) {
            Some(ind) => init.push(ind),
            None => break,
        }
    }
    e.end_init();
    let mut pop = select(&e, init, n);
    let mut generation = 0u32;

    while !pop.is_empty() && !e.exhausted() && !e.archive.is_complete() {
        let Some(children) = offspring(&mut e, &pop) else { break };
        generation += 1;
        let mut all: Vec<TestInd> = pop.into_iter().map(|r| r.ind).collect();
        all.extend(children);
        pop = select(&e, all, n);
        e.events.push(SearchEvent::Generation {
            generation,
            evaluations: e.used,
            best_fitness: summed_best(&e, &pop),
            covered: e.archive.covered_count(),
            active: e.active_count(),
        });
    }

    let tests = e.archive.tests();
    let fits: Vec<TestFitness> = tests.iter().map(|t| e.ev.evaluate(&e.ev.run_valid(t))).collect();
    let refs: Vec<&TestFitness> = fits.iter().collect();
    let (covered, report) = report_from_fitness(e.ev, &refs);
    debug_assert_eq!(covered, e.archive.covered());
    e.events.push(SearchEvent::Finish { generations: generation, evaluations: e.used, covered: covered.len() });
    SearchResult {
        algorithm: e.cfg.algorithm,
        seed: e.cfg.seed,
        suite: TestSuite::new(tests),
        covered,
        report,
        evaluations: e.used,
        generations: generation,
        events: e.events,
        elapsed: Default::default(),
    }
}

//! Stage-1 warm start: an NSGA-II search over the surrogate means, then a
//! greedy hypervolume-improvement batch from the resulting front.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::archive::EvaluationArchive;
use crate::error::{Error, Result};
use crate::gp::{GpConfig, KernelParams, SurrogateSet};
use crate::moo::{dominates_unchecked, greedy_batch_select, non_dominated_filter};
use crate::problems::ProblemSpec;
use crate::psm::dedup_designs;
use crate::sampling::{derive_seed, rng_from, Rng as SeededRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Nsga2Config {
    pub population: usize,
    /// Generations including the initial population.
    pub generations: usize,
    pub crossover_prob: f64,
    pub crossover_eta: f64,
    pub mutation_eta: f64,
    /// Seed the initial population with the archive's non-dominated designs.
    pub seed_with_archive: bool,
}

impl Default for Nsga2Config {
    fn default() -> Self {
        Self {
            population: 100,
            generations: 50,
            crossover_prob: 0.9,
            crossover_eta: 15.0,
            mutation_eta: 20.0,
            seed_with_archive: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePool {
    /// Final non-dominated designs.
    pub designs: Vec<Vec<f64>>,
    pub surrogate_objectives: Vec<Vec<f64>>,
    /// Dominated remainder of the final population, best rank first.
    pub remainder: Vec<(Vec<f64>, Vec<f64>)>,
    pub generation: usize,
    /// Every returned design was identical.
    pub degenerate: bool,
}

/// Ranks by fast non-dominated sorting; returns the fronts as index lists.
pub fn non_dominated_sort(objectives: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = objectives.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates_unchecked(&objectives[i], &objectives[j]) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates_unchecked(&objectives[j], &objectives[i]) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front` (same order).
pub fn crowding_distance(objectives: &[Vec<f64>], front: &[usize]) -> Vec<f64> {
    let k = front.len();
    let mut distance = vec![0.0; k];
    if k <= 2 {
        return vec![f64::INFINITY; k];
    }
    let m = objectives[front[0]].len();
    for obj in 0..m {
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            objectives[front[a]][obj]
                .total_cmp(&objectives[front[b]][obj])
                .then(a.cmp(&b))
        });
        let lo = objectives[front[order[0]]][obj];
        let hi = objectives[front[order[k - 1]]][obj];
        distance[order[0]] = f64::INFINITY;
        distance[order[k - 1]] = f64::INFINITY;
        if hi - lo <= 0.0 {
            continue;
        }
        for w in 1..k - 1 {
            let gap = objectives[front[order[w + 1]]][obj] - objectives[front[order[w - 1]]][obj];
            distance[order[w]] += gap / (hi - lo);
        }
    }
    distance
}

fn sbx_pair(a: &mut [f64], b: &mut [f64], lower: &[f64], upper: &[f64], eta: f64, rng: &mut SeededRng) {
    for i in 0..a.len() {
        if rng.random::<f64>() > 0.5 || (a[i] - b[i]).abs() < 1e-14 {
            continue;
        }
        let u: f64 = rng.random();
        let beta = if u <= 0.5 {
            (2.0 * u).powf(1.0 / (eta + 1.0))
        } else {
            (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (eta + 1.0))
        };
        let (x1, x2) = (a[i], b[i]);
        a[i] = (0.5 * ((1.0 + beta) * x1 + (1.0 - beta) * x2)).clamp(lower[i], upper[i]);
        b[i] = (0.5 * ((1.0 - beta) * x1 + (1.0 + beta) * x2)).clamp(lower[i], upper[i]);
    }
}

fn polynomial_mutation(x: &mut [f64], lower: &[f64], upper: &[f64], eta: f64, prob: f64, rng: &mut SeededRng) {
    for i in 0..x.len() {
        if rng.random::<f64>() >= prob {
            continue;
        }
        let span = upper[i] - lower[i];
        if span <= 0.0 {
            continue;
        }
        let d1 = (x[i] - lower[i]) / span;
        let d2 = (upper[i] - x[i]) / span;
        let u: f64 = rng.random();
        let power = 1.0 / (eta + 1.0);
        let dq = if u < 0.5 {
            let v = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(eta + 1.0);
            v.powf(power) - 1.0
        } else {
            let v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(eta + 1.0);
            1.0 - v.powf(power)
        };
        x[i] = (x[i] + dq * span).clamp(lower[i], upper[i]);
    }
}

/// Rank and crowding of every member, for tournament comparisons.
fn rank_and_crowding(objectives: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    let mut rank = vec![0; objectives.len()];
    let mut crowd = vec![0.0; objectives.len()];
    for (r, front) in non_dominated_sort(objectives).iter().enumerate() {
        for (&i, d) in front.iter().zip(crowding_distance(objectives, front)) {
            rank[i] = r;
            crowd[i] = d;
        }
    }
    (rank, crowd)
}

fn better(i: usize, j: usize, rank: &[usize], crowd: &[f64]) -> bool {
    match rank[i].cmp(&rank[j]) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => crowd[i] > crowd[j] || (crowd[i] == crowd[j] && i < j),
    }
}

/// Minimizes `objective` over the box with NSGA-II. Designs are passed
/// through `snap` before evaluation.
pub fn nsga2<F>(
    objective: F,
    problem: &ProblemSpec,
    config: &Nsga2Config,
    initial: &[Vec<f64>],
    seed: u64,
) -> Result<CandidatePool>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if config.population == 0 || config.generations == 0 {
        return Err(Error::InvalidArgument("population and generations must be positive".into()));
    }
    let (lower, upper) = problem.bounds();
    let n = lower.len();
    let mut rng = rng_from(derive_seed(seed, &[0x6e73_6761]));
    let mut pop: Vec<Vec<f64>> = initial.iter().take(config.population).map(|x| problem.snap(x)).collect();
    while pop.len() < config.population {
        let x: Vec<f64> = (0..n).map(|i| rng.random_range(lower[i]..=upper[i])).collect();
        pop.push(problem.snap(&x));
    }
    let mut objs = pop.iter().map(|x| objective(x)).collect::<Result<Vec<_>>>()?;
    let mutation_prob = 1.0 / n as f64;

    for _ in 1..config.generations {
        let (rank, crowd) = rank_and_crowding(&objs);
        let tournament = |rng: &mut SeededRng| {
            let a = rng.random_range(0..pop.len());
            let b = rng.random_range(0..pop.len());
            if better(a, b, &rank, &crowd) {
                a
            } else {
                b
            }
        };
        let mut children = Vec::with_capacity(config.population);
        while children.len() < config.population {
            let mut c1 = pop[tournament(&mut rng)].clone();
            let mut c2 = pop[tournament(&mut rng)].clone();
            if rng.random::<f64>() < config.crossover_prob {
                sbx_pair(&mut c1, &mut c2, lower, upper, config.crossover_eta, &mut rng);
            }
            polynomial_mutation(&mut c1, lower, upper, config.mutation_eta, mutation_prob, &mut rng);
            polynomial_mutation(&mut c2, lower, upper, config.mutation_eta, mutation_prob, &mut rng);
            children.push(problem.snap(&c1));
            if children.len() < config.population {
                children.push(problem.snap(&c2));
            }
        }
        let child_objs = children.iter().map(|x| objective(x)).collect::<Result<Vec<_>>>()?;
        pop.extend(children);
        objs.extend(child_objs);

        let mut survivors = Vec::with_capacity(config.population);
        for front in non_dominated_sort(&objs) {
            if survivors.len() + front.len() <= config.population {
                survivors.extend(front);
                continue;
            }
            let d = crowding_distance(&objs, &front);
            let mut order: Vec<usize> = (0..front.len()).collect();
            order.sort_by(|&a, &b| d[b].total_cmp(&d[a]).then(a.cmp(&b)));
            let room = config.population - survivors.len();
            survivors.extend(order.into_iter().take(room).map(|k| front[k]));
            break;
        }
        pop = survivors.iter().map(|&i| pop[i].clone()).collect();
        objs = survivors.iter().map(|&i| objs[i].clone()).collect();
    }

    let keep = non_dominated_filter(&objs);
    let mut in_front = vec![false; pop.len()];
    keep.iter().for_each(|&i| in_front[i] = true);
    let (rank, crowd) = rank_and_crowding(&objs);
    let mut rest: Vec<usize> = (0..pop.len()).filter(|&i| !in_front[i]).collect();
    rest.sort_by(|&a, &b| {
        if better(a, b, &rank, &crowd) {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    });
    let designs: Vec<Vec<f64>> = keep.iter().map(|&i| pop[i].clone()).collect();
    let degenerate = pop.iter().all(|d| d == &pop[0]);
    Ok(CandidatePool {
        surrogate_objectives: keep.iter().map(|&i| objs[i].clone()).collect(),
        designs,
        remainder: rest.into_iter().map(|i| (pop[i].clone(), objs[i].clone())).collect(),
        generation: config.generations,
        degenerate,
    })
}

/// NSGA-II over the surrogate posterior means.
pub fn approximate_surrogate_front(
    surrogates: &SurrogateSet,
    problem: &ProblemSpec,
    config: &Nsga2Config,
    initial: &[Vec<f64>],
    seed: u64,
) -> Result<CandidatePool> {
    nsga2(|x| surrogates.means(x), problem, config, initial, seed)
}

/// Dense approximation of a problem's true front: the union of several
/// NSGA-II runs on the true objectives, non-dominated filtered and kept
/// strictly inside the reference box.
pub fn dense_true_front(problem: &ProblemSpec, config: &Nsga2Config, runs: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut points = Vec::new();
    for run in 0..runs.max(1) {
        let pool = nsga2(|x| problem.evaluate(x), problem, config, &[], derive_seed(seed, &[run as u64]))?;
        points.extend(pool.surrogate_objectives);
    }
    points.retain(|y: &Vec<f64>| y.iter().zip(&problem.reference_point).all(|(v, r)| v < r));
    let keep = non_dominated_filter(&points);
    Ok(keep.into_iter().map(|i| points[i].clone()).collect())
}

#[derive(Debug, Clone)]
pub struct WarmstartOutcome {
    pub designs: Vec<Vec<f64>>,
    pub predicted: Vec<Vec<f64>>,
    pub surrogates: SurrogateSet,
    /// Fewer than b₁ front candidates survived deduplication.
    pub shortfall: bool,
    pub degenerate: bool,
}

/// Fits the surrogates, approximates their front and greedily picks `b1`
/// designs by hypervolume improvement over the archive front.
#[allow(clippy::too_many_arguments)]
pub fn warmstart_step(
    archive: &EvaluationArchive,
    problem: &ProblemSpec,
    b1: usize,
    config: &Nsga2Config,
    gp: &GpConfig,
    previous: Option<&[KernelParams]>,
    seed: u64,
) -> Result<WarmstartOutcome> {
    if archive.is_empty() {
        return Err(Error::InvalidArgument("warm start needs a non-empty archive".into()));
    }
    let x = archive.designs();
    let surrogates = SurrogateSet::fit(&x, &archive.objectives(), derive_seed(seed, &[0x6770]), gp, previous)?;
    let initial = if config.seed_with_archive {
        archive.non_dominated_designs()
    } else {
        Vec::new()
    };
    let pool = approximate_surrogate_front(&surrogates, problem, config, &initial, derive_seed(seed, &[0x6561]))?;
    let existing = archive.front(&problem.reference_point);

    let (designs, predicted) = unique_candidates(pool.designs.into_iter().zip(pool.surrogate_objectives).collect(), &x);
    let selection = greedy_batch_select(&predicted, &existing, b1)?;
    let mut chosen: Vec<Vec<f64>> = selection.indices.iter().map(|&i| designs[i].clone()).collect();
    let mut chosen_pred: Vec<Vec<f64>> = selection.indices.iter().map(|&i| predicted[i].clone()).collect();
    let mut shortfall = selection.shortfall;
    if shortfall {
        let mut known = x.clone();
        known.extend(chosen.iter().cloned());
        let (rest_designs, rest_pred) = unique_candidates(pool.remainder, &known);
        let mut front = existing.clone();
        front.points.extend(chosen_pred.iter().cloned());
        let fill = greedy_batch_select(&rest_pred, &front, b1 - chosen.len())?;
        chosen.extend(fill.indices.iter().map(|&i| rest_designs[i].clone()));
        chosen_pred.extend(fill.indices.iter().map(|&i| rest_pred[i].clone()));
        shortfall = true;
    }
    Ok(WarmstartOutcome {
        designs: chosen,
        predicted: chosen_pred,
        surrogates,
        shortfall,
        degenerate: pool.degenerate,
    })
}

fn unique_candidates(pairs: Vec<(Vec<f64>, Vec<f64>)>, known: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let designs: Vec<Vec<f64>> = pairs.iter().map(|(d, _)| d.clone()).collect();
    let kept = dedup_designs(designs, known);
    let mut out_d = Vec::with_capacity(kept.len());
    let mut out_y = Vec::with_capacity(kept.len());
    let mut cursor = 0;
    for (d, y) in pairs {
        if cursor < kept.len() && kept[cursor] == d {
            out_d.push(d);
            out_y.push(y);
            cursor += 1;
        }
    }
    (out_d, out_y)
}

//! Dominance, non-dominated filtering, exact hypervolume (two and three
//! objectives) and greedy hypervolume-improvement batch selection.
//!
//! All objectives are minimized.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `a` dominates `b`: no coordinate worse and the vectors differ.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(dominates_unchecked(a, b))
}

#[inline]
pub(crate) fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Indices of the points that no other point dominates, in input order.
/// Exact duplicates keep their first occurrence only.
pub fn non_dominated_filter(points: &[Vec<f64>]) -> Vec<usize> {
    let mut keep = Vec::new();
    'outer: for (i, p) in points.iter().enumerate() {
        for (j, q) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            if dominates_unchecked(q, p) || (j < i && q == p) {
                continue 'outer;
            }
        }
        keep.push(i);
    }
    keep
}

/// A point set together with the hypervolume reference point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontSet {
    pub points: Vec<Vec<f64>>,
    pub reference: Vec<f64>,
}

impl FrontSet {
    pub fn new(points: Vec<Vec<f64>>, reference: Vec<f64>) -> Self {
        Self { points, reference }
    }

    pub fn empty(reference: Vec<f64>) -> Self {
        Self {
            points: Vec::new(),
            reference,
        }
    }

    /// Keeps the mutually non-dominated points that strictly dominate the reference.
    pub fn normalize(&mut self) {
        let inside: Vec<Vec<f64>> = self
            .points
            .drain(..)
            .filter(|p| strictly_better(p, &self.reference))
            .collect();
        let keep = non_dominated_filter(&inside);
        self.points = keep.into_iter().map(|i| inside[i].clone()).collect();
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    pub fn hypervolume(&self) -> Result<f64> {
        hypervolume(&self.points, &self.reference)
    }
}

fn strictly_better(p: &[f64], reference: &[f64]) -> bool {
    p.len() == reference.len() && p.iter().zip(reference).all(|(a, r)| a < r)
}

/// Exact hypervolume dominated by `points` and bounded by `reference`.
///
/// Points that are not strictly better than the reference in every
/// coordinate contribute nothing and are skipped.
pub fn hypervolume(points: &[Vec<f64>], reference: &[f64]) -> Result<f64> {
    let m = reference.len();
    if !(2..=3).contains(&m) {
        return Err(Error::UnsupportedDimension(m));
    }
    for p in points {
        if p.len() != m {
            return Err(Error::Dimension {
                expected: m,
                got: p.len(),
            });
        }
    }
    let inside: Vec<&[f64]> = points
        .iter()
        .map(Vec::as_slice)
        .filter(|p| strictly_better(p, reference))
        .collect();
    Ok(match m {
        2 => hv2(inside, reference),
        _ => hv3(inside, reference),
    })
}

fn hv2(mut pts: Vec<&[f64]>, reference: &[f64]) -> f64 {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut ceiling = reference[1];
    for p in pts {
        if p[1] < ceiling {
            area += (reference[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    area
}

/// Two-dimensional non-dominated staircase, sorted by the first
/// coordinate ascending (so the second is descending).
struct Staircase {
    steps: Vec<(f64, f64)>,
    rx: f64,
    ry: f64,
    area: f64,
}

impl Staircase {
    fn new(rx: f64, ry: f64) -> Self {
        Self {
            steps: Vec::new(),
            rx,
            ry,
            area: 0.0,
        }
    }

    fn insert(&mut self, x: f64, y: f64) {
        let pos = self.steps.partition_point(|&(sx, _)| sx <= x);
        // the left neighbour has the smallest y among points with sx <= x
        if pos > 0 && self.steps[pos - 1].1 <= y {
            return;
        }
        let mut end = pos;
        while end < self.steps.len() && self.steps[end].1 >= y {
            end += 1;
        }
        self.steps.splice(pos..end, std::iter::once((x, y)));
        self.area = self.compute_area();
    }

    fn compute_area(&self) -> f64 {
        let mut area = 0.0;
        for (i, &(x, y)) in self.steps.iter().enumerate() {
            let next_x = self.steps.get(i + 1).map_or(self.rx, |s| s.0);
            area += (next_x - x) * (self.ry - y);
        }
        area
    }
}

fn hv3(mut pts: Vec<&[f64]>, reference: &[f64]) -> f64 {
    if pts.is_empty() {
        return 0.0;
    }
    pts.sort_by(|a, b| a[2].total_cmp(&b[2]));
    let mut stair = Staircase::new(reference[0], reference[1]);
    let mut volume = 0.0;
    for (i, p) in pts.iter().enumerate() {
        stair.insert(p[0], p[1]);
        let next_z = pts.get(i + 1).map_or(reference[2], |q| q[2]);
        volume += stair.area * (next_z - p[2]);
    }
    volume
}

/// Hypervolume gained by adding one point to `front`.
pub fn exclusive_contribution(point: &[f64], front: &[Vec<f64>], reference: &[f64]) -> Result<f64> {
    if !strictly_better(point, reference) {
        return Ok(0.0);
    }
    let own: f64 = point.iter().zip(reference).map(|(p, r)| r - p).product();
    let limited: Vec<Vec<f64>> = front
        .iter()
        .map(|q| q.iter().zip(point).map(|(a, b)| a.max(*b)).collect())
        .collect();
    let keep = non_dominated_filter(&limited);
    let limited: Vec<Vec<f64>> = keep.into_iter().map(|i| limited[i].clone()).collect();
    Ok((own - hypervolume(&limited, reference)?).max(0.0))
}

/// HV(existing ∪ candidates) − HV(existing), never negative.
pub fn hvi(candidates: &[Vec<f64>], existing: &FrontSet) -> Result<f64> {
    if candidates.len() == 1 {
        return exclusive_contribution(&candidates[0], &existing.points, &existing.reference);
    }
    let base = existing.hypervolume()?;
    let mut union = existing.points.clone();
    union.extend(candidates.iter().cloned());
    Ok((hypervolume(&union, &existing.reference)? - base).max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchSelection {
    /// Indices into the candidate list, in pick order.
    pub indices: Vec<usize>,
    /// Fewer candidates than requested were available.
    pub shortfall: bool,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn ties(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Greedy batch maximizing hypervolume improvement.
///
/// Each round takes the candidate with the largest marginal HVI against
/// `existing` plus the points already picked. Ties go to the candidate
/// farthest (minimum Euclidean distance in objective space) from the picked
/// points, then to the lowest index.
pub fn greedy_batch_select(
    candidate_objectives: &[Vec<f64>],
    existing: &FrontSet,
    b: usize,
) -> Result<BatchSelection> {
    let shortfall = candidate_objectives.len() < b;
    let want = b.min(candidate_objectives.len());
    let mut front: Vec<Vec<f64>> = existing.points.clone();
    let mut picked: Vec<usize> = Vec::with_capacity(want);
    let mut available: Vec<bool> = vec![true; candidate_objectives.len()];

    while picked.len() < want {
        let mut best: Option<(usize, f64, f64)> = None;
        for (i, c) in candidate_objectives.iter().enumerate() {
            if !available[i] {
                continue;
            }
            let gain = exclusive_contribution(c, &front, &existing.reference)?;
            let spread = picked
                .iter()
                .map(|&j| euclidean(c, &candidate_objectives[j]))
                .fold(f64::INFINITY, f64::min);
            let better = match best {
                None => true,
                Some((_, g, s)) => {
                    if ties(gain, g) {
                        spread > s
                    } else {
                        gain > g
                    }
                }
            };
            if better {
                best = Some((i, gain, spread));
            }
        }
        let (i, _, _) = best.expect("at least one candidate available");
        available[i] = false;
        picked.push(i);
        front.push(candidate_objectives[i].clone());
    }
    Ok(BatchSelection {
        indices: picked,
        shortfall,
    })
}

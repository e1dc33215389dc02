//! Log hypervolume difference and mean Euclidean distance, with the
//! brute-force truth-solution oracle MED needs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::SurrogateSet;
use crate::moo::FrontSet;
use crate::problems::{ProblemId, ProblemSpec};
use crate::psm::PsmParams;
use crate::scalarization::chebyshev;

/// Floor applied to the hypervolume gap before taking its log.
pub const LHD_EPSILON: f64 = 1e-12;

/// Default MED preference counts per objective count.
pub fn default_med_count(m: usize) -> usize {
    if m == 2 {
        200
    } else {
        300
    }
}

/// All compositions of `h` into `m` non-negative parts, in lexicographic order.
fn compositions(h: usize, m: usize) -> Vec<Vec<usize>> {
    if m == 1 {
        return vec![vec![h]];
    }
    let mut out = Vec::new();
    for first in 0..=h {
        for mut rest in compositions(h - first, m - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn lattice_count(h: usize, m: usize) -> usize {
    // C(h + m − 1, m − 1)
    let mut c = 1usize;
    for i in 1..m {
        c = c * (h + i) / i;
    }
    c
}

/// `k` evenly spread interior preferences.
///
/// Nodes are c ↦ (cᵢ + 1)/(H + m) over the lattice Σcᵢ = H with the
/// smallest H giving at least `k` nodes; if the lattice is larger than
/// `k`, nodes are taken at evenly spaced indices. For m = 2 this is
/// r₁ = i/(k+1), i = 1…k.
pub fn preference_grid(k: usize, m: usize) -> Result<Vec<Vec<f64>>> {
    if k == 0 || m < 2 {
        return Err(Error::InvalidArgument(format!("preference grid needs k ≥ 1 and m ≥ 2 (got k={k}, m={m})")));
    }
    let mut h = 0;
    while lattice_count(h, m) < k {
        h += 1;
    }
    let nodes = compositions(h, m);
    let denom = (h + m) as f64;
    let pick = |c: &Vec<usize>| -> Vec<f64> { c.iter().map(|&v| (v + 1) as f64 / denom).collect() };
    let grid: Vec<Vec<f64>> = if nodes.len() == k {
        nodes.iter().map(pick).collect()
    } else {
        (0..k).map(|j| pick(&nodes[j * nodes.len() / k])).collect()
    };
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lhd {
    pub value: f64,
    /// The gap was below the floor (or negative) and was clamped.
    pub clamped: bool,
}

/// ln(max(HV_truth − HV_learned, ε)).
pub fn lhd_from_hv(truth_hv: f64, learned_hv: f64) -> Lhd {
    let gap = truth_hv - learned_hv;
    if gap < LHD_EPSILON || gap.is_nan() {
        Lhd {
            value: LHD_EPSILON.ln(),
            clamped: true,
        }
    } else {
        Lhd {
            value: gap.ln(),
            clamped: false,
        }
    }
}

pub fn lhd(truth: &[Vec<f64>], learned: &FrontSet) -> Result<Lhd> {
    let truth_hv = crate::moo::hypervolume(truth, &learned.reference)?;
    Ok(lhd_from_hv(truth_hv, learned.hypervolume()?))
}

/// Hypervolume of the true front. DTLZ2 uses the closed form
/// ∏ρᵢ − π/6 (box minus the unit-sphere octant, valid for ρ ≥ 1); other
/// problems use the sampled front.
pub fn true_hypervolume(problem: &ProblemSpec, front: &[Vec<f64>]) -> Result<f64> {
    let reference = &problem.reference_point;
    if problem.id == ProblemId::Dtlz2 && problem.m == 3 && reference.iter().all(|&r| r >= 1.0) {
        return Ok(reference.iter().product::<f64>() - std::f64::consts::PI / 6.0);
    }
    crate::moo::hypervolume(front, reference)
}

/// Index of the front point minimizing the Chebyshev value; ties keep the lowest index.
pub fn truth_solution_index(front: &[Vec<f64>], r: &[f64], z: &[f64]) -> Result<usize> {
    let mut best = None;
    for (i, y) in front.iter().enumerate() {
        let v = chebyshev(y, r, z)?.value;
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
        .ok_or_else(|| Error::InvalidArgument("empty front sample".into()))
}

pub fn truth_solution_for_pref(front: &[Vec<f64>], r: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    truth_solution_index(front, r, z).map(|i| front[i].clone())
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

/// Mean distance between `learned[k]` and the truth solution of `prefs[k]`.
pub fn mean_distance(learned: &[Vec<f64>], prefs: &[Vec<f64>], front: &[Vec<f64>], z: &[f64]) -> Result<f64> {
    if learned.len() != prefs.len() || prefs.is_empty() {
        return Err(Error::Dimension {
            expected: prefs.len(),
            got: learned.len(),
        });
    }
    let mut total = 0.0;
    for (y, r) in learned.iter().zip(prefs) {
        total += euclidean(y, &front[truth_solution_index(front, r, z)?]);
    }
    Ok(total / prefs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedReport {
    /// Distance from the surrogate means at h(r|θ).
    pub med: f64,
    /// Distance from the true objectives at h(r|θ); synthetic problems only.
    pub true_med: Option<f64>,
}

/// MED over a `k`-point preference grid against `front`, with ideal point `z`.
pub fn med(
    params: &PsmParams,
    surrogates: &SurrogateSet,
    problem: &ProblemSpec,
    k: usize,
    front: &[Vec<f64>],
    z: &[f64],
) -> Result<MedReport> {
    let prefs = preference_grid(k, problem.m)?;
    let (lower, upper) = problem.bounds();
    let designs = prefs
        .iter()
        .map(|r| params.forward(r, lower, upper).map(|t| problem.snap(&t.x)))
        .collect::<Result<Vec<_>>>()?;
    let means = designs.iter().map(|x| surrogates.means(x)).collect::<Result<Vec<_>>>()?;
    let med = mean_distance(&means, &prefs, front, z)?;
    let true_med = if problem.id.is_synthetic() {
        let ys = designs.iter().map(|x| problem.evaluate(x)).collect::<Result<Vec<_>>>()?;
        Some(mean_distance(&ys, &prefs, front, z)?)
    } else {
        None
    };
    Ok(MedReport { med, true_med })
}

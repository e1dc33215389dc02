//! Chebyshev scalarization, preference sampling and the ideal point.

use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::sampling::{derive_seed, rng_from};

/// Margin subtracted from the archive minimum to form the ideal point.
pub const IDEAL_MARGIN: f64 = 0.1;
const PREF_FLOOR: f64 = 1e-6;

/// Draws `k` preferences from the flat Dirichlet Dir(1/m, …, 1/m).
///
/// Each draw is clamped to [1e−6, 1 − 1e−6] and renormalized.
pub fn sample_preferences(k: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(m >= 2, "preferences need at least two objectives");
    let gamma = Gamma::new(1.0 / m as f64, 1.0).expect("positive shape");
    let mut rng = rng_from(derive_seed(seed, &[0x7072_6566]));
    (0..k)
        .map(|_| loop {
            let raw: Vec<f64> = (0..m).map(|_| gamma.sample(&mut rng)).collect();
            let total: f64 = raw.iter().sum();
            if total > 0.0 && total.is_finite() {
                break clamp_to_simplex(raw.into_iter().map(|v| v / total).collect());
            }
        })
        .collect()
}

fn clamp_to_simplex(r: Vec<f64>) -> Vec<f64> {
    let r: Vec<f64> = r.into_iter().map(|v| v.clamp(PREF_FLOOR, 1.0 - PREF_FLOOR)).collect();
    let total: f64 = r.iter().sum();
    r.into_iter().map(|v| v / total).collect()
}

/// Normalized preferences are rounded to multiples of 2⁻⁴⁰ so that
/// scaled copies of one preference map to the same bits.
pub const PREF_QUANTUM: f64 = 1.0 / (1u64 << 40) as f64;

/// Validates a user preference and scales it onto the simplex.
pub fn normalize_preference(pref: &[f64], m: usize) -> Result<Vec<f64>> {
    if pref.len() != m {
        return Err(Error::Dimension {
            expected: m,
            got: pref.len(),
        });
    }
    if pref.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidArgument("preference entries must be finite and non-negative".into()));
    }
    let total: f64 = pref.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("preference must not be all zero".into()));
    }
    let mut r: Vec<f64> = pref
        .iter()
        .map(|v| (v / total / PREF_QUANTUM).round() * PREF_QUANTUM)
        .collect();
    // multiples of the quantum add exactly; the largest entry takes the slack
    let largest = (0..m).fold(0, |b, i| if r[i] > r[b] { i } else { b });
    let others: f64 = (0..m).filter(|&i| i != largest).map(|i| r[i]).sum();
    r[largest] = 1.0 - others;
    Ok(r)
}

/// Componentwise archive minimum minus [`IDEAL_MARGIN`].
pub fn ideal_point(archive_objectives: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = archive_objectives
        .first()
        .ok_or_else(|| Error::InvalidArgument("ideal point of an empty archive".into()))?;
    let mut z = first.clone();
    for y in &archive_objectives[1..] {
        if y.len() != z.len() {
            return Err(Error::Dimension {
                expected: z.len(),
                got: y.len(),
            });
        }
        for (zi, yi) in z.iter_mut().zip(y) {
            *zi = zi.min(*yi);
        }
    }
    Ok(z.into_iter().map(|v| v - IDEAL_MARGIN).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chebyshev {
    pub value: f64,
    /// Lowest index attaining the maximum.
    pub argmax: usize,
    /// Subgradient with respect to f̂; nonzero only at `argmax`.
    pub subgradient: Vec<f64>,
}

/// maxᵢ rᵢ·|f̂ᵢ − zᵢ|, with its argmax and a single-coordinate subgradient.
pub fn chebyshev(f_hat: &[f64], r: &[f64], z: &[f64]) -> Result<Chebyshev> {
    if f_hat.len() != r.len() || z.len() != r.len() {
        return Err(Error::Dimension {
            expected: r.len(),
            got: if f_hat.len() != r.len() { f_hat.len() } else { z.len() },
        });
    }
    let mut value = f64::NEG_INFINITY;
    let mut argmax = 0;
    for (i, ((f, ri), zi)) in f_hat.iter().zip(r).zip(z).enumerate() {
        let v = ri * (f - zi).abs();
        if v > value {
            value = v;
            argmax = i;
        }
    }
    let mut subgradient = vec![0.0; r.len()];
    let diff = f_hat[argmax] - z[argmax];
    subgradient[argmax] = if diff > 0.0 {
        r[argmax]
    } else if diff < 0.0 {
        -r[argmax]
    } else {
        0.0
    };
    Ok(Chebyshev {
        value,
        argmax,
        subgradient,
    })
}

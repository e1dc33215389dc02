//! Seed derivation and space-filling designs.
//!
//! Every random draw in a run comes from a generator seeded by
//! [`derive_seed`] over a master seed and a tag path, so any single
//! component can be replayed on its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based seed splitter.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(master), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn rng_from(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Owen-scrambled Sobol points scaled into the box.
pub fn sobol_design(count: usize, lower: &[f64], upper: &[f64], seed: u64) -> Vec<Vec<f64>> {
    let scramble = (seed ^ (seed >> 32)) as u32;
    (0..count)
        .map(|i| {
            lower
                .iter()
                .zip(upper)
                .enumerate()
                .map(|(d, (&lo, &hi))| {
                    let u = sobol_burley::sample(i as u32, d as u32, scramble) as f64;
                    lo + u * (hi - lo)
                })
                .collect()
        })
        .collect()
}

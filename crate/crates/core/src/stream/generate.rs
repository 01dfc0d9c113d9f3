use rand::Rng;

use crate::error::{invalid, Result};
use crate::rng::{self, streams};
use crate::ItemId;

/// Largest universe the Zipf inverse-CDF table is built for.
pub const MAX_ZIPF_UNIVERSE_BITS: u32 = 24;

/// Normalized Zipf(s) probabilities for ranks `1..=2^bits`.
pub fn zipf_mass(universe_bits: u32, s: f64) -> Result<Vec<f64>> {
    if universe_bits > MAX_ZIPF_UNIVERSE_BITS {
        return Err(invalid(format!(
            "zipf universe_bits must be at most {MAX_ZIPF_UNIVERSE_BITS}, got {universe_bits}"
        )));
    }
    if !(s.is_finite() && s >= 0.0) {
        return Err(invalid(format!("zipf skew must be finite and >= 0, got {s}")));
    }
    let size = 1usize << universe_bits;
    let weights: Vec<f64> = (1..=size).map(|r| (r as f64).powf(-s)).collect();
    let norm: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / norm).collect())
}

fn cumulative(mass: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = mass
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    cdf
}

fn sample_inverse<R: Rng>(rng: &mut R, cdf: &[f64]) -> usize {
    let u: f64 = rng.random();
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// `num_inserts` i.i.d. Zipf(s) items; rank `r` maps to item `r - 1`.
pub fn gen_zipf(universe_bits: u32, s: f64, num_inserts: u64, seed: u64) -> Result<Vec<ItemId>> {
    if num_inserts == 0 {
        return Err(invalid("num_inserts must be at least 1"));
    }
    let cdf = cumulative(&zipf_mass(universe_bits, s)?);
    let mut rng = rng::seeded(seed, streams::ITEMS);
    Ok((0..num_inserts).map(|_| sample_inverse(&mut rng, &cdf) as ItemId).collect())
}

/// Zipf items relabelled by a seeded bijection of the universe
/// (`x -> a x + b mod 2^bits`, `a` odd).
pub fn gen_zipf_permuted(
    universe_bits: u32,
    s: f64,
    num_inserts: u64,
    seed: u64,
    permutation_seed: u64,
) -> Result<Vec<ItemId>> {
    let items = gen_zipf(universe_bits, s, num_inserts, seed)?;
    let mut rng = rng::seeded(permutation_seed, streams::PERMUTATION);
    let mask = (1u64 << universe_bits) - 1;
    let a = rng.random::<u64>() | 1;
    let b = rng.random::<u64>();
    Ok(items.into_iter().map(|x| x.wrapping_mul(a).wrapping_add(b) & mask).collect())
}

/// `num_inserts` i.i.d. Binomial(n, p) items by inversion.
pub fn gen_binomial(universe_bits: u32, n: u64, p: f64, num_inserts: u64, seed: u64) -> Result<Vec<ItemId>> {
    if num_inserts == 0 {
        return Err(invalid("num_inserts must be at least 1"));
    }
    if universe_bits == 0 || universe_bits > 63 || n >= 1u64 << universe_bits {
        return Err(invalid(format!("binomial n={n} must be below 2^{universe_bits}")));
    }
    if n > 1 << 26 {
        return Err(invalid(format!("binomial n={n} is too large for the inversion table")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("binomial p must be in (0, 1), got {p}")));
    }
    // log pmf via ln C(n, k+1) = ln C(n, k) + ln((n - k) / (k + 1))
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let mut log_choose = 0.0;
    let mut log_pmf = Vec::with_capacity(n as usize + 1);
    for k in 0..=n {
        log_pmf.push(log_choose + k as f64 * lp + (n - k) as f64 * lq);
        if k < n {
            log_choose += ((n - k) as f64 / (k + 1) as f64).ln();
        }
    }
    let peak = log_pmf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_pmf.iter().map(|l| (l - peak).exp()).collect();
    let norm: f64 = weights.iter().sum();
    let mass: Vec<f64> = weights.into_iter().map(|w| w / norm).collect();
    let cdf = cumulative(&mass);
    let mut rng = rng::seeded(seed, streams::ITEMS);
    Ok((0..num_inserts).map(|_| sample_inverse(&mut rng, &cdf) as ItemId).collect())
}

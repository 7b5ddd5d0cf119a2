//! Seeded generators for log-concave and ultra-log-concave test instances.
//!
//! Everything is driven by a caller-provided RNG so sweeps are reproducible;
//! [`seeded`] gives the ChaCha stream used throughout the crate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::{make_pmf, poisson_pmf, CompoundingDist, Normalization, ParamVector, Pmf};
use crate::error::{invalid, Result};

pub type SweepRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SweepRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A concave sequence of length `len` starting at 0, with increments drawn
/// from `[-spread, spread]` and sorted into decreasing order.
pub fn random_concave_sequence<R: Rng>(rng: &mut R, len: usize, spread: f64) -> Vec<f64> {
    if len == 0 {
        return Vec::new();
    }
    let mut steps: Vec<f64> = (1..len)
        .map(|_| rng.random_range(-spread..=spread))
        .collect();
    steps.sort_by(|a, b| b.total_cmp(a));
    let mut out = Vec::with_capacity(len);
    out.push(0.0);
    for s in steps {
        let last = *out.last().unwrap();
        out.push(last + s);
    }
    out
}

/// `exp(log_weights)` normalised, stable against overflow.
fn normalised_exp(offset: usize, log_weights: &[f64]) -> Pmf {
    let top = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_weights.iter().map(|l| (l - top).exp()).collect();
    make_pmf(offset, &w, 0.0, Normalization::Rescale).expect("positive weights")
}

/// A log-concave `Q` on `{1, ..., m}` with `m` drawn from `1..=max_support`.
pub fn random_lc_compounding<R: Rng>(rng: &mut R, max_support: usize) -> CompoundingDist {
    let m = rng.random_range(1..=max_support.max(1));
    lc_compounding_with_support(rng, m)
}

/// A log-concave `Q` on exactly `{1, ..., m}`.
pub fn lc_compounding_with_support<R: Rng>(rng: &mut R, m: usize) -> CompoundingDist {
    let phi = random_concave_sequence(rng, m.max(1), 2.0);
    CompoundingDist::new(normalised_exp(1, &phi)).expect("offset is 1")
}

/// A log-concave pmf on `{0, ..., len - 1}` with `len` drawn from `1..=max_len`.
pub fn random_lc_pmf<R: Rng>(rng: &mut R, max_len: usize) -> Pmf {
    let len = rng.random_range(1..=max_len.max(1));
    let phi = random_concave_sequence(rng, len, 2.0);
    normalised_exp(0, &phi)
}

/// An ultra-log-concave pmf on `{0, ..., len - 1}`: a Poisson profile times
/// `exp(concave)`, so the ratio to the Poisson law is log-concave.
pub fn random_ulc_pmf<R: Rng>(rng: &mut R, max_len: usize) -> Pmf {
    let len = rng.random_range(2..=max_len.max(2));
    let rate: f64 = rng.random_range(0.2..4.0);
    let phi = random_concave_sequence(rng, len, 1.0);
    let mut ln_fact = 0.0;
    let logs: Vec<f64> = phi
        .iter()
        .enumerate()
        .map(|(x, f)| {
            if x > 0 {
                ln_fact += (x as f64).ln();
            }
            x as f64 * rate.ln() - ln_fact + f
        })
        .collect();
    normalised_exp(0, &logs)
}

/// A point of `{p in [0,1]^n : sum p = lambda}`, drawn from a flat Dirichlet
/// slice by rejection. Above `n / 2` the complement `1 - p` is drawn instead.
pub fn random_param_vector<R: Rng>(rng: &mut R, n: usize, lambda: f64) -> Result<ParamVector> {
    if n == 0 || !(lambda > 0.0) || lambda > n as f64 {
        return Err(invalid("lambda", lambda, "need 0 < lambda <= n"));
    }
    if (lambda - n as f64).abs() < 1e-15 {
        return ParamVector::constant(n, 1.0);
    }
    let flip = lambda > n as f64 / 2.0;
    let target = if flip { n as f64 - lambda } else { lambda };
    loop {
        let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let total: f64 = e.iter().sum();
        let p: Vec<f64> = e.iter().map(|v| v / total * target).collect();
        if p.iter().all(|&v| v <= 1.0) {
            return ParamVector::new(if flip {
                p.iter().map(|v| 1.0 - v).collect()
            } else {
                p
            });
        }
    }
}

/// Tilts `p` by `exp(theta x)` so that its mean becomes `target`.
///
/// Tilting multiplies by a log-linear factor, so it preserves ultra
/// log-concavity.
pub fn tilt_to_mean(p: &Pmf, target: f64) -> Result<Pmf> {
    let lo_x = p.offset() as f64;
    let hi_x = p.max_index() as f64;
    if !(target > lo_x && target < hi_x) {
        return Err(invalid(
            "target",
            target,
            "mean must lie strictly inside the support",
        ));
    }
    let logs: Vec<f64> = p.probs().iter().map(|v| v.ln()).collect();
    let tilted = |theta: f64| -> Pmf {
        let l: Vec<f64> = logs
            .iter()
            .enumerate()
            .map(|(i, l)| l + theta * (p.offset() + i) as f64)
            .collect();
        normalised_exp(p.offset(), &l)
    };
    let (mut lo, mut hi) = (-1.0, 1.0);
    while tilted(lo).mean() > target {
        lo *= 2.0;
    }
    while tilted(hi).mean() < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let m = tilted(mid).mean();
        if (m - target).abs() < 1e-14 * target.max(1.0) {
            return Ok(tilted(mid));
        }
        if m < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(tilted(0.5 * (lo + hi)))
}

/// `Po(lambda)` (cut at `tail_eps`) times `exp(small concave sequence)`,
/// renormalised and tilted back to mean `lambda`.
pub fn ulc_perturbation<R: Rng>(
    rng: &mut R,
    lambda: f64,
    amplitude: f64,
    tail_eps: f64,
) -> Result<Pmf> {
    let base = poisson_pmf(lambda, tail_eps)?;
    // keep a few extra points so the tilt has room on short supports
    let len = base.len().max(4);
    let phi = random_concave_sequence(rng, len, amplitude);
    let mut ln_fact = 0.0;
    let logs: Vec<f64> = (0..len)
        .map(|x| {
            if x > 0 {
                ln_fact += (x as f64).ln();
            }
            x as f64 * lambda.ln() - ln_fact + phi[x]
        })
        .collect();
    tilt_to_mean(&normalised_exp(0, &logs), lambda)
}

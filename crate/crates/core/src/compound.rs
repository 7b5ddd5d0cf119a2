//! The compounding operator `P -> C_Q P` and the named compound families.
//!
//! `C_Q P(x) = sum_y P(y) Q^{*y}(x)`. Because `Q` lives on `{1, 2, ...}`, only
//! `y <= x` contributes to `C_Q P(x)`, so restricting the output to
//! `{0, ..., max_x}` needs only the first `max_x + 1` convolution powers and
//! gives values that are exact on that range.
//!
//! [`compound_poisson_panjer`] evaluates the compound Poisson law by the
//! classical recursion and shares no code with the mixture path; it exists
//! as an independent oracle.

use crate::dist::{
    bernoulli_sum_of, bernoulli_sum_pmf, binomial_pmf, check_probability, convolution_power,
    convolve_slices, poisson_pmf, poisson_pmf_on_range, CompoundingDist, ParamVector, Pmf,
};
use crate::error::{invalid, Result};

/// `sum_y w(y) Q^{*y}(x)` for `x` in `0..=max_x`, as a dense vector from 0.
///
/// `weights[i]` is the weight of `y = weights_offset + i`; weights may be signed.
pub(crate) fn mixture_dense(
    weights_offset: usize,
    weights: &[f64],
    q: &Pmf,
    max_x: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; max_x + 1];
    if weights.is_empty() {
        return out;
    }
    let last_y = weights_offset + weights.len() - 1;
    // power holds Q^{*y} on {power_offset, ..., max_x}
    let mut power = vec![1.0];
    let mut power_offset = 0usize;
    for y in 0..=last_y {
        if y >= weights_offset {
            let w = weights[y - weights_offset];
            if w != 0.0 {
                for (o, &v) in out[power_offset..].iter_mut().zip(&power) {
                    *o += w * v;
                }
            }
        }
        if y == last_y {
            break;
        }
        let next_offset = power_offset + q.offset();
        if next_offset > max_x {
            break;
        }
        power = convolve_slices(&power, q.probs(), Some(max_x - next_offset + 1));
        power_offset = next_offset;
    }
    out
}

/// Largest reachable point of `C_Q P` when both are stored on finite ranges.
fn full_support_end(p: &Pmf, q: &Pmf) -> usize {
    p.max_index() * q.max_index()
}

/// `C_Q P`, the law of `X_1 + ... + X_Y` with `Y ~ P` and `X_i ~ Q` i.i.d.
pub fn compound(p: &Pmf, q: &CompoundingDist) -> Pmf {
    compound_capped(p, q, None)
}

/// [`compound`] restricted to `{0, ..., max_x}`.
///
/// Values on the retained range are exact for the stored `P` and `Q`; mass
/// beyond `max_x` moves into the tail bound.
pub fn compound_capped(p: &Pmf, q: &CompoundingDist, max_x: Option<usize>) -> Pmf {
    let end = full_support_end(p, q);
    let max_x = max_x.map_or(end, |m| m.min(end));
    let values = mixture_dense(p.offset(), p.probs(), q, max_x);
    let propagated = p.tail_bound()
        + p.iter()
            .map(|(y, py)| py * (y as f64 * q.tail_bound()).min(1.0))
            .sum::<f64>();
    Pmf::from_raw_with_deficit(0, values, propagated)
}

/// `CBern(p, Q)`: mass `1 - p` at 0 and `p Q(x)` at `x >= 1`.
pub fn compound_bernoulli(p: f64, q: &CompoundingDist) -> Result<Pmf> {
    check_probability("p", p)?;
    let mut probs = vec![0.0; q.max_index() + 1];
    probs[0] = 1.0 - p;
    for (x, qx) in q.iter() {
        probs[x] = p * qx;
    }
    Ok(Pmf::from_raw(0, probs, p * q.tail_bound()))
}

/// `CBin(n, p, Q)` through the mixture formula.
pub fn compound_binomial(n: usize, p: f64, q: &CompoundingDist) -> Result<Pmf> {
    if n == 0 {
        return Err(invalid("n", 0.0, "must be >= 1"));
    }
    Ok(compound(&binomial_pmf(n, p)?, q))
}

/// `CBin(n, p, Q)` as the `n`-fold convolution of `CBern(p, Q)`.
pub fn compound_binomial_by_convolution(n: usize, p: f64, q: &CompoundingDist) -> Result<Pmf> {
    if n == 0 {
        return Err(invalid("n", 0.0, "must be >= 1"));
    }
    Ok(convolution_power(&compound_bernoulli(p, q)?, n))
}

/// `C_Q b_p` for a Bernoulli-sum parameter vector.
pub fn compound_bernoulli_sum(p: &ParamVector, q: &CompoundingDist) -> Pmf {
    compound(&bernoulli_sum_pmf(p), q)
}

/// `C_Q b_p` as the convolution of the individual `CBern(p_i, Q)`.
pub fn compound_bernoulli_sum_by_convolution(p: &ParamVector, q: &CompoundingDist) -> Pmf {
    let mut acc = Pmf::point_mass(0);
    for &pi in p.entries() {
        // entries are validated by ParamVector
        let cb = compound_bernoulli(pi, q).expect("validated parameter");
        acc = crate::dist::convolve(&acc, &cb);
    }
    acc
}

/// `CPo(lambda, Q)` through the Poisson mixture of convolution powers.
///
/// The Poisson index is cut at the smallest `J` whose upper tail is at most
/// `tail_eps / 2`. Convolution powers are kept whole, so the tail bound is
/// the Poisson cut plus whatever truncation `Q` itself carries.
pub fn compound_poisson(lambda: f64, q: &CompoundingDist, tail_eps: f64) -> Result<Pmf> {
    let poisson = poisson_pmf(lambda, tail_eps / 2.0)?;
    Ok(compound(&poisson, q))
}

/// `CPo(lambda, Q)` on `{0, ..., max_x}`, exact on that range.
pub fn compound_poisson_capped(lambda: f64, q: &CompoundingDist, max_x: usize) -> Result<Pmf> {
    let jmax = max_x / q.offset();
    let poisson = poisson_pmf_on_range(lambda, jmax)?;
    let values = mixture_dense(poisson.offset(), poisson.probs(), q, max_x);
    Ok(Pmf::from_raw_with_deficit(0, values, 0.0))
}

/// Compound Poisson values on `{0, ..., n_max}` by the recursion
/// `C(0) = e^{-lambda}`, `C(x) = (lambda / x) sum_{j=1}^{x} j Q(j) C(x - j)`.
///
/// `Q(0) = 0` always holds for a [`CompoundingDist`], so the usual
/// `e^{-lambda (1 - Q(0))}` start reduces to `e^{-lambda}`.
pub fn compound_poisson_panjer(lambda: f64, q: &CompoundingDist, n_max: usize) -> Result<Pmf> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(invalid("lambda", lambda, "must be positive"));
    }
    let mut c = Vec::with_capacity(n_max + 1);
    c.push((-lambda).exp());
    for x in 1..=n_max {
        let upper = x.min(q.max_index());
        let mut acc = 0.0;
        for j in q.offset()..=upper {
            acc += j as f64 * q.get(j) * c[x - j];
        }
        c.push(lambda / x as f64 * acc);
    }
    Ok(Pmf::from_raw_with_deficit(0, c, 0.0))
}

/// `C_Q b_p` with `Q` fixed, evaluated on a full parameter vector slice.
pub(crate) fn compound_bernoulli_sum_of(entries: &[f64], q: &CompoundingDist) -> Pmf {
    compound(&bernoulli_sum_of(entries), q)
}

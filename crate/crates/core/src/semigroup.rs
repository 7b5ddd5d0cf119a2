//! The thinning/Poisson interpolation `U_alpha`, its compound version, the
//! compound score `r1`, and the energy functionals whose monotonicity drives
//! the maximum-entropy theorems.
//!
//! Analytic derivatives are provided next to the functions they differentiate
//! so that tests can compare them with central finite differences.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::compound::{
    compound, compound_bernoulli_sum_of, compound_binomial, compound_poisson_capped, mixture_dense,
};
use crate::concavity::{ConcavityVerdict, ViolationKind};
use crate::dist::{
    bernoulli_sum_of, convolve, moments, poisson_pmf, CompoundingDist, ParamVector, Pmf,
};
use crate::error::{invalid, Error, Result};

/// Step for central finite differences.
pub const FD_STEP: f64 = 1e-5;
/// Reference probabilities at or below this are treated as underflow.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;
/// Consecutive energy values may rise by at most `MONOTONE_SLACK * (1 + |E|)`.
pub const MONOTONE_SLACK: f64 = 1e-9;
pub const DEFAULT_GRID_POINTS: usize = 41;

/// `points` evenly spaced values from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| {
                if i + 1 == points {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (points - 1) as f64
                }
            })
            .collect(),
    }
}

pub fn default_alpha_grid() -> Vec<f64> {
    uniform_grid(0.0, 1.0, DEFAULT_GRID_POINTS)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(invalid("alpha", alpha, "must lie in [0, 1]"))
    }
}

fn check_open_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid("alpha", alpha, "must lie in (0, 1)"))
    }
}

/// Law of `B_1 + ... + B_X` with `X ~ p` and `B_i ~ Bern(alpha)`, exact.
pub fn binomial_thinning(p: &Pmf, alpha: f64) -> Result<Pmf> {
    check_alpha(alpha)?;
    let mut out = vec![0.0; p.max_index() + 1];
    let mut row = vec![1.0];
    for x in 0..=p.max_index() {
        if x > 0 {
            let mut next = vec![0.0; x + 1];
            for (k, &v) in row.iter().enumerate() {
                next[k] += v * (1.0 - alpha);
                next[k + 1] += v * alpha;
            }
            row = next;
        }
        let px = p.get(x);
        if px > 0.0 {
            for (o, &v) in out.iter_mut().zip(&row) {
                *o += px * v;
            }
        }
    }
    Ok(Pmf::from_raw(0, out, p.tail_bound()))
}

/// `U_alpha P`: `alpha`-thinning of `P` plus independent `Po(lambda (1 - alpha))`
/// noise, where `lambda` is the mean of `P`.
pub fn u_alpha(p: &Pmf, alpha: f64, tail_eps: f64) -> Result<Pmf> {
    let thinned = binomial_thinning(p, alpha)?;
    let noise_rate = p.mean() * (1.0 - alpha);
    if noise_rate <= 0.0 {
        return Ok(thinned);
    }
    Ok(convolve(&thinned, &poisson_pmf(noise_rate, tail_eps)?))
}

/// `C_Q U_alpha P`.
pub fn u_alpha_q(p: &Pmf, q: &CompoundingDist, alpha: f64, tail_eps: f64) -> Result<Pmf> {
    Ok(compound(&u_alpha(p, alpha, tail_eps)?, q))
}

/// `d/dalpha U_alpha P(y)` for `y = 0, ..., max + 1`, from the closed form
/// `(1/alpha) (lambda (U(y) - U(y-1)) - ((y+1) U(y+1) - y U(y)))`.
pub fn u_alpha_derivative(p: &Pmf, alpha: f64, tail_eps: f64) -> Result<Vec<f64>> {
    check_open_alpha(alpha)?;
    let u = u_alpha(p, alpha, tail_eps)?;
    let lambda = p.mean();
    Ok((0..=u.max_index() + 1)
        .map(|y| heat_rhs(&u, lambda, alpha, y))
        .collect())
}

/// Single entry of [`u_alpha_derivative`].
pub fn u_alpha_derivative_rhs(p: &Pmf, alpha: f64, y: usize, tail_eps: f64) -> Result<f64> {
    check_open_alpha(alpha)?;
    let u = u_alpha(p, alpha, tail_eps)?;
    Ok(heat_rhs(&u, p.mean(), alpha, y))
}

fn heat_rhs(u: &Pmf, lambda: f64, alpha: f64, y: usize) -> f64 {
    let below = if y == 0 { 0.0 } else { u.get(y - 1) };
    let yf = y as f64;
    (lambda * (u.get(y) - below) - ((yf + 1.0) * u.get(y + 1) - yf * u.get(y))) / alpha
}

/// `sum_y (y+1) P(y+1) Q^{*y}(x)` and `C_Q P(x)` on `0..=max_x`.
fn score_parts(p: &Pmf, q: &Pmf, max_x: usize) -> (Vec<f64>, Vec<f64>) {
    let shifted: Vec<f64> = (0..p.max_index())
        .map(|y| (y + 1) as f64 * p.get(y + 1))
        .collect();
    let num = mixture_dense(0, &shifted, q, max_x);
    let c = mixture_dense(p.offset(), p.probs(), q, max_x);
    (num, c)
}

/// Score of `C_Q P` on the points of its support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub xs: Vec<usize>,
    pub values: Vec<f64>,
    /// Mean of `P`.
    pub base_mean: f64,
    /// Points where `C_Q P` is at or below the underflow floor.
    pub excluded: Vec<usize>,
}

impl ScoreTable {
    /// First `x` (as an index into `xs`) where the score rises by more than `tol`.
    pub fn first_increase(&self, tol: f64) -> Option<usize> {
        self.values.windows(2).position(|w| w[1] - w[0] > tol)
    }

    /// `sum_x c(x) r1(x)`; zero when `c = C_Q P`.
    pub fn weighted_mean(&self, c: &Pmf) -> f64 {
        self.xs
            .iter()
            .zip(&self.values)
            .map(|(&x, v)| c.get(x) * v)
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,score\n");
        for (x, v) in self.xs.iter().zip(&self.values) {
            let _ = writeln!(s, "{x},{v:e}");
        }
        s
    }
}

/// `r1(x) = sum_y (y+1) P(y+1) Q^{*y}(x) / (lambda C_Q P(x)) - 1`.
pub fn score_r1(p: &Pmf, q: &CompoundingDist) -> Result<ScoreTable> {
    let lambda = p.mean();
    if lambda <= 0.0 {
        return Err(Error::ZeroMean);
    }
    let max_x = p.max_index() * q.max_index();
    let (num, c) = score_parts(p, q, max_x);
    let mut table = ScoreTable {
        xs: Vec::new(),
        values: Vec::new(),
        base_mean: lambda,
        excluded: Vec::new(),
    };
    for (x, (&n, &cx)) in num.iter().zip(&c).enumerate() {
        if cx > UNDERFLOW_FLOOR {
            table.xs.push(x);
            table.values.push(n / (lambda * cx) - 1.0);
        } else if cx > 0.0 || n > 0.0 {
            table.excluded.push(x);
        }
    }
    Ok(table)
}

/// `sum mu f g - (sum mu f)(sum mu g)` under a (sub-)probability vector `mu`.
pub fn chebyshev_covariance(mu: &[f64], f: &[f64], g: &[f64]) -> f64 {
    let ef: f64 = mu.iter().zip(f).map(|(m, a)| m * a).sum();
    let eg: f64 = mu.iter().zip(g).map(|(m, b)| m * b).sum();
    let efg: f64 = mu.iter().zip(f).zip(g).map(|((m, a), b)| m * a * b).sum();
    efg - ef * eg
}

/// `ln C` on `0..=range`, with `None` where `C` underflows.
fn log_table(c: &Pmf, range: usize) -> Vec<Option<f64>> {
    (0..=range)
        .map(|x| {
            let v = c.get(x);
            (v > UNDERFLOW_FLOOR).then(|| v.ln())
        })
        .collect()
}

/// `h(x) = ln C(x) - sum_v Q(v) ln C(x + v)` wherever every term is available.
fn log_increment(log_c: &[Option<f64>], q: &Pmf, x: usize) -> Option<f64> {
    let mut acc = (*log_c.get(x)?)?;
    for (v, qv) in q.iter() {
        acc -= qv * (*log_c.get(x + v)?)?;
    }
    Some(acc)
}

/// `(x, ln C(x) - sum_v Q(v) ln C(x + v))` from 0 up to the first point where a
/// needed value of `C` underflows or lies beyond its stored range.
pub fn log_increments(c: &Pmf, q: &CompoundingDist) -> Vec<(usize, f64)> {
    let log_c = log_table(c, c.max_index());
    (0..=c.max_index())
        .map_while(|x| log_increment(&log_c, q, x).map(|h| (x, h)))
        .collect()
}

/// Checks that `ln C(x) - sum_v Q(v) ln C(x + v)` is nondecreasing in `x`,
/// a weaker requirement than log-concavity of `C` for the energy to decrease.
pub fn log_increment_gate(c: &Pmf, q: &CompoundingDist, tol: f64) -> ConcavityVerdict {
    let hs = log_increments(c, q);
    let mut margin = f64::INFINITY;
    let mut first = None;
    for w in hs.windows(2) {
        let d = w[1].1 - w[0].1;
        margin = margin.min(d);
        if first.is_none() && d < -tol * (1.0 + w[0].1.abs()) {
            first = Some(w[1].0);
        }
    }
    ConcavityVerdict {
        holds: first.is_none(),
        first_violation: first,
        violation_kind: first.map(|_| ViolationKind::Inequality),
        margin: if margin.is_finite() { margin } else { 0.0 },
        checked_support: hs.first().zip(hs.last()).map(|(a, b)| (a.0, b.0)),
    }
}

/// Energy values along a parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyCurve {
    pub grid: Vec<f64>,
    /// Energy in nats.
    pub values: Vec<f64>,
    /// Central differences with step [`FD_STEP`]; `None` at the grid ends.
    pub derivative_estimates: Vec<Option<f64>>,
    /// Closed-form derivatives at the same points.
    pub analytic_derivatives: Vec<Option<f64>>,
    /// Largest mass dropped at any grid point because the reference underflowed.
    pub clipped_mass: f64,
}

impl EnergyCurve {
    /// First grid index `i` with `E(grid[i+1]) > E(grid[i]) + slack (1 + |E|)`.
    pub fn first_increase(&self, slack: f64) -> Option<usize> {
        self.values
            .windows(2)
            .position(|w| w[1] > w[0] + slack * (1.0 + w[0].abs()))
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.first_increase(MONOTONE_SLACK).is_none()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("alpha_or_t,value,derivative_estimate,analytic_derivative\n");
        let opt = |v: Option<f64>| v.map(|d| format!("{d:e}")).unwrap_or_default();
        for i in 0..self.grid.len() {
            let _ = writeln!(
                s,
                "{},{:e},{},{}",
                self.grid[i],
                self.values[i],
                opt(self.derivative_estimates[i]),
                opt(self.analytic_derivatives[i])
            );
        }
        s
    }
}

fn check_grid(grid: &[f64], lo: f64, hi: f64, name: &'static str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Empty);
    }
    for (i, &g) in grid.iter().enumerate() {
        if !(g >= lo && g <= hi) {
            return Err(invalid(name, g, "grid point out of range"));
        }
        if i > 0 && g <= grid[i - 1] {
            return Err(invalid(name, g, "grid must be strictly increasing"));
        }
    }
    Ok(())
}

/// `-sum_x w(x) ln C(x)` and the mass of `w` where `ln C` is unavailable.
fn cross_energy(w: &Pmf, log_c: &[Option<f64>]) -> (f64, f64) {
    let mut e = 0.0;
    let mut clipped = 0.0;
    for (x, wx) in w.iter() {
        match log_c.get(x).copied().flatten() {
            Some(l) => e -= wx * l,
            None => clipped += wx,
        }
    }
    (e, clipped)
}

/// Reference compound Poisson law and the data shared by `E(alpha)` evaluations.
struct AlphaEnergy<'a> {
    p: &'a Pmf,
    q: &'a CompoundingDist,
    lambda: f64,
    tail_eps: f64,
    log_ref: Vec<Option<f64>>,
}

impl<'a> AlphaEnergy<'a> {
    fn new(p: &'a Pmf, q: &'a CompoundingDist, tail_eps: f64, w_range: usize) -> Result<Self> {
        let lambda = p.mean();
        if lambda <= 0.0 {
            return Err(Error::ZeroMean);
        }
        let range = w_range + q.max_index();
        let reference = compound_poisson_capped(lambda, q, range)?;
        Ok(AlphaEnergy {
            p,
            q,
            lambda,
            tail_eps,
            log_ref: log_table(&reference, range),
        })
    }

    fn value(&self, w: &Pmf) -> (f64, f64) {
        cross_energy(w, &self.log_ref)
    }

    fn derivative(&self, alpha: f64) -> Result<f64> {
        check_open_alpha(alpha)?;
        let r = u_alpha(self.p, alpha, self.tail_eps)?;
        let w_max = r.max_index() * self.q.max_index();
        let (num, w) = score_parts(&r, self.q, w_max);
        let mut acc = 0.0;
        for x in 0..=w_max {
            let weight = num[x] - self.lambda * w[x];
            if weight == 0.0 {
                continue;
            }
            if let Some(h) = log_increment(&self.log_ref, self.q, x) {
                acc += weight * h;
            }
        }
        Ok(acc / alpha)
    }
}

/// Largest support point of `C_Q U_alpha P` over `alphas`.
fn max_w_index(p: &Pmf, q: &CompoundingDist, alphas: &[f64], tail_eps: f64) -> Result<usize> {
    let mut m = 0;
    for &a in alphas {
        m = m.max(u_alpha(p, a, tail_eps)?.max_index() * q.max_index());
    }
    Ok(m)
}

/// `E(alpha) = -sum_x C_Q U_alpha P(x) ln CPo(lambda, Q)(x)` along `alpha_grid`.
pub fn energy_curve(
    p: &Pmf,
    q: &CompoundingDist,
    alpha_grid: &[f64],
    tail_eps: f64,
) -> Result<EnergyCurve> {
    check_grid(alpha_grid, 0.0, 1.0, "alpha")?;
    let probes: Vec<f64> = alpha_grid
        .iter()
        .flat_map(|&a| [a - FD_STEP, a, a + FD_STEP])
        .filter(|a| (0.0..=1.0).contains(a))
        .collect();
    let ctx = AlphaEnergy::new(p, q, tail_eps, max_w_index(p, q, &probes, tail_eps)?)?;
    let n = alpha_grid.len();
    let rows: Vec<(f64, f64, Option<f64>, Option<f64>)> = alpha_grid
        .par_iter()
        .enumerate()
        .map(|(i, &a)| -> Result<_> {
            let (e, clipped) = ctx.value(&u_alpha_q(p, q, a, tail_eps)?);
            let interior = i > 0 && i + 1 < n && a - FD_STEP > 0.0 && a + FD_STEP < 1.0;
            let (fd, an) = if interior {
                let up = ctx.value(&u_alpha_q(p, q, a + FD_STEP, tail_eps)?).0;
                let down = ctx.value(&u_alpha_q(p, q, a - FD_STEP, tail_eps)?).0;
                (
                    Some((up - down) / (2.0 * FD_STEP)),
                    Some(ctx.derivative(a)?),
                )
            } else {
                (None, None)
            };
            Ok((e, clipped, fd, an))
        })
        .collect::<Result<_>>()?;
    Ok(EnergyCurve {
        grid: alpha_grid.to_vec(),
        values: rows.iter().map(|r| r.0).collect(),
        clipped_mass: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        derivative_estimates: rows.iter().map(|r| r.2).collect(),
        analytic_derivatives: rows.iter().map(|r| r.3).collect(),
    })
}

/// `E'(alpha) = (1/alpha) sum_x (N(x) - lambda W(x)) (ln CPo(x) - sum_v Q(v) ln CPo(x + v))`,
/// where `W = C_Q U_alpha P` and `N(x) = sum_y (y+1) U_alpha P(y+1) Q^{*y}(x)`,
/// so that `N - lambda W = lambda W r1`.
pub fn energy_derivative_analytic(
    p: &Pmf,
    q: &CompoundingDist,
    alpha: f64,
    tail_eps: f64,
) -> Result<f64> {
    check_open_alpha(alpha)?;
    let range = max_w_index(p, q, &[alpha], tail_eps)?;
    AlphaEnergy::new(p, q, tail_eps, range)?.derivative(alpha)
}

/// Upper bound `lambda q3 + 3 lambda^2 q1 q2 + lambda^3 q1^3` on the third moments
/// of `C_Q U_alpha P` and `C_Q (U_alpha P)#`, with `q_j` the raw moments of `Q`.
pub fn third_moment_bound(lambda: f64, q: &CompoundingDist) -> f64 {
    let m = moments(q, 3).expect("k = 3 is valid");
    let (q1, q2, q3) = (m.raw(1), m.raw(2), m.raw(3));
    lambda * q3 + 3.0 * lambda * lambda * q1 * q2 + lambda.powi(3) * q1.powi(3)
}

/// The vector `((p1+p2)/2 + t, (p1+p2)/2 - t, p3, ..., pn)`.
pub fn params_at_t(p: &ParamVector, t: f64) -> Result<ParamVector> {
    let e = p.entries();
    if e.len() < 2 {
        return Err(invalid("n", e.len() as f64, "must be >= 2"));
    }
    let half = (e[0] + e[1]) / 2.0;
    if !(t.abs() <= half) {
        return Err(invalid("t", t, "need |t| <= (p1 + p2) / 2"));
    }
    let mut v = Vec::with_capacity(e.len());
    v.push(half + t);
    v.push(half - t);
    v.extend_from_slice(&e[2..]);
    ParamVector::new(v)
}

/// `d/dt C_Q b_{p_t}(x)` on `0..=n max(Q)`:
/// `-2t sum_y b(y) (Q^{*(y+2)}(x) - 2 Q^{*(y+1)}(x) + Q^{*y}(x))` with `b` the
/// Bernoulli sum of `(p3, ..., pn)`.
pub fn bernoulli_t_derivative(p: &ParamVector, t: f64, q: &CompoundingDist) -> Result<Vec<f64>> {
    params_at_t(p, t)?;
    let n = p.n();
    let rest = bernoulli_sum_of(&p.entries()[2..]);
    // second difference of b, shifted so that index y multiplies Q^{*y}
    let weights: Vec<f64> = (0..=n)
        .map(|y| {
            let b = |k: isize| if k < 0 { 0.0 } else { rest.get(k as usize) };
            let y = y as isize;
            -2.0 * t * (b(y - 2) - 2.0 * b(y - 1) + b(y))
        })
        .collect();
    Ok(mixture_dense(0, &weights, q, n * q.max_index()))
}

struct TEnergy<'a> {
    p: &'a ParamVector,
    q: &'a CompoundingDist,
    log_ref: Vec<Option<f64>>,
}

impl TEnergy<'_> {
    fn value(&self, t: f64) -> Result<(f64, f64)> {
        let pt = params_at_t(self.p, t)?;
        Ok(cross_energy(
            &compound_bernoulli_sum_of(pt.entries(), self.q),
            &self.log_ref,
        ))
    }

    fn derivative(&self, t: f64) -> Result<f64> {
        let d = bernoulli_t_derivative(self.p, t, self.q)?;
        Ok(-d
            .iter()
            .enumerate()
            .filter_map(|(x, &dx)| self.log_ref.get(x).copied().flatten().map(|l| dx * l))
            .sum::<f64>())
    }
}

fn t_energy<'a>(p: &'a ParamVector, q: &'a CompoundingDist) -> Result<TEnergy<'a>> {
    let e = p.entries();
    if e.len() < 2 {
        return Err(invalid("n", e.len() as f64, "must be >= 2"));
    }
    if e[0] < e[1] {
        return Err(invalid("p1", e[0], "need p1 >= p2"));
    }
    let n = p.n();
    let lambda = p.sum();
    if lambda <= 0.0 {
        return Err(Error::ZeroMean);
    }
    let reference = compound_binomial(n, (lambda / n as f64).min(1.0), q)?;
    let range = n * q.max_index();
    Ok(TEnergy {
        p,
        q,
        log_ref: log_table(&reference, range),
    })
}

/// Default `t` grid: [`DEFAULT_GRID_POINTS`] points on `[0, (p1 - p2) / 2]`,
/// or just `{0}` when `p1 = p2`.
pub fn default_t_grid(p: &ParamVector) -> Vec<f64> {
    let e = p.entries();
    let end = if e.len() >= 2 {
        (e[0] - e[1]) / 2.0
    } else {
        0.0
    };
    if end > 0.0 {
        uniform_grid(0.0, end, DEFAULT_GRID_POINTS)
    } else {
        vec![0.0]
    }
}

/// `E(t) = -sum_x C_Q b_{p_t}(x) ln CBin(n, lambda/n, Q)(x)` along `t_grid`.
pub fn energy_t_curve(p: &ParamVector, q: &CompoundingDist, t_grid: &[f64]) -> Result<EnergyCurve> {
    let ctx = t_energy(p, q)?;
    let e = p.entries();
    let end = (e[0] - e[1]) / 2.0;
    check_grid(t_grid, 0.0, end, "t")?;
    let n = t_grid.len();
    let rows: Vec<(f64, f64, Option<f64>, Option<f64>)> = t_grid
        .par_iter()
        .enumerate()
        .map(|(i, &t)| -> Result<_> {
            let (v, clipped) = ctx.value(t)?;
            let (fd, an) = if i > 0 && i + 1 < n {
                let up = ctx.value(t + FD_STEP)?.0;
                let down = ctx.value(t - FD_STEP)?.0;
                (
                    Some((up - down) / (2.0 * FD_STEP)),
                    Some(ctx.derivative(t)?),
                )
            } else {
                (None, None)
            };
            Ok((v, clipped, fd, an))
        })
        .collect::<Result<_>>()?;
    Ok(EnergyCurve {
        grid: t_grid.to_vec(),
        values: rows.iter().map(|r| r.0).collect(),
        clipped_mass: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        derivative_estimates: rows.iter().map(|r| r.2).collect(),
        analytic_derivatives: rows.iter().map(|r| r.3).collect(),
    })
}

/// `E'(t) = -sum_x d/dt C_Q b_{p_t}(x) ln CBin(n, lambda/n, Q)(x)`.
pub fn energy_t_derivative_analytic(p: &ParamVector, q: &CompoundingDist, t: f64) -> Result<f64> {
    t_energy(p, q)?.derivative(t)
}

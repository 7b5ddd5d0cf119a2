//! Log-concavity and ultra-log-concavity predicates, closed-form thresholds
//! for compound Bernoulli and compound Poisson log-concavity, and the exact
//! binomial sums behind the two-point compound Poisson result.
//!
//! All predicates return a [`ConcavityVerdict`] rather than an error: a
//! failed inequality is a finding, not a malfunction.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::dist::{convolution_power_capped, CompoundingDist, Pmf};
use crate::error::{invalid, Error, Result};

/// Default relative tolerance; the absolute slack is `tol * max(p)^2`.
pub const DEFAULT_LC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// The significant support is not an interval.
    SupportGap,
    /// The defining quadratic inequality fails.
    Inequality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavityVerdict {
    pub holds: bool,
    pub first_violation: Option<usize>,
    pub violation_kind: Option<ViolationKind>,
    /// Minimum of the defining quadratic difference over the checked points
    /// (0 when there is nothing to check).
    pub margin: f64,
    /// Inclusive range of support points that took part in the check.
    pub checked_support: Option<(usize, usize)>,
}

impl ConcavityVerdict {
    fn vacuous(range: Option<(usize, usize)>) -> Self {
        ConcavityVerdict {
            holds: true,
            first_violation: None,
            violation_kind: None,
            margin: 0.0,
            checked_support: range,
        }
    }
}

/// Log-concavity with the default noise floor `10 * tail_bound`.
pub fn is_log_concave(p: &Pmf, tol: f64) -> ConcavityVerdict {
    is_log_concave_with_floor(p, tol, 10.0 * p.tail_bound())
}

/// Ultra-log-concavity with the default noise floor `10 * tail_bound`.
pub fn is_ultra_log_concave(p: &Pmf, tol: f64) -> ConcavityVerdict {
    is_ultra_log_concave_with_floor(p, tol, 10.0 * p.tail_bound())
}

/// Entries at or below `floor` may be truncation noise; they are treated as
/// possibly zero and excluded from the check.
pub fn is_log_concave_with_floor(p: &Pmf, tol: f64, floor: f64) -> ConcavityVerdict {
    check_quadratic(
        p,
        tol,
        floor,
        |_x, prev, cur, next| cur * cur - next * prev,
        |_| 1.0,
    )
}

pub fn is_ultra_log_concave_with_floor(p: &Pmf, tol: f64, floor: f64) -> ConcavityVerdict {
    let verdict = check_quadratic(
        p,
        tol,
        floor,
        |x, prev, cur, next| x as f64 * cur * cur - (x + 1) as f64 * next * prev,
        |x| (x + 1) as f64,
    );
    debug_assert!(
        !verdict.holds || is_log_concave_with_floor(p, tol, floor).holds,
        "ultra-log-concave but not log-concave"
    );
    verdict
}

/// Pointwise log-concavity: `p(x)^2 >= (1 - rel_tol) p(x-1) p(x+1)` at every
/// interior point above `floor`. Unlike [`is_log_concave`] the slack scales
/// with each point, so deep tails are checked as strictly as the bulk.
pub fn is_log_concave_relative(p: &Pmf, rel_tol: f64, floor: f64) -> ConcavityVerdict {
    let significant = |x: usize| p.get(x) > floor;
    let Some(lo) = (p.offset()..=p.max_index()).find(|&x| significant(x)) else {
        return ConcavityVerdict::vacuous(None);
    };
    let hi = (lo..=p.max_index())
        .take_while(|&x| significant(x))
        .last()
        .unwrap_or(lo);
    if let Some(gap) = (hi + 1..=p.max_index()).find(|&x| significant(x)) {
        return ConcavityVerdict {
            holds: false,
            first_violation: Some(hi + 1),
            violation_kind: Some(ViolationKind::SupportGap),
            margin: 0.0,
            checked_support: Some((lo, gap)),
        };
    }
    let mut margin = f64::INFINITY;
    let mut first = None;
    for x in (lo + 1)..hi {
        let (a, b, c) = (p.get(x - 1), p.get(x), p.get(x + 1));
        // relative margin 1 - a c / b^2
        let m = 1.0 - (a / b) * (c / b);
        margin = margin.min(m);
        if first.is_none() && m < -rel_tol {
            first = Some(x);
        }
    }
    ConcavityVerdict {
        holds: first.is_none(),
        first_violation: first,
        violation_kind: first.map(|_| ViolationKind::Inequality),
        margin: if margin.is_finite() { margin } else { 0.0 },
        checked_support: Some((lo, hi)),
    }
}

fn check_quadratic(
    p: &Pmf,
    tol: f64,
    floor: f64,
    diff: impl Fn(usize, f64, f64, f64) -> f64,
    weight: impl Fn(usize) -> f64,
) -> ConcavityVerdict {
    let significant = |x: usize| p.get(x) > floor;
    let Some(lo) = (p.offset()..=p.max_index()).find(|&x| significant(x)) else {
        return ConcavityVerdict::vacuous(None);
    };
    let hi = (p.offset()..=p.max_index())
        .rev()
        .find(|&x| significant(x))
        .unwrap_or(lo);
    let range = Some((lo, hi));
    if let Some(gap) = (lo..=hi).find(|&x| !significant(x)) {
        return ConcavityVerdict {
            holds: false,
            first_violation: Some(gap),
            violation_kind: Some(ViolationKind::SupportGap),
            margin: 0.0,
            checked_support: range,
        };
    }
    let scale = tol * p.max_prob().powi(2);
    let mut margin = f64::INFINITY;
    let mut first = None;
    for x in (lo + 1)..hi {
        let d = diff(x, p.get(x - 1), p.get(x), p.get(x + 1));
        margin = margin.min(d);
        if first.is_none() && d < -scale * weight(x) {
            first = Some(x);
        }
    }
    if !margin.is_finite() {
        margin = 0.0;
    }
    ConcavityVerdict {
        holds: first.is_none(),
        first_violation: first,
        violation_kind: first.map(|_| ViolationKind::Inequality),
        margin,
        checked_support: range,
    }
}

/// `CBern(p, Q)` is log-concave exactly when `p >= 1 / (1 + Q(1)^2 / Q(2))`,
/// for log-concave `Q`. Returns 0 when `Q(2) = 0`.
pub fn cbern_lc_threshold(q: &CompoundingDist) -> f64 {
    let (q1, q2) = (q.get(1), q.get(2));
    if q2 == 0.0 {
        0.0
    } else {
        1.0 / (1.0 + q1 * q1 / q2)
    }
}

/// Necessary rate for `CPo(lambda, Q)` to be log-concave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaThreshold {
    /// `2 Q(2) / Q(1)^2`, or `+inf` when `Q(1) = 0`.
    pub value: f64,
    /// `Q(1) = 0`: the compound Poisson law is never log-concave.
    pub never_log_concave: bool,
}

pub fn cpo_necessary_lambda(q: &CompoundingDist) -> LambdaThreshold {
    let (q1, q2) = (q.get(1), q.get(2));
    if q1 == 0.0 {
        LambdaThreshold {
            value: f64::INFINITY,
            never_log_concave: true,
        }
    } else {
        LambdaThreshold {
            value: 2.0 * q2 / (q1 * q1),
            never_log_concave: false,
        }
    }
}

/// Necessary condition for `C_Q P` to be log-concave:
/// `(P(1)^2 - P(0) P(2)) / (P(0) P(1)) >= Q(2) / Q(1)^2`.
///
/// Equality is accepted up to a relative `1e-12`.
pub fn nec2_check(p: &Pmf, q: &CompoundingDist) -> Result<bool> {
    let (p0, p1, p2) = (p.get(0), p.get(1), p.get(2));
    if p0 == 0.0 || p1 == 0.0 {
        return Err(Error::ZeroDenominator("P(0) P(1)"));
    }
    let (q1, q2) = (q.get(1), q.get(2));
    if q1 == 0.0 {
        // C_Q P(1) = 0 < C_Q P(0): the support cannot be an interval
        return Ok(false);
    }
    let lhs = (p1 * p1 - p0 * p2) / (p0 * p1);
    let rhs = q2 / (q1 * q1);
    Ok(lhs >= rhs - 1e-12 * rhs.abs().max(1.0))
}

/// The three explicit rate thresholds above which the compound binomial or
/// compound Poisson law is known to be log-concave.
#[derive(Debug, Clone, Copy)]
pub enum ThresholdCase<'a> {
    /// `lambda >= n Q(2) / (Q(1)^2 + Q(2))` for `CBin(n, lambda / n, Q)`.
    GeneralBinomial { n: usize, q: &'a CompoundingDist },
    /// `Q(1) = q1`, `Q(2) = 1 - q1`: `lambda >= 2 (1 - q1) / q1^2`.
    TwoPoint { q1: f64 },
    /// Geometric `Q(x) = alpha (1 - alpha)^(x-1)`: `lambda >= 2 (1 - alpha) / alpha`.
    Geometric { alpha: f64 },
}

pub fn lambda_threshold(case: ThresholdCase<'_>) -> Result<f64> {
    match case {
        ThresholdCase::GeneralBinomial { n, q } => {
            if n == 0 {
                return Err(invalid("n", 0.0, "must be >= 1"));
            }
            let (q1, q2) = (q.get(1), q.get(2));
            let denom = q1 * q1 + q2;
            if denom == 0.0 {
                return Err(Error::ZeroDenominator("Q(1)^2 + Q(2)"));
            }
            Ok(n as f64 * q2 / denom)
        }
        ThresholdCase::TwoPoint { q1 } => {
            if !(q1 > 0.0 && q1 <= 1.0) {
                return Err(invalid("q1", q1, "must lie in (0, 1]"));
            }
            Ok(2.0 * (1.0 - q1) / (q1 * q1))
        }
        ThresholdCase::Geometric { alpha } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(invalid("alpha", alpha, "must lie in (0, 1)"));
            }
            Ok(2.0 * (1.0 - alpha) / alpha)
        }
    }
}

/// Checks `Q^{*m}(x+1) Q^{*n}(x) - Q^{*m}(x) Q^{*n}(x+1) >= -tol` for
/// `x <= x_max`, which holds for log-concave `Q` whenever `m >= n`.
pub fn keilson_check(
    q: &CompoundingDist,
    m: usize,
    n: usize,
    x_max: usize,
) -> Result<ConcavityVerdict> {
    if m < n {
        return Err(invalid("m", m as f64, "must be >= n"));
    }
    let cap = Some(x_max + 1);
    let qm = convolution_power_capped(q, m, cap);
    let qn = convolution_power_capped(q, n, cap);
    let scale = DEFAULT_LC_TOL * (qm.max_prob() * qn.max_prob());
    let mut margin = f64::INFINITY;
    let mut first = None;
    for x in 0..=x_max {
        let d = qm.get(x + 1) * qn.get(x) - qm.get(x) * qn.get(x + 1);
        margin = margin.min(d);
        if first.is_none() && d < -scale {
            first = Some(x);
        }
    }
    Ok(ConcavityVerdict {
        holds: first.is_none(),
        first_violation: first,
        violation_kind: first.map(|_| ViolationKind::Inequality),
        margin,
        checked_support: Some((0, x_max)),
    })
}

/// Which parity case of the binomial-difference sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SumParity {
    /// `r = 2t`, summing `y` over `t - s ..= t + s`.
    Even,
    /// `r = 2t + 1` with `x != r`, summing `y` over `t - s ..= t + 1 + s`.
    Odd,
}

/// `C(n, k)`, zero when `n < 0`, `k < 0` or `k > n`.
pub fn binomial_coefficient(n: i64, k: i64) -> BigInt {
    if n < 0 || k < 0 || k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `sum_y [C(2x-r, x-y) C(2r-2x, 2y-x) - C(2x-r, x+1-y) C(2r-2x, 2y-x-1)]`
/// over the parity-dependent window around `t = floor(r / 2)`, in exact
/// integer arithmetic.
pub fn binomial_difference_sum(parity: SumParity, r: u32, x: u32, s: u32) -> Result<BigInt> {
    let t = r / 2;
    let (lo, hi) = match parity {
        SumParity::Even => {
            if r % 2 != 0 {
                return Err(invalid("r", r as f64, "even case needs r = 2t"));
            }
            if s > t {
                return Err(invalid("s", s as f64, "need 0 <= s <= t"));
            }
            (t as i64 - s as i64, (t + s) as i64)
        }
        SumParity::Odd => {
            if r % 2 != 1 {
                return Err(invalid("r", r as f64, "odd case needs r = 2t + 1"));
            }
            if x == r {
                return Err(invalid("x", x as f64, "odd case needs x != r"));
            }
            if s > t {
                return Err(invalid("s", s as f64, "need 0 <= s <= t"));
            }
            (t as i64 - s as i64, (t + 1 + s) as i64)
        }
    };
    let (r, x) = (r as i64, x as i64);
    let (a, b) = (2 * x - r, 2 * r - 2 * x);
    let mut total = BigInt::zero();
    for y in lo..=hi {
        total += binomial_coefficient(a, x - y) * binomial_coefficient(b, 2 * y - x);
        total -= binomial_coefficient(a, x + 1 - y) * binomial_coefficient(b, 2 * y - x - 1);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compound::{compound, compound_bernoulli, compound_poisson};
    use crate::dist::{bernoulli_sum_pmf, convolve, make_pmf, poisson_pmf, Normalization};
    use crate::random::{random_lc_pmf, random_ulc_pmf, seeded};

    fn geometric_pmf(alpha: f64) -> Pmf {
        CompoundingDist::geometric(alpha, 1e-15).unwrap().into_pmf()
    }

    #[test]
    fn poisson_is_log_concave_and_ulc() {
        for lambda in [0.3, 1.0, 6.5] {
            let p = poisson_pmf(lambda, 1e-12).unwrap();
            assert!(is_log_concave(&p, DEFAULT_LC_TOL).holds);
            let u = is_ultra_log_concave(&p, DEFAULT_LC_TOL);
            assert!(u.holds);
            assert!(u.margin.abs() < 1e-15, "margin {}", u.margin);
        }
    }

    #[test]
    fn geometric_is_log_concave_with_zero_margin() {
        let v = is_log_concave(&geometric_pmf(0.3), DEFAULT_LC_TOL);
        assert!(v.holds);
        assert!(v.margin.abs() < 1e-15);
    }

    #[test]
    fn geometric_half_is_not_ulc() {
        // x = 2: 2 Q(2)^2 = 1/8 < 3 Q(3) Q(1) = 3/16
        let v = is_ultra_log_concave(&geometric_pmf(0.5), DEFAULT_LC_TOL);
        assert!(!v.holds);
        assert_eq!(v.first_violation, Some(2));
        assert!((v.margin - (0.125 - 0.1875)).abs() < 1e-15);
    }

    #[test]
    fn support_gap_fails() {
        let p = make_pmf(0, &[0.5, 0.0, 0.5], 0.0, Normalization::Exact).unwrap();
        let v = is_log_concave(&p, DEFAULT_LC_TOL);
        assert!(!v.holds);
        assert_eq!(v.violation_kind, Some(ViolationKind::SupportGap));
        assert_eq!(v.first_violation, Some(1));
    }

    #[test]
    fn bernoulli_sums_are_ulc() {
        let mut rng = seeded(17);
        for n in 1..8 {
            let v = crate::random::random_param_vector(&mut rng, n, 0.4 * n as f64).unwrap();
            assert!(is_ultra_log_concave(&bernoulli_sum_pmf(&v), DEFAULT_LC_TOL).holds);
        }
    }

    #[test]
    fn ulc_implies_lc_and_convolution_keeps_lc() {
        let mut rng = seeded(5);
        for _ in 0..100 {
            let u = random_ulc_pmf(&mut rng, 12);
            assert!(is_ultra_log_concave(&u, DEFAULT_LC_TOL).holds);
            assert!(is_log_concave(&u, DEFAULT_LC_TOL).holds);
            let a = random_lc_pmf(&mut rng, 10);
            let b = random_lc_pmf(&mut rng, 10);
            assert!(is_log_concave(&convolve(&a, &b), DEFAULT_LC_TOL).holds);
        }
    }

    #[test]
    fn relative_check_sees_deep_tails() {
        // a kink at 1e-40 is invisible to the absolute slack but not to the relative one
        let p = make_pmf(
            0,
            &[0.6, 0.4, 1e-40, 1e-41, 1e-41],
            0.0,
            Normalization::Rescale,
        )
        .unwrap();
        assert!(is_log_concave(&p, DEFAULT_LC_TOL).holds);
        let v = is_log_concave_relative(&p, 1e-9, 0.0);
        assert!(!v.holds);
        assert_eq!(v.first_violation, Some(2));
        let po = poisson_pmf(3.0, 1e-200).unwrap();
        assert!(is_log_concave_relative(&po, 1e-9, 0.0).holds);
    }

    #[test]
    fn cbern_thresholds() {
        let u = CompoundingDist::uniform(1, 2).unwrap();
        assert!((cbern_lc_threshold(&u) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(cbern_lc_threshold(&CompoundingDist::point(1).unwrap()), 0.0);
        let g = CompoundingDist::geometric(0.5, 1e-12).unwrap();
        assert!((cbern_lc_threshold(&g) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cbern_boundary_has_zero_margin_at_one() {
        let q = CompoundingDist::uniform(1, 2).unwrap();
        let p_star = cbern_lc_threshold(&q);
        let c = compound_bernoulli(p_star, &q).unwrap();
        let d1 = c.get(1).powi(2) - c.get(0) * c.get(2);
        assert!(d1.abs() < 1e-15);
        assert!(is_log_concave(&c, DEFAULT_LC_TOL).holds);
    }

    #[test]
    fn cpo_thresholds() {
        let u = CompoundingDist::uniform(1, 2).unwrap();
        assert_eq!(cpo_necessary_lambda(&u).value, 4.0);
        assert_eq!(
            cpo_necessary_lambda(&CompoundingDist::point(1).unwrap()).value,
            0.0
        );
        let no_one = CompoundingDist::uniform(2, 3).unwrap();
        let t = cpo_necessary_lambda(&no_one);
        assert!(t.value.is_infinite() && t.never_log_concave);
        let c = compound_poisson(3.0, &no_one, 1e-12).unwrap();
        assert!(!is_log_concave(&c, DEFAULT_LC_TOL).holds);
    }

    #[test]
    fn nec2_examples() {
        let u = CompoundingDist::uniform(1, 2).unwrap();
        // Poisson input: left side is lambda / 2, right side Q(2)/Q(1)^2 = 2
        assert!(nec2_check(&poisson_pmf(4.0, 1e-12).unwrap(), &u).unwrap());
        assert!(!nec2_check(&poisson_pmf(1.0, 1e-12).unwrap(), &u).unwrap());
        let d1 = CompoundingDist::point(1).unwrap();
        let mut rng = seeded(2);
        for _ in 0..20 {
            let p = random_lc_pmf(&mut rng, 8);
            if p.len() >= 2 {
                assert!(nec2_check(&p, &d1).unwrap());
            }
        }
        assert!(nec2_check(&Pmf::point_mass(1), &u).is_err());
    }

    #[test]
    fn nec2_is_necessary() {
        let mut rng = seeded(8);
        let q = CompoundingDist::geometric(0.35, 1e-14).unwrap();
        for _ in 0..100 {
            let p = random_lc_pmf(&mut rng, 8);
            if p.len() < 3 {
                continue;
            }
            let lc = is_log_concave(&compound(&p, &q), DEFAULT_LC_TOL).holds;
            if lc {
                assert!(nec2_check(&p, &q).unwrap());
            }
        }
    }

    #[test]
    fn lambda_thresholds() {
        let u = CompoundingDist::uniform(1, 2).unwrap();
        assert_eq!(
            lambda_threshold(ThresholdCase::TwoPoint { q1: 0.5 }).unwrap(),
            4.0
        );
        assert_eq!(
            lambda_threshold(ThresholdCase::Geometric { alpha: 0.5 }).unwrap(),
            2.0
        );
        let g = lambda_threshold(ThresholdCase::GeneralBinomial { n: 2, q: &u }).unwrap();
        assert!((g - 4.0 / 3.0).abs() < 1e-15);
        assert!(lambda_threshold(ThresholdCase::Geometric { alpha: 1.0 }).is_err());
        assert!(lambda_threshold(ThresholdCase::TwoPoint { q1: 0.0 }).is_err());
    }

    #[test]
    fn keilson_examples() {
        let d1 = CompoundingDist::point(1).unwrap();
        assert!(keilson_check(&d1, 2, 1, 6).unwrap().holds);
        let u = CompoundingDist::uniform(1, 2).unwrap();
        assert!(keilson_check(&u, 3, 2, 10).unwrap().holds);
        let g = CompoundingDist::geometric(0.3, 1e-14).unwrap();
        assert!(keilson_check(&g, 4, 2, 30).unwrap().holds);
        assert!(keilson_check(&u, 1, 2, 5).is_err());
    }

    #[test]
    fn binomial_coefficient_convention() {
        assert_eq!(binomial_coefficient(5, 2), BigInt::from(10));
        assert_eq!(binomial_coefficient(5, 6), BigInt::zero());
        assert_eq!(binomial_coefficient(-2, 0), BigInt::zero());
        assert_eq!(binomial_coefficient(4, -1), BigInt::zero());
        assert_eq!(binomial_coefficient(0, 0), BigInt::one());
    }

    #[test]
    fn binomial_difference_examples() {
        // direct evaluation, r = 2, x = 2, s = 0: y = 1 gives C(2,1) C(0,0) - C(2,2) C(0,-1) = 2
        assert_eq!(
            binomial_difference_sum(SumParity::Even, 2, 2, 0).unwrap(),
            BigInt::from(2)
        );
        // r = 3, x = 4: 2r - 2x < 0 so every term vanishes
        assert_eq!(
            binomial_difference_sum(SumParity::Odd, 3, 4, 1).unwrap(),
            BigInt::zero()
        );
        assert!(binomial_difference_sum(SumParity::Even, 3, 2, 0).is_err());
        assert!(binomial_difference_sum(SumParity::Odd, 3, 3, 0).is_err());
        assert!(binomial_difference_sum(SumParity::Even, 4, 3, 3).is_err());
    }
}

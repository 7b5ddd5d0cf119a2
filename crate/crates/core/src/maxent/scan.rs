use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compound::compound_poisson_capped;
use crate::concavity::{
    cpo_necessary_lambda, is_log_concave, is_log_concave_relative, DEFAULT_LC_TOL,
};
use crate::dist::{CompoundingDist, Pmf};
use crate::error::{invalid, Error, Result};
use crate::random::{lc_compounding_with_support, seeded};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "family")]
pub enum QFamily {
    /// `Q(1) = q1`, `Q(2) = 1 - q1`.
    TwoPoint {
        q1_values: Vec<f64>,
    },
    /// `Q(x) = alpha (1 - alpha)^(x-1)`, stored exactly up to the support cap.
    Geometric {
        alphas: Vec<f64>,
    },
    /// Seeded random log-concave laws on `{1, 2, 3}`.
    ThreePoint {
        count: usize,
    },
    Custom {
        members: Vec<CompoundingDist>,
    },
}

impl QFamily {
    fn name(&self) -> &'static str {
        match self {
            QFamily::TwoPoint { .. } => "two-point",
            QFamily::Geometric { .. } => "geometric",
            QFamily::ThreePoint { .. } => "three-point",
            QFamily::Custom { .. } => "custom",
        }
    }

    /// Families where log-concavity above the threshold is a theorem.
    fn theorem_backed(&self) -> bool {
        matches!(self, QFamily::TwoPoint { .. } | QFamily::Geometric { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "values")]
pub enum LambdaGrid {
    Absolute(Vec<f64>),
    /// Multiples of `2 Q(2) / Q(1)^2` for each member.
    RelativeToThreshold(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub family: QFamily,
    pub lambdas: LambdaGrid,
    pub support_cap: usize,
    pub lambda_max: f64,
    /// Relative slack of the pointwise log-concavity test.
    pub rel_tol: f64,
    /// Values at or below this are too close to underflow to test.
    pub floor: f64,
    pub seed: u64,
}

impl ScanConfig {
    pub fn new(family: QFamily) -> Self {
        ScanConfig {
            family,
            lambdas: LambdaGrid::RelativeToThreshold(vec![
                1.0, 1.0001, 1.001, 1.01, 1.1, 1.25, 1.5, 2.0, 3.0, 5.0,
            ]),
            support_cap: 200,
            lambda_max: 20.0,
            rel_tol: 1e-9,
            floor: 1e-250,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanMember {
    pub label: String,
    pub q: Pmf,
    pub threshold: f64,
    pub lambdas_checked: Vec<f64>,
    /// Rates outside `(threshold, lambda_max]`.
    pub lambdas_skipped: Vec<f64>,
    pub violations: usize,
    /// Smallest relative margin `1 - C(x-1) C(x+1) / C(x)^2` seen.
    pub min_margin: f64,
    /// Largest support point tested at any rate.
    pub checked_up_to: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanWitness {
    pub member: usize,
    pub label: String,
    pub lambda: f64,
    pub x: usize,
    pub margin: f64,
}

/// `C_lambda(n) / C_lambda(n+1)` along the member's checked rates, which
/// should decrease in `lambda` for log-concave `Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub member: usize,
    pub n: usize,
    pub lambdas: Vec<f64>,
    pub ratios: Vec<f64>,
    pub decreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub family: String,
    pub theorem_backed: bool,
    pub support_cap: usize,
    pub lambda_max: f64,
    pub seed: u64,
    pub checks: usize,
    pub members: Vec<ScanMember>,
    pub violations: Vec<ScanWitness>,
    /// Violation with the smallest rate, then smallest `x`.
    pub minimal_witness: Option<ScanWitness>,
    pub ratio_rows: Vec<RatioRow>,
    pub ratio_violations: usize,
    /// Points above the cap are never examined.
    pub unexplored_from: usize,
    /// Largest compound Poisson mass lying beyond the cap.
    pub max_mass_beyond_cap: f64,
}

/// Number of small `n` covered by the ratio scan.
const RATIO_POINTS: usize = 20;

/// Geometric law stored with enough terms to be exact on `{1, ..., cap}`.
pub fn geometric_exact_to(alpha: f64, cap: usize) -> Result<CompoundingDist> {
    let ratio = 1.0 - alpha;
    let eps = ratio.powi(cap as i32 + 2).max(1e-300);
    CompoundingDist::geometric(alpha, eps.min(0.5))
}

fn members(cfg: &ScanConfig) -> Result<Vec<(String, CompoundingDist)>> {
    let out = match &cfg.family {
        QFamily::TwoPoint { q1_values } => q1_values
            .iter()
            .map(|&q1| {
                Ok((
                    format!("two-point q1={q1}"),
                    CompoundingDist::two_point(q1)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?,
        QFamily::Geometric { alphas } => alphas
            .iter()
            .map(|&a| {
                Ok((
                    format!("geometric alpha={a}"),
                    geometric_exact_to(a, cfg.support_cap)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?,
        QFamily::ThreePoint { count } => {
            let mut rng = seeded(cfg.seed);
            (0..*count)
                .map(|i| {
                    (
                        format!("three-point #{i}"),
                        lc_compounding_with_support(&mut rng, 3),
                    )
                })
                .collect()
        }
        QFamily::Custom { members } => members
            .iter()
            .enumerate()
            .map(|(i, q)| (format!("custom #{i}"), q.clone()))
            .collect(),
    };
    for (label, q) in &out {
        if !is_log_concave(q, DEFAULT_LC_TOL).holds {
            return Err(Error::NotLogConcave(label.clone()));
        }
    }
    Ok(out)
}

struct Check {
    member: usize,
    lambda: f64,
    values: Pmf,
    first_violation: Option<usize>,
    margin: f64,
    checked_up_to: usize,
}

/// Runs the pointwise log-concavity test on `CPo(lambda, Q)` over
/// `{0, ..., support_cap}` for every member and every rate at or above the
/// member's necessary threshold.
pub fn conjecture_scan(cfg: &ScanConfig) -> Result<ScanReport> {
    if cfg.support_cap < 2 {
        return Err(invalid(
            "support_cap",
            cfg.support_cap as f64,
            "must be >= 2",
        ));
    }
    if !(cfg.rel_tol > 0.0) {
        return Err(invalid("rel_tol", cfg.rel_tol, "must be positive"));
    }
    let members = members(cfg)?;
    let mut summaries = Vec::with_capacity(members.len());
    let mut jobs = Vec::new();
    for (i, (label, q)) in members.iter().enumerate() {
        let threshold = cpo_necessary_lambda(q).value;
        let mut lambdas: Vec<f64> = match &cfg.lambdas {
            LambdaGrid::Absolute(v) => v.clone(),
            LambdaGrid::RelativeToThreshold(m) => m.iter().map(|k| k * threshold).collect(),
        };
        lambdas.sort_by(f64::total_cmp);
        let (checked, skipped): (Vec<f64>, Vec<f64>) = lambdas.into_iter().partition(|&l| {
            l.is_finite() && l > 0.0 && l <= cfg.lambda_max && l >= threshold * (1.0 - 1e-12)
        });
        jobs.extend(checked.iter().map(|&l| (i, l)));
        summaries.push(ScanMember {
            label: label.clone(),
            q: q.pmf().clone(),
            threshold,
            lambdas_checked: checked,
            lambdas_skipped: skipped,
            violations: 0,
            min_margin: f64::INFINITY,
            checked_up_to: 0,
        });
    }

    let checks: Vec<Check> = jobs
        .par_iter()
        .map(|&(member, lambda)| -> Result<Check> {
            let values = compound_poisson_capped(lambda, &members[member].1, cfg.support_cap)?;
            let v = is_log_concave_relative(&values, cfg.rel_tol, cfg.floor);
            Ok(Check {
                member,
                lambda,
                first_violation: v.first_violation,
                margin: v.margin,
                checked_up_to: v.checked_support.map_or(0, |r| r.1),
                values,
            })
        })
        .collect::<Result<_>>()?;

    let mut violations = Vec::new();
    let mut max_beyond: f64 = 0.0;
    for c in &checks {
        let s = &mut summaries[c.member];
        s.min_margin = s.min_margin.min(c.margin);
        s.checked_up_to = s.checked_up_to.max(c.checked_up_to);
        max_beyond = max_beyond.max(c.values.tail_bound());
        if let Some(x) = c.first_violation {
            s.violations += 1;
            violations.push(ScanWitness {
                member: c.member,
                label: s.label.clone(),
                lambda: c.lambda,
                x,
                margin: c.margin,
            });
        }
    }
    let minimal_witness = violations
        .iter()
        .min_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.x.cmp(&b.x)))
        .cloned();

    let mut ratio_rows = Vec::new();
    for (member, s) in summaries.iter_mut().enumerate() {
        if !s.min_margin.is_finite() {
            s.min_margin = 0.0;
        }
        let mine: Vec<&Check> = checks.iter().filter(|c| c.member == member).collect();
        if mine.len() < 2 {
            continue;
        }
        for n in 0..RATIO_POINTS.min(cfg.support_cap) {
            let usable = mine
                .iter()
                .all(|c| c.values.get(n + 1) > cfg.floor && c.values.get(n) > cfg.floor);
            if !usable {
                break;
            }
            let ratios: Vec<f64> = mine
                .iter()
                .map(|c| c.values.get(n) / c.values.get(n + 1))
                .collect();
            let decreasing = ratios.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
            ratio_rows.push(RatioRow {
                member,
                n,
                lambdas: mine.iter().map(|c| c.lambda).collect(),
                ratios,
                decreasing,
            });
        }
    }
    let ratio_violations = ratio_rows.iter().filter(|r| !r.decreasing).count();

    Ok(ScanReport {
        family: cfg.family.name().to_string(),
        theorem_backed: cfg.family.theorem_backed(),
        support_cap: cfg.support_cap,
        lambda_max: cfg.lambda_max,
        seed: cfg.seed,
        checks: checks.len(),
        members: summaries,
        violations,
        minimal_witness,
        ratio_rows,
        ratio_violations,
        unexplored_from: cfg.support_cap + 1,
        max_mass_beyond_cap: max_beyond,
    })
}

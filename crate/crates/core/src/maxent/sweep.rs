use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::compound::{compound, compound_bernoulli_sum_of, compound_binomial, compound_poisson};
use crate::concavity::{is_log_concave, is_ultra_log_concave, DEFAULT_LC_TOL};
use crate::dist::{entropy, tail_entropy_allowance, CompoundingDist, Pmf, DEFAULT_TAIL_EPS};
use crate::error::{invalid, Error, Result};
use crate::random::{random_param_vector, seeded, ulc_perturbation};

/// Smallest entropy excess that counts as a counterexample, before truncation
/// allowances are added.
pub const BASE_MARGIN: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ReferenceMaximal,
    CounterexampleFound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Where the point came from: `lattice`, `random`, `extra`, `reference`,
    /// `ulc-perturbation`.
    pub source: String,
    /// Parameter vector, or the pmf values for perturbation candidates.
    pub params: Vec<f64>,
    /// Entropy of the compound law, in nats.
    pub entropy: f64,
    /// Excess over the reference required to call this point a witness.
    pub margin: f64,
}

/// Which hypotheses of the corresponding maximum-entropy theorem hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conditions {
    pub q_log_concave: bool,
    pub reference_log_concave: bool,
    /// `Q` is stored with a nonzero tail bound, so its true support may be infinite.
    pub q_truncated: bool,
    pub hypotheses_hold: bool,
    pub notes: Vec<String>,
}

impl Conditions {
    fn evaluate(q: &CompoundingDist, reference: &Pmf) -> Self {
        let q_lc = is_log_concave(q, DEFAULT_LC_TOL).holds;
        let ref_lc = is_log_concave(reference, DEFAULT_LC_TOL).holds;
        let truncated = q.tail_bound() > 0.0;
        let mut notes = Vec::new();
        if truncated {
            notes.push(
                "Q is a truncation; a heavy-tail condition on the untruncated Q cannot be checked here"
                    .to_string(),
            );
        }
        Conditions {
            q_log_concave: q_lc,
            reference_log_concave: ref_lc,
            q_truncated: truncated,
            hypotheses_hold: q_lc && ref_lc,
            notes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    /// `binomial` or `poisson`.
    pub kind: String,
    pub grid_description: String,
    pub seed: u64,
    pub lambda: f64,
    pub q: Pmf,
    pub reference_entropy: f64,
    pub best_entropy: f64,
    pub best_point: Vec<f64>,
    pub verdict: Verdict,
    /// Largest witness margin used across all rows.
    pub margin: f64,
    pub witnesses: Vec<SweepPoint>,
    pub conditions: Conditions,
    /// Candidates dropped before evaluation (failed a family filter).
    pub rejected: usize,
    pub rows: Vec<SweepPoint>,
}

impl SweepReport {
    fn assemble(
        kind: &str,
        grid_description: String,
        seed: u64,
        lambda: f64,
        q: &CompoundingDist,
        reference: &Pmf,
        rows: Vec<SweepPoint>,
        rejected: usize,
    ) -> Self {
        let reference_entropy = entropy(reference);
        let witnesses: Vec<SweepPoint> = rows
            .iter()
            .filter(|r| r.entropy > reference_entropy + r.margin)
            .cloned()
            .collect();
        let best = rows.iter().fold(None::<&SweepPoint>, |b, r| match b {
            Some(b) if b.entropy >= r.entropy => Some(b),
            _ => Some(r),
        });
        SweepReport {
            kind: kind.to_string(),
            grid_description,
            seed,
            lambda,
            q: q.pmf().clone(),
            reference_entropy,
            best_entropy: best.map_or(f64::NEG_INFINITY, |b| b.entropy),
            best_point: best.map(|b| b.params.clone()).unwrap_or_default(),
            verdict: if witnesses.is_empty() {
                Verdict::ReferenceMaximal
            } else {
                Verdict::CounterexampleFound
            },
            margin: rows.iter().map(|r| r.margin).fold(0.0, f64::max),
            witnesses,
            conditions: Conditions::evaluate(q, reference),
            rejected,
            rows,
        }
    }

    /// Rows as `source,entropy,params` with parameters joined by `;`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("source,entropy,params\n");
        for r in &self.rows {
            let params: Vec<String> = r.params.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(s, "{},{:e},{}", r.source, r.entropy, params.join(";"));
        }
        s
    }

    /// The verdict agrees with the witness list.
    pub fn is_consistent(&self) -> bool {
        (self.verdict == Verdict::CounterexampleFound) == !self.witnesses.is_empty()
    }
}

/// Lattice points of `{p in [0,1]^n : sum p = lambda}` at `resolution` steps
/// per free coordinate; only small `n` is enumerated.
fn lattice(n: usize, lambda: f64, resolution: usize) -> Vec<Vec<f64>> {
    let r = resolution.max(1) as f64;
    let fits = |v: f64| v > -1e-12 && v < 1.0 + 1e-12;
    let clamp = |v: f64| v.clamp(0.0, 1.0);
    match n {
        1 if fits(lambda) => vec![vec![clamp(lambda)]],
        2 => {
            let lo = (lambda - 1.0).max(0.0);
            let hi = lambda.min(1.0);
            (0..=resolution)
                .map(|i| {
                    let p1 = lo + (hi - lo) * i as f64 / r;
                    vec![clamp(p1), clamp(lambda - p1)]
                })
                .collect()
        }
        3 => {
            let mut out = Vec::new();
            for i in 0..=resolution {
                for j in 0..=resolution {
                    let (p1, p2) = (i as f64 / r, j as f64 / r);
                    let p3 = lambda - p1 - p2;
                    if fits(p3) {
                        out.push(vec![p1, p2, clamp(p3)]);
                    }
                }
            }
            out
        }
        _ => Vec::new(),
    }
}

/// Sweep configuration for the compound binomial maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinomialSweep {
    pub n: usize,
    pub lambda: f64,
    /// Lattice steps per coordinate; the lattice is used for `n <= 3`.
    pub resolution: usize,
    pub random_points: usize,
    pub seed: u64,
    pub extra_points: Vec<Vec<f64>>,
}

impl BinomialSweep {
    pub fn new(n: usize, lambda: f64, resolution: usize) -> Self {
        BinomialSweep {
            n,
            lambda,
            resolution,
            random_points: 200,
            seed: 0,
            extra_points: Vec::new(),
        }
    }
}

fn check_extra(point: &[f64], n: usize, lambda: f64) -> Result<()> {
    if point.len() != n {
        return Err(invalid(
            "extra point length",
            point.len() as f64,
            "must equal n",
        ));
    }
    if point.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(invalid("extra point", lambda, "entries must lie in [0, 1]"));
    }
    let s: f64 = point.iter().sum();
    if (s - lambda).abs() > 1e-9 {
        return Err(invalid("extra point sum", s, "must equal lambda"));
    }
    Ok(())
}

/// Candidate parameter vectors: lattice, seeded random slice points, extras.
fn candidates(
    n: usize,
    lambda: f64,
    resolution: usize,
    random_points: usize,
    extra: &[Vec<f64>],
    rng: &mut crate::random::SweepRng,
) -> Result<Vec<(String, Vec<f64>)>> {
    let mut points: Vec<(String, Vec<f64>)> = lattice(n, lambda, resolution)
        .into_iter()
        .map(|p| ("lattice".to_string(), p))
        .collect();
    for _ in 0..random_points {
        let v = random_param_vector(rng, n, lambda)?;
        points.push(("random".to_string(), v.entries().to_vec()));
    }
    for e in extra {
        check_extra(e, n, lambda)?;
        points.push(("extra".to_string(), e.clone()));
    }
    Ok(points)
}

fn evaluate(
    points: Vec<(String, Vec<f64>)>,
    q: &CompoundingDist,
    reference_tail: f64,
) -> Vec<SweepPoint> {
    points
        .into_par_iter()
        .map(|(source, params)| {
            let c = compound_bernoulli_sum_of(&params, q);
            SweepPoint {
                source,
                margin: BASE_MARGIN
                    + tail_entropy_allowance(reference_tail)
                    + tail_entropy_allowance(c.tail_bound()),
                entropy: entropy(&c),
                params,
            }
        })
        .collect()
}

/// Compares `H(C_Q b_p)` over parameter vectors with sum `lambda` against
/// `H(CBin(n, lambda / n, Q))`.
pub fn verify_binomial_maxent(cfg: &BinomialSweep, q: &CompoundingDist) -> Result<SweepReport> {
    let (n, lambda) = (cfg.n, cfg.lambda);
    if n == 0 {
        return Err(invalid("n", 0.0, "must be >= 1"));
    }
    if !(lambda > 0.0) || lambda > n as f64 {
        return Err(Error::Infeasible(format!(
            "lambda = {lambda} must lie in (0, n = {n}]"
        )));
    }
    let reference = compound_binomial(n, lambda / n as f64, q)?;
    let mut rng = seeded(cfg.seed);
    let points = candidates(
        n,
        lambda,
        cfg.resolution,
        cfg.random_points,
        &cfg.extra_points,
        &mut rng,
    )?;
    let lattice_note = if n <= 3 {
        format!("lattice with {} steps per coordinate", cfg.resolution)
    } else {
        "no lattice (n > 3)".to_string()
    };
    let description = format!(
        "n = {n}, sum = {lambda}; {lattice_note}; {} seeded random points; {} extra points",
        cfg.random_points,
        cfg.extra_points.len()
    );
    let rows = evaluate(points, q, reference.tail_bound());
    Ok(SweepReport::assemble(
        "binomial",
        description,
        cfg.seed,
        lambda,
        q,
        &reference,
        rows,
        0,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "family")]
pub enum PoissonFamily {
    /// Bernoulli sums with `n` from `ceil(lambda)` to `n_max`.
    BernoulliSums {
        n_max: usize,
        resolution: usize,
        random_points: usize,
    },
    /// `Po(lambda)` times `exp(small concave sequence)`, tilted back to mean
    /// `lambda`; candidates that are not ultra-log-concave are rejected.
    UlcPerturbations { count: usize, amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonSweep {
    pub lambda: f64,
    pub family: PoissonFamily,
    pub seed: u64,
    pub tail_eps: f64,
    /// Extra Bernoulli parameter vectors, any length, each summing to `lambda`.
    pub extra_points: Vec<Vec<f64>>,
}

impl PoissonSweep {
    pub fn new(lambda: f64, family: PoissonFamily) -> Self {
        PoissonSweep {
            lambda,
            family,
            seed: 0,
            tail_eps: DEFAULT_TAIL_EPS,
            extra_points: Vec::new(),
        }
    }
}

/// Compares `H(C_Q P)` over a family of ultra-log-concave `P` with mean
/// `lambda` against `H(CPo(lambda, Q))`.
pub fn verify_poisson_maxent(cfg: &PoissonSweep, q: &CompoundingDist) -> Result<SweepReport> {
    let lambda = cfg.lambda;
    let reference = compound_poisson(lambda, q, cfg.tail_eps)?;
    let ref_tail = reference.tail_bound();
    let mut rng = seeded(cfg.seed);
    let mut rejected = 0;
    let (mut rows, description) = match &cfg.family {
        PoissonFamily::BernoulliSums {
            n_max,
            resolution,
            random_points,
        } => {
            let n_min = (lambda.ceil() as usize).max(1);
            if n_min > *n_max {
                return Err(Error::Infeasible(format!(
                    "no Bernoulli sum with n <= {n_max} has mean {lambda}"
                )));
            }
            let mut points = Vec::new();
            for n in n_min..=*n_max {
                points.extend(candidates(
                    n,
                    lambda,
                    *resolution,
                    *random_points,
                    &[],
                    &mut rng,
                )?);
            }
            let d = format!(
                "Bernoulli sums, n = {n_min}..={n_max}, sum = {lambda}; lattice with {resolution} steps for n <= 3; {random_points} seeded random points per n"
            );
            (evaluate(points, q, ref_tail), d)
        }
        PoissonFamily::UlcPerturbations { count, amplitude } => {
            let mut pmfs = Vec::with_capacity(*count);
            for _ in 0..*count {
                let p = ulc_perturbation(&mut rng, lambda, *amplitude, cfg.tail_eps)?;
                if is_ultra_log_concave(&p, DEFAULT_LC_TOL).holds {
                    pmfs.push(p);
                } else {
                    rejected += 1;
                }
            }
            let rows = pmfs
                .into_par_iter()
                .map(|p| {
                    let c = compound(&p, q);
                    SweepPoint {
                        source: "ulc-perturbation".to_string(),
                        params: p.probs().to_vec(),
                        entropy: entropy(&c),
                        margin: BASE_MARGIN
                            + tail_entropy_allowance(ref_tail)
                            + tail_entropy_allowance(c.tail_bound()),
                    }
                })
                .collect();
            let d = format!(
                "{count} seeded perturbations of Po({lambda}) by exp(concave) with step amplitude {amplitude}, tilted to mean {lambda}"
            );
            (rows, d)
        }
    };
    let mut extra = Vec::new();
    for e in &cfg.extra_points {
        check_extra(e, e.len(), lambda)?;
        extra.push(("extra".to_string(), e.clone()));
    }
    rows.extend(evaluate(extra, q, ref_tail));
    Ok(SweepReport::assemble(
        "poisson",
        description,
        cfg.seed,
        lambda,
        q,
        &reference,
        rows,
        rejected,
    ))
}

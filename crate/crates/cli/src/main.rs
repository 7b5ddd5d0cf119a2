mod input;
mod output;

use std::fmt::Write as _;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cpent::compound::{
    compound, compound_bernoulli_sum, compound_binomial, compound_poisson, compound_poisson_capped,
    compound_poisson_panjer,
};
use cpent::concavity::{
    cbern_lc_threshold, cpo_necessary_lambda, is_log_concave_with_floor,
    is_ultra_log_concave_with_floor, lambda_threshold, LambdaThreshold, ThresholdCase,
    DEFAULT_LC_TOL,
};
use cpent::dist::{
    bernoulli_sum_pmf, binomial_pmf, convolve, entropy_checked, poisson_pmf, size_bias, Pmf,
    DEFAULT_TAIL_EPS,
};
use cpent::maxent::{
    chi_counterexample, conjecture_scan, verify_binomial_maxent, verify_poisson_maxent,
    BinomialSweep, LambdaGrid, PoissonFamily, PoissonSweep, QFamily, ScanConfig, Verdict,
    CHI_BOUNDS_BITS,
};
use cpent::semigroup::{
    default_alpha_grid, default_t_grid, energy_curve, energy_t_curve, score_r1,
};
use serde::Serialize;
use serde_json::{json, Value};

use input::{parse_grid, parse_list, parse_params, positive, read_pmf, QSpec};
use output::{emit, render, OutputArgs, Report};

/// Compound distributions, their entropies and log-concavity checks.
#[derive(Debug, Parser)]
#[command(name = "cpent", version)]
struct Cli {
    #[command(flatten)]
    output: OutputArgs,
    /// Seed for every randomised step; recorded in the output.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a pmf, or combine pmf files.
    Pmf(PmfArgs),
    /// Shannon entropy of a pmf file, in nats and bits.
    Entropy(FileArgs),
    /// Log-concavity verdict for a pmf file.
    CheckLc(FileArgs),
    /// Ultra-log-concavity verdict for a pmf file.
    CheckUlc(FileArgs),
    /// Log-concavity thresholds for a compounding law.
    Thresholds(ThresholdArgs),
    /// Score of a count law under compounding.
    Score(ScoreArgs),
    /// Energy along the thinning flow from the compound Poisson law to C_Q P.
    EnergyCurve(EnergyArgs),
    /// Energy along the averaging path of two Bernoulli parameters.
    EnergyTCurve(EnergyTArgs),
    /// Search for a compound Bernoulli sum beating the compound binomial entropy.
    MaxentBinomial(MaxentBinomialArgs),
    /// Search for a compound law beating the compound Poisson entropy.
    MaxentPoisson(MaxentPoissonArgs),
    /// The small-rate counterexample with Q uniform on {1, 2}.
    Chi,
    /// Log-concavity scan of compound Poisson laws above the rate threshold.
    ScanConjecture(ScanArgs),
    /// Compound Poisson by Poisson mixture against the Panjer recursion.
    PanjerDiff(PanjerArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PmfKind {
    Poisson,
    Binomial,
    BernoulliSum,
    Compound,
    CompoundPoisson,
    CompoundBinomial,
    CompoundBernoulliSum,
    Convolve,
    SizeBias,
    Q,
}

#[derive(Debug, Args, Serialize)]
struct PmfArgs {
    #[arg(value_enum)]
    kind: PmfKind,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated Bernoulli parameters.
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    q: Option<String>,
    /// Pmf file; `compound` and `size-bias` take one, `convolve` two.
    #[arg(long)]
    input: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TAIL_EPS)]
    tail_eps: f64,
}

#[derive(Debug, Args, Serialize)]
struct FileArgs {
    /// Pmf file.
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_LC_TOL)]
    tol: f64,
    /// Values at or below this count as zero; defaults to ten times the tail bound.
    #[arg(long)]
    floor: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct ThresholdArgs {
    #[arg(long)]
    q: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TAIL_EPS)]
    tail_eps: f64,
}

#[derive(Debug, Args, Serialize)]
struct ScoreArgs {
    /// Pmf file for the count law.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    q: String,
    /// Allowed rise between consecutive scores.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_TAIL_EPS)]
    tail_eps: f64,
}

#[derive(Debug, Args, Serialize)]
struct EnergyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    q: String,
    /// `LO:HI:POINTS` or a comma list in [0, 1]; 41 points by default.
    #[arg(long)]
    alpha_grid: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TAIL_EPS)]
    tail_eps: f64,
}

#[derive(Debug, Args, Serialize)]
struct EnergyTArgs {
    /// Comma-separated parameters with p1 >= p2.
    #[arg(long)]
    p: String,
    #[arg(long)]
    q: String,
    /// `LO:HI:POINTS` or a comma list in [0, (p1 - p2) / 2].
    #[arg(long)]
    t_grid: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TAIL_EPS)]
    tail_eps: f64,
}

#[derive(Debug, Args, Serialize)]
struct MaxentBinomialArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value = "uniform12")]
    q: String,
    /// Lattice steps per coordinate (n <= 3 only).
    #[arg(long, default_value_t = 100)]
    resolution: usize,
    #[arg(long, default_value_t = 200)]
    random_points: usize,
    /// Extra comma-separated parameter vector; repeatable.
    #[arg(long)]
    extra: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_TAIL_EPS)]
    tail_eps: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PoissonFamilyArg {
    BernoulliSums,
    UlcPerturbations,
}

#[derive(Debug, Args, Serialize)]
struct MaxentPoissonArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value = "uniform12")]
    q: String,
    #[arg(long, value_enum, default_value = "bernoulli-sums")]
    family: PoissonFamilyArg,
    /// Largest Bernoulli sum length.
    #[arg(long, default_value_t = 6)]
    nmax: usize,
    #[arg(long, default_value_t = 40)]
    resolution: usize,
    #[arg(long, default_value_t = 60)]
    random_points: usize,
    /// Number of perturbations.
    #[arg(long, default_value_t = 200)]
    count: usize,
    #[arg(long, default_value_t = 0.3)]
    amplitude: f64,
    #[arg(long)]
    extra: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_TAIL_EPS)]
    tail_eps: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ScanFamilyArg {
    TwoPoint,
    Geometric,
    ThreePoint,
}

#[derive(Debug, Args, Serialize)]
struct ScanArgs {
    #[arg(long, value_enum)]
    family: ScanFamilyArg,
    /// Q(1) values or geometric parameters; nine evenly spaced by default.
    #[arg(long)]
    values: Option<String>,
    /// Number of random three-point members.
    #[arg(long, default_value_t = 20)]
    count: usize,
    /// Rates as multiples of each member's threshold.
    #[arg(long, conflicts_with = "lambdas")]
    multipliers: Option<String>,
    /// Absolute rates.
    #[arg(long)]
    lambdas: Option<String>,
    #[arg(long, default_value_t = 200)]
    support_cap: usize,
    #[arg(long, default_value_t = 20.0)]
    lambda_max: f64,
    /// Relative slack of the pointwise test.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Debug, Args, Serialize)]
struct PanjerArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    q: String,
    #[arg(long, default_value_t = 100)]
    nmax: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_TAIL_EPS)]
    tail_eps: f64,
}

fn need<T>(v: Option<T>, flag: &str, kind: &str) -> Result<T> {
    v.with_context(|| format!("`{kind}` needs --{flag}"))
}

fn pmf_csv(p: &Pmf) -> String {
    let mut s = String::from("x,prob\n");
    for (x, v) in p.iter() {
        let _ = writeln!(s, "{x},{v:e}");
    }
    s
}

fn pmf_report(p: Pmf) -> Result<Report> {
    let csv = pmf_csv(&p);
    Ok(Report::new(&p, true)?.with_csv(csv))
}

fn run_pmf(a: &PmfArgs) -> Result<Report> {
    let kind = serde_json::to_value(a.kind)?;
    let kind = kind.as_str().unwrap_or("pmf");
    let eps = positive("tail-eps", a.tail_eps)?;
    let q = || -> Result<_> { QSpec::parse(need(a.q.as_deref(), "q", kind)?)?.build(eps) };
    let one_input = || -> Result<Pmf> {
        match a.input.as_slice() {
            [path] => read_pmf(path),
            _ => bail!("`{kind}` needs exactly one --input"),
        }
    };
    let binomial_p = |n: usize| -> Result<f64> {
        match (&a.p, a.lambda) {
            (Some(p), None) => p.trim().parse().context("--p must be a single probability"),
            (None, Some(l)) => Ok(l / n as f64),
            _ => bail!("`{kind}` needs exactly one of --p and --lambda"),
        }
    };
    let p = match a.kind {
        PmfKind::Poisson => poisson_pmf(need(a.lambda, "lambda", kind)?, eps)?,
        PmfKind::Binomial => {
            let n = need(a.n, "n", kind)?;
            binomial_pmf(n, binomial_p(n)?)?
        }
        PmfKind::BernoulliSum => {
            bernoulli_sum_pmf(&parse_params(need(a.p.as_deref(), "p", kind)?)?)
        }
        PmfKind::Compound => compound(&one_input()?, &q()?),
        PmfKind::CompoundPoisson => compound_poisson(need(a.lambda, "lambda", kind)?, &q()?, eps)?,
        PmfKind::CompoundBinomial => {
            let n = need(a.n, "n", kind)?;
            compound_binomial(n, binomial_p(n)?, &q()?)?
        }
        PmfKind::CompoundBernoulliSum => {
            compound_bernoulli_sum(&parse_params(need(a.p.as_deref(), "p", kind)?)?, &q()?)
        }
        PmfKind::Convolve => match a.input.as_slice() {
            [x, y] => convolve(&read_pmf(x)?, &read_pmf(y)?),
            _ => bail!("`convolve` needs exactly two --input files"),
        },
        PmfKind::SizeBias => size_bias(&one_input()?)?,
        PmfKind::Q => q()?.into_pmf(),
    };
    pmf_report(p)
}

fn run_entropy(a: &FileArgs) -> Result<Report> {
    let p = read_pmf(&a.input)?;
    let h = entropy_checked(&p);
    let result = json!({
        "nats": h.nats,
        "bits": h.bits(),
        "tail_bound": p.tail_bound(),
        "truncation_warning": h.truncation_warning,
    });
    Report::new(&result, true)
}

fn run_check(a: &FileArgs, ultra: bool) -> Result<Report> {
    let p = read_pmf(&a.input)?;
    let tol = positive("tol", a.tol)?;
    let floor = a.floor.unwrap_or(10.0 * p.tail_bound());
    if !(floor >= 0.0) {
        bail!("--floor must be nonnegative, got {floor}");
    }
    let v = if ultra {
        is_ultra_log_concave_with_floor(&p, tol, floor)
    } else {
        is_log_concave_with_floor(&p, tol, floor)
    };
    Report::new(&v, v.holds)
}

#[derive(Serialize)]
struct Thresholds {
    q: Pmf,
    /// Smallest Bernoulli parameter giving a log-concave compound Bernoulli law.
    bernoulli_p_star: f64,
    poisson_necessary: LambdaThreshold,
    binomial_lambda: Option<f64>,
    /// Closed-form compound Poisson threshold for two-point and geometric laws.
    family_lambda: Option<f64>,
}

fn run_thresholds(a: &ThresholdArgs) -> Result<Report> {
    let spec = QSpec::parse(&a.q)?;
    let q = spec.build(positive("tail-eps", a.tail_eps)?)?;
    let binomial_lambda = match a.n {
        Some(n) => Some(lambda_threshold(ThresholdCase::GeneralBinomial {
            n,
            q: &q,
        })?),
        None => None,
    };
    let family_lambda = match spec {
        QSpec::TwoPoint { q1 } => Some(lambda_threshold(ThresholdCase::TwoPoint { q1 })?),
        QSpec::Uniform { lo: 1, hi: 2 } => {
            Some(lambda_threshold(ThresholdCase::TwoPoint { q1: 0.5 })?)
        }
        QSpec::Geometric { alpha } if alpha < 1.0 => {
            Some(lambda_threshold(ThresholdCase::Geometric { alpha })?)
        }
        _ => None,
    };
    let t = Thresholds {
        bernoulli_p_star: cbern_lc_threshold(&q),
        poisson_necessary: cpo_necessary_lambda(&q),
        binomial_lambda,
        family_lambda,
        q: q.into_pmf(),
    };
    Report::new(&t, true)
}

fn run_score(a: &ScoreArgs) -> Result<Report> {
    let p = read_pmf(&a.input)?;
    let q = QSpec::parse(&a.q)?.build(positive("tail-eps", a.tail_eps)?)?;
    let tol = positive("tol", a.tol)?;
    let s = score_r1(&p, &q)?;
    let rise = s.first_increase(tol);
    let result = json!({ "first_increase": rise, "table": s });
    Ok(Report::new(&result, rise.is_none())?.with_csv(s.to_csv()))
}

fn run_energy(a: &EnergyArgs) -> Result<Report> {
    let p = read_pmf(&a.input)?;
    let eps = positive("tail-eps", a.tail_eps)?;
    let q = QSpec::parse(&a.q)?.build(eps)?;
    let grid = match &a.alpha_grid {
        Some(g) => parse_grid(g)?,
        None => default_alpha_grid(),
    };
    let c = energy_curve(&p, &q, &grid, eps)?;
    Ok(Report::new(&c, c.is_nonincreasing())?.with_csv(c.to_csv()))
}

fn run_energy_t(a: &EnergyTArgs) -> Result<Report> {
    let p = parse_params(&a.p)?;
    let q = QSpec::parse(&a.q)?.build(positive("tail-eps", a.tail_eps)?)?;
    let grid = match &a.t_grid {
        Some(g) => parse_grid(g)?,
        None => default_t_grid(&p),
    };
    let c = energy_t_curve(&p, &q, &grid)?;
    Ok(Report::new(&c, c.is_nonincreasing())?.with_csv(c.to_csv()))
}

fn extras(list: &[String]) -> Result<Vec<Vec<f64>>> {
    list.iter().map(|e| parse_list(e)).collect()
}

fn run_maxent_binomial(a: &MaxentBinomialArgs, seed: u64) -> Result<Report> {
    let q = QSpec::parse(&a.q)?.build(positive("tail-eps", a.tail_eps)?)?;
    let mut cfg = BinomialSweep::new(a.n, a.lambda, a.resolution);
    cfg.random_points = a.random_points;
    cfg.seed = seed;
    cfg.extra_points = extras(&a.extra)?;
    let r = verify_binomial_maxent(&cfg, &q)?;
    let pass = r.verdict == Verdict::ReferenceMaximal;
    Ok(Report::new(&r, pass)?.with_csv(r.to_csv()))
}

fn run_maxent_poisson(a: &MaxentPoissonArgs, seed: u64) -> Result<Report> {
    let eps = positive("tail-eps", a.tail_eps)?;
    let q = QSpec::parse(&a.q)?.build(eps)?;
    let family = match a.family {
        PoissonFamilyArg::BernoulliSums => PoissonFamily::BernoulliSums {
            n_max: a.nmax,
            resolution: a.resolution,
            random_points: a.random_points,
        },
        PoissonFamilyArg::UlcPerturbations => PoissonFamily::UlcPerturbations {
            count: a.count,
            amplitude: a.amplitude,
        },
    };
    let mut cfg = PoissonSweep::new(a.lambda, family);
    cfg.seed = seed;
    cfg.tail_eps = eps;
    cfg.extra_points = extras(&a.extra)?;
    let r = verify_poisson_maxent(&cfg, &q)?;
    let pass = r.verdict == Verdict::ReferenceMaximal;
    Ok(Report::new(&r, pass)?.with_csv(r.to_csv()))
}

fn run_chi() -> Result<Report> {
    let r = chi_counterexample();
    let mut csv = String::from("quantity,nats,bits,bound_bits\n");
    for (name, h, rel, bound) in [
        (
            "compound_binomial",
            r.compound_binomial,
            "<",
            CHI_BOUNDS_BITS[0],
        ),
        (
            "compound_bernoulli_sum",
            r.compound_bernoulli_sum,
            ">",
            CHI_BOUNDS_BITS[1],
        ),
        (
            "compound_poisson",
            r.compound_poisson,
            "<",
            CHI_BOUNDS_BITS[2],
        ),
    ] {
        let _ = writeln!(csv, "{name},{:.10},{:.10},{rel} {bound}", h.nats, h.bits());
    }
    let pass = r.ordering_holds && r.bounds_hold;
    let mut result = serde_json::to_value(&r)?;
    result["bits"] = json!({
        "compound_binomial": r.compound_binomial.bits(),
        "compound_bernoulli_sum": r.compound_bernoulli_sum.bits(),
        "compound_poisson": r.compound_poisson.bits(),
    });
    result["bounds_bits"] = json!({
        "compound_binomial_below": CHI_BOUNDS_BITS[0],
        "compound_bernoulli_sum_above": CHI_BOUNDS_BITS[1],
        "compound_poisson_below": CHI_BOUNDS_BITS[2],
    });
    Ok(Report::new(&result, pass)?.with_csv(csv))
}

fn run_scan(a: &ScanArgs, seed: u64) -> Result<Report> {
    let values = match &a.values {
        Some(v) => parse_list(v)?,
        None => (1..=9).map(|i| i as f64 / 10.0).collect(),
    };
    let family = match a.family {
        ScanFamilyArg::TwoPoint => QFamily::TwoPoint { q1_values: values },
        ScanFamilyArg::Geometric => QFamily::Geometric { alphas: values },
        ScanFamilyArg::ThreePoint => QFamily::ThreePoint { count: a.count },
    };
    let mut cfg = ScanConfig::new(family);
    if let Some(m) = &a.multipliers {
        cfg.lambdas = LambdaGrid::RelativeToThreshold(parse_list(m)?);
    }
    if let Some(l) = &a.lambdas {
        cfg.lambdas = LambdaGrid::Absolute(parse_list(l)?);
    }
    cfg.support_cap = a.support_cap;
    cfg.lambda_max = positive("lambda-max", a.lambda_max)?;
    cfg.rel_tol = positive("tol", a.tol)?;
    cfg.seed = seed;
    let r = conjecture_scan(&cfg)?;
    let mut csv = String::from("member,label,lambda,x,margin\n");
    for w in &r.violations {
        let _ = writeln!(
            csv,
            "{},{},{},{},{:e}",
            w.member, w.label, w.lambda, w.x, w.margin
        );
    }
    let pass = r.violations.is_empty();
    Ok(Report::new(&r, pass)?.with_csv(csv))
}

fn run_panjer(a: &PanjerArgs) -> Result<Report> {
    let q = QSpec::parse(&a.q)?.build(positive("tail-eps", a.tail_eps)?)?;
    let tol = positive("tol", a.tol)?;
    let mixture = compound_poisson_capped(a.lambda, &q, a.nmax)?;
    let recursion = compound_poisson_panjer(a.lambda, &q, a.nmax)?;
    let mut csv = String::from("x,mixture,recursion,abs_diff\n");
    let (mut worst, mut at) = (0.0f64, 0);
    for x in 0..=a.nmax {
        let (m, r) = (mixture.get(x), recursion.get(x));
        let d = (m - r).abs();
        if d > worst {
            (worst, at) = (d, x);
        }
        let _ = writeln!(csv, "{x},{m:e},{r:e},{d:e}");
    }
    let result = json!({ "nmax": a.nmax, "max_abs_diff": worst, "at": at, "tol": tol });
    Ok(Report::new(&result, worst <= tol)?.with_csv(csv))
}

fn config_of<T: Serialize>(args: &T, cli: &Cli) -> Result<Value> {
    let mut v = match serde_json::to_value(args)? {
        Value::Object(m) => m,
        _ => serde_json::Map::new(),
    };
    v.insert("seed".into(), json!(cli.seed));
    v.insert("format".into(), serde_json::to_value(cli.output.format)?);
    Ok(Value::Object(v))
}

fn run(cli: &Cli) -> Result<bool> {
    let seed = cli.seed;
    let (name, config, report) = match &cli.command {
        Command::Pmf(a) => ("pmf", config_of(a, cli)?, run_pmf(a)?),
        Command::Entropy(a) => ("entropy", config_of(a, cli)?, run_entropy(a)?),
        Command::CheckLc(a) => ("check-lc", config_of(a, cli)?, run_check(a, false)?),
        Command::CheckUlc(a) => ("check-ulc", config_of(a, cli)?, run_check(a, true)?),
        Command::Thresholds(a) => ("thresholds", config_of(a, cli)?, run_thresholds(a)?),
        Command::Score(a) => ("score", config_of(a, cli)?, run_score(a)?),
        Command::EnergyCurve(a) => ("energy-curve", config_of(a, cli)?, run_energy(a)?),
        Command::EnergyTCurve(a) => ("energy-t-curve", config_of(a, cli)?, run_energy_t(a)?),
        Command::MaxentBinomial(a) => (
            "maxent-binomial",
            config_of(a, cli)?,
            run_maxent_binomial(a, seed)?,
        ),
        Command::MaxentPoisson(a) => (
            "maxent-poisson",
            config_of(a, cli)?,
            run_maxent_poisson(a, seed)?,
        ),
        Command::Chi => ("chi", config_of(&json!({}), cli)?, run_chi()?),
        Command::ScanConjecture(a) => ("scan-conjecture", config_of(a, cli)?, run_scan(a, seed)?),
        Command::PanjerDiff(a) => ("panjer-diff", config_of(a, cli)?, run_panjer(a)?),
    };
    emit(
        &render(name, &config, &report, cli.output.format)?,
        &cli.output,
    )?;
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    panic::set_hook(Box::new(|info| {
        eprintln!("error: internal failure: {info}")
    }));
    match panic::catch_unwind(AssertUnwindSafe(|| run(&cli))) {
        Ok(Ok(true)) => ExitCode::SUCCESS,
        Ok(Ok(false)) => ExitCode::from(1),
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(_) => ExitCode::from(2),
    }
}

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use cpent::dist::{CompoundingDist, ParamVector, Pmf};
use cpent::semigroup::uniform_grid;

/// Named compounding laws accepted by `--q`.
#[derive(Debug, Clone, PartialEq)]
pub enum QSpec {
    Uniform { lo: usize, hi: usize },
    TwoPoint { q1: f64 },
    Geometric { alpha: f64 },
    Point { k: usize },
    File(String),
}

impl QSpec {
    pub fn parse(s: &str) -> Result<QSpec> {
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        let spec = match head {
            "uniform12" if rest.is_empty() => QSpec::Uniform { lo: 1, hi: 2 },
            "uniform" => {
                let (lo, hi) = rest
                    .split_once(':')
                    .context("expected uniform:LO:HI")?;
                QSpec::Uniform {
                    lo: lo.parse().context("uniform lower end")?,
                    hi: hi.parse().context("uniform upper end")?,
                }
            }
            "two-point" => QSpec::TwoPoint {
                q1: rest.parse().context("expected two-point:Q1")?,
            },
            "geometric" => QSpec::Geometric {
                alpha: rest.parse().context("expected geometric:ALPHA")?,
            },
            "point" => QSpec::Point {
                k: rest.parse().context("expected point:K")?,
            },
            "file" if !rest.is_empty() => QSpec::File(rest.to_string()),
            _ => bail!(
                "unknown compounding law `{s}` (use uniform12, uniform:LO:HI, two-point:Q1, geometric:ALPHA, point:K or file:PATH)"
            ),
        };
        Ok(spec)
    }

    pub fn build(&self, tail_eps: f64) -> Result<CompoundingDist> {
        Ok(match self {
            QSpec::Uniform { lo, hi } => CompoundingDist::uniform(*lo, *hi)?,
            QSpec::TwoPoint { q1 } => CompoundingDist::two_point(*q1)?,
            QSpec::Geometric { alpha } => CompoundingDist::geometric(*alpha, tail_eps)?,
            QSpec::Point { k } => CompoundingDist::point(*k)?,
            QSpec::File(path) => CompoundingDist::new(read_pmf(Path::new(path))?)?,
        })
    }
}

pub fn read_pmf(path: &Path) -> Result<Pmf> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not a pmf document", path.display()))
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("`{t}` is not a number"))
        })
        .collect()
}

pub fn parse_params(s: &str) -> Result<ParamVector> {
    Ok(ParamVector::new(parse_list(s)?)?)
}

/// `LO:HI:POINTS` for a uniform grid, or an explicit comma list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let lo: f64 = parts[0].parse().context("grid lower end")?;
        let hi: f64 = parts[1].parse().context("grid upper end")?;
        let points: usize = parts[2].parse().context("grid point count")?;
        if points == 0 || !(lo <= hi) {
            bail!("grid `{s}` is empty");
        }
        return Ok(uniform_grid(lo, hi, points));
    }
    parse_list(s)
}

pub fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        bail!("--{name} must be positive, got {v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_specs() {
        assert_eq!(
            QSpec::parse("uniform12").unwrap(),
            QSpec::Uniform { lo: 1, hi: 2 }
        );
        assert_eq!(
            QSpec::parse("two-point:0.3").unwrap(),
            QSpec::TwoPoint { q1: 0.3 }
        );
        assert_eq!(QSpec::parse("point:2").unwrap(), QSpec::Point { k: 2 });
        assert!(QSpec::parse("uniform12:3").is_err());
        assert!(QSpec::parse("poisson:1").is_err());
        assert!(QSpec::parse("geometric:x").is_err());
        assert!(QSpec::parse("point:0").unwrap().build(1e-12).is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("0.1, 0.2").unwrap(), vec![0.1, 0.2]);
        assert!(parse_grid("1:0:3").is_err());
        assert!(parse_grid("a").is_err());
    }
}

#![allow(dead_code)]

use cpent::compound::compound_poisson;
use cpent::concavity::{is_log_concave, DEFAULT_LC_TOL};
use cpent::dist::{CompoundingDist, Pmf};
use cpent::random::{random_lc_compounding, random_ulc_pmf, SweepRng};
use num_bigint::BigInt;

/// A ULC `P` and LC `Q` for which `CPo(mean(P), Q)` is log-concave too.
pub fn admissible_poisson_instance(rng: &mut SweepRng) -> (Pmf, CompoundingDist) {
    loop {
        let p = random_ulc_pmf(rng, 10);
        let q = random_lc_compounding(rng, 4);
        let cpo = compound_poisson(p.mean(), &q, 1e-14).unwrap();
        if is_log_concave(&cpo, DEFAULT_LC_TOL).holds {
            return (p, q);
        }
    }
}

/// Coefficients of `(1 + T^2)^a (1 + T)^b`, expanded term by term.
pub fn expand_polynomial(a: usize, b: usize) -> Vec<BigInt> {
    let mut coeffs = vec![BigInt::from(1)];
    let mul = |c: &[BigInt], shift: usize| -> Vec<BigInt> {
        let mut out = vec![BigInt::from(0); c.len() + shift];
        for (i, v) in c.iter().enumerate() {
            out[i] += v;
            out[i + shift] += v;
        }
        out
    };
    for _ in 0..a {
        coeffs = mul(&coeffs, 2);
    }
    for _ in 0..b {
        coeffs = mul(&coeffs, 1);
    }
    coeffs
}

pub fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

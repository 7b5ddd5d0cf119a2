use serde::{Deserialize, Serialize};

use crate::compound::{compound_bernoulli_sum, compound_binomial, compound_poisson};
use crate::dist::{entropy_checked, CompoundingDist, EntropyValue, ParamVector};

pub const CHI_LAMBDA: f64 = 0.01;
pub const CHI_PARAMS: [f64; 2] = [0.00125, 0.00875];
/// Reference bounds, in bits: `H(CBin) <` first, `H(C_Q b_p) >` second,
/// `H(CPo) <` third.
pub const CHI_BOUNDS_BITS: [f64; 3] = [0.090798, 0.090804, 0.090765];

/// Entropies at the small-rate counterexample with `Q` uniform on `{1, 2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiRecord {
    pub lambda: f64,
    pub params: Vec<f64>,
    pub compound_binomial: EntropyValue,
    pub compound_bernoulli_sum: EntropyValue,
    pub compound_poisson: EntropyValue,
    /// `H(C_Q b_p) - H(CBin(2, lambda/2, Q))` in nats.
    pub gap_over_binomial: f64,
    /// `H(C_Q b_p) - H(CPo(lambda, Q))` in nats.
    pub gap_over_poisson: f64,
    /// `H(CPo) < H(CBin) < H(C_Q b_p)`.
    pub ordering_holds: bool,
    /// All three bits values respect [`CHI_BOUNDS_BITS`].
    pub bounds_hold: bool,
}

pub fn chi_counterexample() -> ChiRecord {
    let q = CompoundingDist::uniform(1, 2).expect("valid support");
    let p = ParamVector::new(CHI_PARAMS.to_vec()).expect("valid parameters");
    let cbin = entropy_checked(&compound_binomial(2, CHI_LAMBDA / 2.0, &q).expect("n >= 1"));
    let cbs = entropy_checked(&compound_bernoulli_sum(&p, &q));
    let cpo = entropy_checked(&compound_poisson(CHI_LAMBDA, &q, 1e-15).expect("valid rate"));
    ChiRecord {
        lambda: CHI_LAMBDA,
        params: CHI_PARAMS.to_vec(),
        gap_over_binomial: cbs.nats - cbin.nats,
        gap_over_poisson: cbs.nats - cpo.nats,
        ordering_holds: cpo.nats < cbin.nats && cbin.nats < cbs.nats,
        bounds_hold: cbin.bits() < CHI_BOUNDS_BITS[0]
            && cbs.bits() > CHI_BOUNDS_BITS[1]
            && cpo.bits() < CHI_BOUNDS_BITS[2],
        compound_binomial: cbin,
        compound_bernoulli_sum: cbs,
        compound_poisson: cpo,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counterexample_reproduces() {
        let r = chi_counterexample();
        assert!(r.ordering_holds);
        assert!(r.bounds_hold);
        assert!(r.gap_over_binomial > 0.0 && r.gap_over_poisson > 0.0);
        assert!(!r.compound_poisson.truncation_warning);
    }
}

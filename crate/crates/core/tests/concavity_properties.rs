use cpent::compound::{
    compound, compound_bernoulli, compound_bernoulli_sum, compound_poisson_capped,
};
use cpent::concavity::{
    cbern_lc_threshold, cpo_necessary_lambda, is_log_concave, is_log_concave_relative,
    is_ultra_log_concave, keilson_check, nec2_check, DEFAULT_LC_TOL,
};
use cpent::dist::{convolve, CompoundingDist, ParamVector};
use cpent::random::{
    lc_compounding_with_support, random_lc_compounding, random_lc_pmf, random_param_vector,
    random_ulc_pmf, seeded,
};
use cpent::semigroup::u_alpha;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ulc_implies_lc(seed in any::<u64>()) {
        let p = random_ulc_pmf(&mut seeded(seed), 14);
        prop_assert!(is_ultra_log_concave(&p, DEFAULT_LC_TOL).holds);
        prop_assert!(is_log_concave(&p, DEFAULT_LC_TOL).holds);
    }

    #[test]
    fn log_concavity_survives_convolution(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let a = random_lc_pmf(&mut rng, 10);
        let b = random_lc_pmf(&mut rng, 10);
        prop_assert!(is_log_concave(&convolve(&a, &b), DEFAULT_LC_TOL).holds);
    }

    #[test]
    fn ultra_log_concavity_survives_convolution(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let a = random_ulc_pmf(&mut rng, 8);
        let b = random_ulc_pmf(&mut rng, 8);
        prop_assert!(is_ultra_log_concave(&convolve(&a, &b), DEFAULT_LC_TOL).holds);
    }

    #[test]
    fn thinning_flow_keeps_ultra_log_concavity(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let p = random_ulc_pmf(&mut rng, 10);
        let alpha = rng.random_range(0.0..=1.0);
        let u = u_alpha(&p, alpha, 1e-14).unwrap();
        prop_assert!(is_ultra_log_concave(&u, DEFAULT_LC_TOL).holds);
    }

    #[test]
    fn compound_bernoulli_flips_at_threshold(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let m = rng.random_range(2..=5);
        let q = lc_compounding_with_support(&mut rng, m);
        let ps = cbern_lc_threshold(&q);
        let p = rng.random_range(0.0..=1.0);
        prop_assume!((p - ps).abs() > 1e-6 && p > 0.0);
        let lc = is_log_concave(&compound_bernoulli(p, &q).unwrap(), DEFAULT_LC_TOL).holds;
        prop_assert_eq!(lc, p >= ps);
    }

    #[test]
    fn bernoulli_sums_above_threshold_are_log_concave(seed in any::<u64>(), n in 1usize..5) {
        let mut rng = seeded(seed);
        let q = random_lc_compounding(&mut rng, 4);
        let ps = cbern_lc_threshold(&q);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(ps..=1.0)).collect();
        let c = compound_bernoulli_sum(&ParamVector::new(v).unwrap(), &q);
        prop_assert!(is_log_concave(&c, DEFAULT_LC_TOL).holds);
    }

    #[test]
    fn keilson_sumita_inequality(seed in any::<u64>(), n in 1usize..4, extra in 0usize..3) {
        let q = random_lc_compounding(&mut seeded(seed), 5);
        prop_assert!(keilson_check(&q, n + extra, n, 25).unwrap().holds);
    }

    #[test]
    fn nec2_is_necessary(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let p = random_lc_pmf(&mut rng, 8);
        let q = random_lc_compounding(&mut rng, 4);
        prop_assume!(p.len() >= 2);
        if is_log_concave(&compound(&p, &q), DEFAULT_LC_TOL).holds {
            prop_assert!(nec2_check(&p, &q).unwrap());
        }
    }
}

#[test]
fn compound_poisson_below_necessary_rate_is_not_log_concave() {
    let mut rng = seeded(21);
    for _ in 0..30 {
        let m = rng.random_range(2..=5);
        let q = lc_compounding_with_support(&mut rng, m);
        let thr = cpo_necessary_lambda(&q).value;
        if thr > 500.0 {
            continue;
        }
        let c = compound_poisson_capped(0.9 * thr, &q, 12).unwrap();
        assert!(!is_log_concave_relative(&c, 1e-9, 1e-250).holds);
    }
}

#[test]
fn sum_condition_suffices_for_bernoulli_sum_necessary_condition() {
    // sum p >= 2 Q(2) / Q(1)^2 gives the necessary two-point inequality
    let q = CompoundingDist::uniform(1, 2).unwrap();
    let mut rng = seeded(3);
    for _ in 0..40 {
        let target = rng.random_range(2.0..3.9);
        let v = random_param_vector(&mut rng, 4, target).unwrap();
        let b = cpent::dist::bernoulli_sum_pmf(&v);
        assert!(nec2_check(&b, &q).unwrap());
    }
}

use cpent::compound::{
    compound, compound_bernoulli_sum, compound_bernoulli_sum_by_convolution, compound_binomial,
    compound_binomial_by_convolution, compound_poisson, compound_poisson_capped,
    compound_poisson_panjer,
};
use cpent::dist::{moments, CompoundingDist, ParamVector, Pmf};
use cpent::random::{random_lc_compounding, random_lc_pmf, random_param_vector, seeded};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compounding_keeps_mass_and_multiplies_means(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let p = random_lc_pmf(&mut rng, 8);
        let q = random_lc_compounding(&mut rng, 5);
        let c = compound(&p, &q);
        prop_assert!((c.mass() - 1.0).abs() < 1e-12);
        prop_assert!((c.mean() - p.mean() * q.mean()).abs() < 1e-10);
    }

    #[test]
    fn compound_poisson_paths_agree(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let lambda = rng.random_range(0.01..5.0);
        let q = random_lc_compounding(&mut rng, 6);
        let mix = compound_poisson(lambda, &q, 1e-14).unwrap();
        let rec = compound_poisson_panjer(lambda, &q, mix.max_index()).unwrap();
        prop_assert!(mix.sup_distance(&rec) <= 1e-10);
        let capped = compound_poisson_capped(lambda, &q, 30).unwrap();
        prop_assert!(capped.sup_distance(&rec.truncate_at(30)) <= 1e-12);
    }

    #[test]
    fn compound_binomial_paths_agree(seed in any::<u64>(), n in 1usize..7) {
        let mut rng = seeded(seed);
        let p: f64 = rng.random_range(0.0..=1.0);
        let q = random_lc_compounding(&mut rng, 4);
        let a = compound_binomial(n, p, &q).unwrap();
        let b = compound_binomial_by_convolution(n, p, &q).unwrap();
        prop_assert!(a.sup_distance(&b) <= 1e-12);
    }

    #[test]
    fn compound_bernoulli_sum_paths_agree(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = seeded(seed);
        let v = random_param_vector(&mut rng, n, 0.6 * n as f64).unwrap();
        let q = random_lc_compounding(&mut rng, 4);
        let a = compound_bernoulli_sum(&v, &q);
        let b = compound_bernoulli_sum_by_convolution(&v, &q);
        prop_assert!(a.sup_distance(&b) <= 1e-12);
    }

    #[test]
    fn compound_entropy_is_permutation_invariant(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = seeded(seed);
        let v = random_param_vector(&mut rng, n, 0.4 * n as f64).unwrap();
        let q = random_lc_compounding(&mut rng, 4);
        let mut shuffled = v.entries().to_vec();
        shuffled.rotate_left(1);
        shuffled.swap(0, n - 1);
        let w = ParamVector::new(shuffled).unwrap();
        prop_assert_eq!(compound_bernoulli_sum(&v, &q), compound_bernoulli_sum(&w, &q));
    }
}

#[test]
fn compound_poisson_third_moment() {
    // E W^3 = lambda q3 + 3 lambda^2 q1 q2 + lambda^3 q1^3 for the compound Poisson law
    let q = CompoundingDist::uniform(1, 3).unwrap();
    let lambda = 2.0;
    let c = compound_poisson(lambda, &q, 1e-16).unwrap();
    let (q1, q2, q3) = (2.0, 14.0 / 3.0, 12.0);
    let want = lambda * q3 + 3.0 * lambda * lambda * q1 * q2 + lambda.powi(3) * q1.powi(3);
    let got = moments(&c, 3).unwrap().raw(3);
    assert!((got - want).abs() < 1e-8 * want, "{got} vs {want}");
}

#[test]
fn compounding_a_point_mass_is_a_convolution_power() {
    let q = CompoundingDist::uniform(1, 2).unwrap();
    let c = compound(&Pmf::point_mass(3), &q);
    let direct = cpent::dist::convolution_power(&q, 3);
    assert!(c.sup_distance(&direct) < 1e-15);
}

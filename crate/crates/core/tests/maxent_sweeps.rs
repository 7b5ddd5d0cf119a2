use cpent::compound::{compound_bernoulli_sum, compound_binomial};
use cpent::dist::{entropy, CompoundingDist, ParamVector};
use cpent::maxent::{
    chi_counterexample, verify_binomial_maxent, verify_poisson_maxent, BinomialSweep,
    PoissonFamily, PoissonSweep, Verdict, CHI_LAMBDA, CHI_PARAMS,
};
use cpent::random::{random_lc_compounding, random_param_vector, seeded};
use cpent::semigroup::{default_t_grid, energy_t_curve};

fn u12() -> CompoundingDist {
    CompoundingDist::uniform(1, 2).unwrap()
}

#[test]
fn small_rate_binomial_sweep_finds_the_counterexample() {
    let mut cfg = BinomialSweep::new(2, CHI_LAMBDA, 200);
    cfg.extra_points = vec![CHI_PARAMS.to_vec()];
    let r = verify_binomial_maxent(&cfg, &u12()).unwrap();
    assert_eq!(r.verdict, Verdict::CounterexampleFound);
    assert!(r.is_consistent());
    let has = |w: &cpent::maxent::SweepPoint| {
        (w.params[0] - CHI_PARAMS[0]).abs() < 1e-12 && (w.params[1] - CHI_PARAMS[1]).abs() < 1e-12
    };
    assert!(r
        .witnesses
        .iter()
        .filter(|w| w.source == "lattice")
        .any(has));
    assert!(r.witnesses.iter().any(|w| w.source == "extra"));
    assert!(r.best_entropy >= chi_counterexample().compound_bernoulli_sum.nats - 1e-15);
    // the reference law is not log-concave here, so no theorem applies
    assert!(!r.conditions.hypotheses_hold);
}

#[test]
fn binomial_sweep_above_threshold_is_clean() {
    // the general binomial threshold is 4/3 for n = 2 and Q uniform on {1, 2}
    let r = verify_binomial_maxent(&BinomialSweep::new(2, 1.5, 200), &u12()).unwrap();
    assert!(r.conditions.hypotheses_hold);
    assert_eq!(r.verdict, Verdict::ReferenceMaximal);
    let mut cfg = BinomialSweep::new(3, 2.0, 40);
    cfg.seed = 9;
    let r3 = verify_binomial_maxent(&cfg, &u12()).unwrap();
    assert!(r3.conditions.hypotheses_hold);
    assert_eq!(r3.verdict, Verdict::ReferenceMaximal);
}

#[test]
fn poisson_sweeps() {
    let q = u12();
    let sums = PoissonFamily::BernoulliSums {
        n_max: 6,
        resolution: 40,
        random_points: 60,
    };
    let r = verify_poisson_maxent(&PoissonSweep::new(4.0, sums.clone()), &q).unwrap();
    assert!(r.conditions.hypotheses_hold);
    assert_eq!(r.verdict, Verdict::ReferenceMaximal);

    let pert = PoissonFamily::UlcPerturbations {
        count: 200,
        amplitude: 0.3,
    };
    let r = verify_poisson_maxent(&PoissonSweep::new(4.0, pert), &q).unwrap();
    assert_eq!(r.verdict, Verdict::ReferenceMaximal);
    assert!(r.rows.len() + r.rejected == 200);

    let small = PoissonFamily::BernoulliSums {
        n_max: 2,
        resolution: 200,
        random_points: 0,
    };
    let r = verify_poisson_maxent(&PoissonSweep::new(CHI_LAMBDA, small), &q).unwrap();
    assert_eq!(r.verdict, Verdict::CounterexampleFound);
}

#[test]
fn unit_compounding_recovers_poisson_maximum() {
    let d1 = CompoundingDist::point(1).unwrap();
    for lambda in [0.3, 1.0, 2.5] {
        let pert = PoissonFamily::UlcPerturbations {
            count: 100,
            amplitude: 0.5,
        };
        let mut cfg = PoissonSweep::new(lambda, pert);
        cfg.seed = 4;
        let r = verify_poisson_maxent(&cfg, &d1).unwrap();
        assert_eq!(r.verdict, Verdict::ReferenceMaximal, "lambda {lambda}");
    }
}

#[test]
fn sweeps_are_deterministic() {
    let mut cfg = BinomialSweep::new(4, 1.7, 10);
    cfg.seed = 123;
    let a = serde_json::to_string(&verify_binomial_maxent(&cfg, &u12()).unwrap()).unwrap();
    let b = serde_json::to_string(&verify_binomial_maxent(&cfg, &u12()).unwrap()).unwrap();
    assert_eq!(a, b);
    let pert = PoissonFamily::UlcPerturbations {
        count: 30,
        amplitude: 0.3,
    };
    let p = PoissonSweep::new(2.0, pert);
    let a = verify_poisson_maxent(&p, &u12()).unwrap().to_csv();
    let b = verify_poisson_maxent(&p, &u12()).unwrap().to_csv();
    assert_eq!(a, b);
}

#[test]
fn averaging_two_parameters_never_lowers_the_cross_entropy() {
    let mut rng = seeded(14);
    let mut seen = 0;
    while seen < 15 {
        let n = 3;
        let q = random_lc_compounding(&mut rng, 3);
        let mut e = random_param_vector(&mut rng, n, 1.8)
            .unwrap()
            .entries()
            .to_vec();
        if e[0] < e[1] {
            e.swap(0, 1);
        }
        let cbin = compound_binomial(n, 0.6, &q).unwrap();
        if !cpent::concavity::is_log_concave(&cbin, 1e-12).holds {
            continue;
        }
        seen += 1;
        let p = ParamVector::new(e).unwrap();
        let c = energy_t_curve(&p, &q, &default_t_grid(&p)).unwrap();
        assert!(c.values[0] >= *c.values.last().unwrap() - 1e-12);
        assert!(entropy(&compound_bernoulli_sum(&p, &q)) <= entropy(&cbin) + 1e-10);
    }
}

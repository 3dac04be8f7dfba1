use proptest::prelude::*;
use treecut_core::counts::{compute_counts, split_distribution};
use treecut_core::family::{FamilyKind, FamilySpec};
use treecut_core::limit_laws::{limit_moments_one_sided, limit_moments_two_sided};
use treecut_core::moments::{compute_moments, MomentOptions, TollSpec, Variant};
use treecut_core::rational::{self, Rational};
use treecut_core::simulator::{run_experiment, ExperimentConfig};

fn family() -> impl Strategy<Value = FamilySpec> {
    (0u8..3, 1i64..7, 1i64..5, 2u32..6, 1i64..7, 1i64..5).prop_map(|(kind, p, q, d, ep, eq)| {
        let alpha0 = rational::ratio(p, q);
        match kind {
            0 => FamilySpec::new(FamilyKind::A, alpha0, None, None),
            1 => FamilySpec::new(FamilyKind::B, alpha0, Some(d), None),
            _ => {
                let alpha1 = &alpha0 / rational::int(2) + rational::ratio(ep, eq);
                FamilySpec::new(FamilyKind::C, alpha0, None, Some(alpha1))
            }
        }
        .expect("generated family is valid")
    })
}

fn variant() -> impl Strategy<Value = Variant> {
    prop_oneof![Just(Variant::OneSided), Just(Variant::TwoSided)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_split_law_is_a_distribution(spec in family(), n in 2usize..25) {
        let counts = compute_counts(&spec, n, n).unwrap();
        let split = split_distribution(&counts, n, false).unwrap();
        let probs: Vec<Rational> = (1..n)
            .map(|k| counts.split_prob_exact(n, k).unwrap())
            .collect();
        let total: Rational = probs.iter().sum();
        prop_assert_eq!(total, rational::int(1));
        prop_assert!(probs.iter().all(|p| p >= &rational::int(0)));
        prop_assert_eq!(split.len(), n - 1);
    }

    #[test]
    fn float_split_law_matches_exact(spec in family(), n in 2usize..40) {
        let counts = compute_counts(&spec, n, n).unwrap();
        let floats = compute_counts(&spec, n, 0).unwrap();
        for k in 1..n {
            let exact = rational::to_f64(&counts.split_prob_exact(n, k).unwrap());
            prop_assert!((floats.split_prob(n, k) - exact).abs() <= 1e-12);
        }
    }

    #[test]
    fn symmetrized_split_law_is_palindromic(spec in family(), n in 2usize..200) {
        let counts = compute_counts(&spec, n, 0).unwrap();
        let p = split_distribution(&counts, n, true).unwrap().to_f64();
        let total: f64 = p.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for k in 0..p.len() {
            prop_assert!(p[k] >= 0.0);
            prop_assert!((p[k] - p[p.len() - 1 - k]).abs() <= 1e-14);
        }
    }

    #[test]
    fn second_moment_dominates_squared_mean(
        spec in family(), v in variant(), alpha in 0.0f64..2.0, n in 1usize..150
    ) {
        let counts = compute_counts(&spec, n, 0).unwrap();
        let t = compute_moments(v, &counts, &TollSpec::power(alpha).unwrap(), n, 2, MomentOptions::default()).unwrap();
        for m in 1..=n {
            let mean = t.get(m, 1);
            prop_assert!(t.get(m, 2) >= mean * mean * (1.0 - 1e-12));
        }
    }

    #[test]
    fn mean_increases_with_alpha(
        spec in family(), v in variant(), a in 0.0f64..1.5, gap in 0.05f64..1.0, n in 2usize..120
    ) {
        let counts = compute_counts(&spec, n, 0).unwrap();
        let low = compute_moments(v, &counts, &TollSpec::power(a).unwrap(), n, 1, MomentOptions::default()).unwrap();
        let high = compute_moments(v, &counts, &TollSpec::power(a + gap).unwrap(), n, 1, MomentOptions::default()).unwrap();
        prop_assert!(high.get(n, 1) > low.get(n, 1));
    }

    #[test]
    fn two_sided_cost_exceeds_one_sided(spec in family(), alpha in 0.0f64..2.0, n in 2usize..120) {
        let counts = compute_counts(&spec, n, 0).unwrap();
        let toll = TollSpec::power(alpha).unwrap();
        let one = compute_moments(Variant::OneSided, &counts, &toll, n, 2, MomentOptions::default()).unwrap();
        let two = compute_moments(Variant::TwoSided, &counts, &toll, n, 2, MomentOptions::default()).unwrap();
        for s in 1..=2 {
            prop_assert!(two.get(n, s) >= one.get(n, s));
        }
    }

    #[test]
    fn exact_and_float_moments_agree(spec in family(), v in variant(), alpha in 0u32..3, n in 1usize..40) {
        let counts = compute_counts(&spec, n, n).unwrap();
        let toll = TollSpec::power(alpha as f64).unwrap();
        let exact = compute_moments(v, &counts, &toll, n, 2, MomentOptions::exact()).unwrap();
        let float = compute_moments(v, &counts, &toll, n, 2, MomentOptions::default()).unwrap();
        for s in 0..=2 {
            let e = rational::to_f64(exact.exact(n, s).unwrap());
            prop_assert!(((float.get(n, s) - e) / e).abs() < 1e-11);
        }
    }

    #[test]
    fn limit_moments_satisfy_jensen(alpha in 0.0f64..3.0) {
        prop_assume!((alpha - 0.5).abs() > 1e-3);
        let one = limit_moments_one_sided(alpha, 4).unwrap();
        prop_assert!(one.get(2) > one.get(1) * one.get(1));
        prop_assert!(one.get(4) > one.get(2) * one.get(2));
        if alpha > 0.0 {
            let two = limit_moments_two_sided(alpha, 4).unwrap();
            prop_assert!(two.get(2) > 0.0 && two.get(4) > two.get(2) * two.get(2));
        }
    }

    #[test]
    fn config_round_trips(spec in family()) {
        prop_assert_eq!(FamilySpec::from_config(&spec.to_config()).unwrap(), spec);
    }

    #[test]
    fn rationals_round_trip(p in -10_000i64..10_000, q in 1i64..10_000) {
        let r = rational::ratio(p, q);
        prop_assert_eq!(rational::parse(&rational::format(&r)).unwrap(), r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn simulation_ignores_worker_count(seed in any::<u64>(), workers in 2usize..6, v in variant()) {
        let mut config = ExperimentConfig::new(FamilySpec::ordered(), 1.0, 40, v, 3000, seed);
        config.s_max = 2;
        let serial = run_experiment(&config).unwrap();
        config.workers = workers;
        prop_assert_eq!(run_experiment(&config).unwrap(), serial);
    }
}

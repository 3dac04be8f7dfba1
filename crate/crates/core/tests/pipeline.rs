use treecut_core::analysis::{convergence_report, estimate_mu, Regime};
use treecut_core::counts::compute_counts;
use treecut_core::family::{solve_constants, FamilySpec};
use treecut_core::limit_laws::limit_moments_two_sided;
use treecut_core::moments::{compute_moments, MomentOptions, MomentTable, TollSpec, Variant};
use treecut_core::simulator::{run_experiment, Engine, ExperimentConfig};

fn table(spec: &FamilySpec, variant: Variant, alpha: f64, n: usize, s_max: usize) -> MomentTable {
    let counts = compute_counts(spec, n, 0).unwrap();
    compute_moments(variant, &counts, &TollSpec::power(alpha).unwrap(), n, s_max, MomentOptions::default()).unwrap()
}

#[test]
fn mu_estimate_is_stable_across_ranges() {
    let spec = FamilySpec::ordered();
    let small = estimate_mu(&table(&spec, Variant::TwoSided, 0.25, 1000, 1)).unwrap();
    let large = estimate_mu(&table(&spec, Variant::TwoSided, 0.25, 2000, 1)).unwrap();
    assert!((small.mu - large.mu).abs() / large.mu < 1e-3, "{} vs {}", small.mu, large.mu);
    assert!(large.condition < 1e3);
}

#[test]
fn centered_moments_approach_the_limit_below_half() {
    let spec = FamilySpec::ordered();
    let t = table(&spec, Variant::TwoSided, 0.25, 2000, 2);
    let report = convergence_report(&t, &solve_constants(&spec).unwrap(), &[500, 1000, 2000]).unwrap();
    assert_eq!(report.regime, Regime::TwoSidedBelow);
    let m2 = limit_moments_two_sided(0.25, 2).unwrap().get(2);
    let errors: Vec<f64> = [500, 1000, 2000]
        .iter()
        .map(|&n| (report.normalized(n, 2).unwrap() - m2).abs())
        .collect();
    assert!(errors[2] < errors[0], "{errors:?}");
    assert!(errors[2] / m2 < 0.1, "{errors:?}");
}

#[test]
fn explicit_and_size_process_engines_agree() {
    let spec = FamilySpec::ordered();
    let mut config = ExperimentConfig::new(spec, 1.0, 30, Variant::TwoSided, 20_000, 7);
    config.s_max = 2;
    let size_process = run_experiment(&config).unwrap();
    config.engine = Engine::Explicit;
    config.seed = 8;
    let explicit = run_experiment(&config).unwrap();
    let gap = (size_process.moment_estimates[0] - explicit.moment_estimates[0]).abs();
    let se = size_process.standard_errors[0].hypot(explicit.standard_errors[0]);
    assert!(gap < 4.0 * se, "gap {gap}, se {se}");
}

#[test]
fn one_sided_error_shrinks_like_inverse_root_n() {
    let spec = FamilySpec::binary();
    let t = table(&spec, Variant::OneSided, 1.5, 4000, 2);
    let report = convergence_report(&t, &solve_constants(&spec).unwrap(), &[1000, 4000]).unwrap();
    assert_eq!(report.regime, Regime::OneSided);
    for s in 1..=2 {
        let coarse = report.row(1000, s).unwrap().relative_error.unwrap();
        let fine = report.row(4000, s).unwrap().relative_error.unwrap();
        let ratio = fine / coarse;
        assert!((0.4..0.6).contains(&ratio), "s={s}: {coarse} -> {fine}");
    }
}

//! Acceptance battery: each check recomputes its inputs, compares against an
//! independent reference, and records the wall-clock time against its budget.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::analysis::{family_independence_check, normalize_moments, ConvergenceRow};
use crate::counts::{compute_counts, split_distribution};
use crate::error::Result;
use crate::family::{solve_constants, FamilyKind, FamilySpec};
use crate::limit_laws::{j_integral_with, JScheme};
use crate::moments::{compute_moments, MomentOptions, MomentTable, SizeOneCost, TollSpec, Variant};
use crate::oracle;
use crate::rational::{self, Rational};
use crate::simulator::{
    block_rng, chi_square_gof, destroy_tree, run_experiment, sample_tree_explicit, ExperimentConfig,
};

pub const CRITERIA: [u8; 11] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed_seconds: f64,
    pub budget_seconds: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub convergence: Vec<ConvergenceRow>,
}

impl CriterionResult {
    /// One-line `PASS`/`FAIL` summary.
    pub fn line(&self) -> String {
        let budget = self
            .budget_seconds
            .map(|b| format!(" / {b:.0}s"))
            .unwrap_or_default();
        format!(
            "[{}] criterion {:>2} {}: {} ({:.2}s{budget})",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed_seconds
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatteryReport {
    pub criteria: Vec<CriterionResult>,
    pub all_passed: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct BatteryOptions {
    /// Threads used by the Monte Carlo checks.
    pub workers: usize,
    pub seed: u64,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        BatteryOptions { workers: 4, seed: 20_240_601 }
    }
}

struct Outcome {
    passed: bool,
    detail: String,
    convergence: Vec<ConvergenceRow>,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Outcome {
            passed,
            detail: detail.into(),
            convergence: Vec::new(),
        }
    }
}

fn timed(id: u8, name: &str, budget: Option<f64>, f: impl FnOnce() -> Result<Outcome>) -> CriterionResult {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let over_budget = budget.is_some_and(|b| elapsed > Duration::from_secs_f64(b));
    let (passed, mut detail, convergence) = match outcome {
        Ok(o) => (o.passed, o.detail, o.convergence),
        Err(e) => (false, format!("error: {e}"), Vec::new()),
    };
    if over_budget {
        detail.push_str("; over time budget");
    }
    CriterionResult {
        id,
        name: name.into(),
        passed: passed && !over_budget,
        detail,
        elapsed_seconds: elapsed.as_secs_f64(),
        budget_seconds: budget,
        convergence,
    }
}

pub fn run_criterion(id: u8, options: &BatteryOptions) -> CriterionResult {
    match id {
        1 => degenerate_exactness(),
        2 => brute_force_equivalence(),
        3 => count_oracles(),
        4 => randomness_preservation(options),
        5 => one_sided_rayleigh(),
        6 => two_sided_alpha_one(),
        7 => family_independence(),
        8 => half_regime_mean(),
        9 => one_sided_alpha_one(),
        10 => j_integrals(),
        11 => monte_carlo_consistency(options),
        other => CriterionResult {
            id: other,
            name: "unknown".into(),
            passed: false,
            detail: format!("no criterion {other}"),
            elapsed_seconds: 0.0,
            budget_seconds: None,
            convergence: Vec::new(),
        },
    }
}

pub fn run_battery(ids: &[u8], options: &BatteryOptions) -> BatteryReport {
    let criteria: Vec<CriterionResult> = ids.iter().map(|&id| run_criterion(id, options)).collect();
    let all_passed = criteria.iter().all(|c| c.passed);
    BatteryReport { criteria, all_passed }
}

fn reference_families() -> [FamilySpec; 3] {
    [FamilySpec::cayley(), FamilySpec::binary(), FamilySpec::ordered()]
}

fn relative(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// `a` and `b` agree to `digits` significant figures (half a unit in the last place).
pub fn agrees_to_sig_figs(a: f64, b: f64, digits: i32) -> bool {
    let magnitude = a.abs().max(b.abs());
    if magnitude == 0.0 {
        return true;
    }
    let exponent = magnitude.log10().floor() as i32;
    (a - b).abs() <= 0.5 * 10f64.powi(exponent - digits + 1)
}

pub fn degenerate_exactness() -> CriterionResult {
    timed(1, "two-sided alpha=0 is the edge count", Some(10.0), || {
        let n_max = 300;
        let toll = TollSpec::power(0.0)?.with_size_one(SizeOneCost::Free);
        let mut bad = Vec::new();
        for spec in reference_families() {
            let counts = compute_counts(&spec, n_max, n_max)?;
            let t = compute_moments(Variant::TwoSided, &counts, &toll, n_max, 2, MomentOptions::exact())?;
            for n in 1..=n_max {
                let mean = t.exact(n, 1).unwrap();
                let second = t.exact(n, 2).unwrap();
                let var = second - mean * mean;
                if mean != &rational::int(n as i64 - 1) || !var.is_zero() {
                    bad.push(format!("{} n={n}", spec.label()));
                }
            }
        }
        Ok(Outcome::new(
            bad.is_empty(),
            if bad.is_empty() {
                "mean n-1 and variance 0 exactly for n <= 300, three families".to_string()
            } else {
                format!("mismatches: {}", bad.join(", "))
            },
        ))
    })
}

pub fn brute_force_equivalence() -> CriterionResult {
    timed(2, "DP equals exhaustive enumeration", Some(60.0), || {
        let mut checked = 0;
        let mut bad = Vec::new();
        for spec in [FamilySpec::ordered(), FamilySpec::cayley()] {
            let counts = compute_counts(&spec, 5, 5)?;
            for alpha in [0u32, 1, 2] {
                let tolls: Vec<Rational> = (1..=5i64).map(|n| rational::int(n.pow(alpha))).collect();
                let toll = TollSpec::power(alpha as f64)?;
                for (variant, cut) in [
                    (Variant::OneSided, oracle::CutVariant::OneSided),
                    (Variant::TwoSided, oracle::CutVariant::TwoSided),
                ] {
                    let t = compute_moments(variant, &counts, &toll, 5, 2, MomentOptions::exact())?;
                    for n in 1..=5 {
                        let reference = oracle::brute_force_moments(&spec, n, &tolls, 2, cut);
                        for (s, r) in reference.iter().enumerate() {
                            checked += 1;
                            if t.exact(n, s).unwrap() != r {
                                bad.push(format!("{} α={alpha} {variant} n={n} s={s}", spec.label()));
                            }
                        }
                    }
                }
            }
        }
        Ok(Outcome::new(
            bad.is_empty(),
            if bad.is_empty() {
                format!("{checked} exact moments agree")
            } else {
                format!("mismatches: {}", bad.join(", "))
            },
        ))
    })
}

pub fn count_oracles() -> CriterionResult {
    timed(3, "counts equal Lagrange, Catalan and Cayley oracles", None, || {
        let mut families = reference_families().to_vec();
        families.push(FamilySpec::new(FamilyKind::A, rational::ratio(1, 2), None, None)?);
        families.push(FamilySpec::new(FamilyKind::B, rational::ratio(3, 2), Some(5), None)?);
        families.push(FamilySpec::new(
            FamilyKind::C,
            rational::int(2),
            None,
            Some(rational::ratio(3, 2)),
        )?);
        let mut bad = Vec::new();
        for spec in &families {
            let counts = compute_counts(spec, 30, 30)?;
            let lagrange = oracle::lagrange_counts(spec, 30);
            for n in 1..=30 {
                if counts.exact(n).unwrap() != &lagrange[n - 1] {
                    bad.push(format!("{} n={n} (Lagrange)", spec.label()));
                }
            }
        }
        let ordered = compute_counts(&FamilySpec::ordered(), 20, 20)?;
        let cayley = compute_counts(&FamilySpec::cayley(), 20, 20)?;
        for n in 1..=20u32 {
            let catalan = Rational::from_integer(oracle::catalan(n - 1));
            if ordered.exact(n as usize).unwrap() != &catalan {
                bad.push(format!("ordered n={n} (Catalan)"));
            }
            if cayley.exact(n as usize).unwrap() != &oracle::cayley_count(n) {
                bad.push(format!("Cayley n={n} (n^(n-1)/n!)"));
            }
        }
        Ok(Outcome::new(
            bad.is_empty(),
            if bad.is_empty() {
                format!("{} families to n=30; Catalan and Cayley to n=20", families.len())
            } else {
                format!("mismatches: {}", bad.join(", "))
            },
        ))
    })
}

pub fn randomness_preservation(options: &BatteryOptions) -> CriterionResult {
    timed(4, "explicit destruction preserves randomness", Some(30.0), || {
        let spec = FamilySpec::ordered();
        let n = 10;
        let samples = 100_000;
        let toll = TollSpec::power(0.0)?;
        let counts = compute_counts(&spec, n, n)?;
        let split = split_distribution(&counts, n, false)?.to_f64();

        // first-cut law from literal two-sided cutting
        let mut rng = block_rng(options.seed, 0);
        let mut histogram = vec![0u64; n - 1];
        for _ in 0..samples {
            let tree = sample_tree_explicit(&spec, n, &mut rng)?;
            let sample = destroy_tree(&tree, Variant::TwoSided, &toll, &mut rng);
            histogram[sample.first_cut_root_size.expect("n > 1") - 1] += 1;
        }
        let gof = chi_square_gof(&histogram, &split)?;

        // one-sided mean from the explicit engine against the exact DP
        let dp = compute_moments(Variant::OneSided, &counts, &toll, n, 1, MomentOptions::exact())?;
        let exact_mean = dp.get(n, 1);
        let mut config = ExperimentConfig::new(spec, 0.0, n, Variant::OneSided, samples, options.seed);
        config.engine = crate::simulator::Engine::Explicit;
        config.workers = options.workers;
        let stats = run_experiment(&config)?;
        let z = (stats.moment_estimates[0] - exact_mean) / stats.standard_errors[0];
        let passed = gof.p_value > 1e-3 && z.abs() <= 4.0;
        Ok(Outcome::new(
            passed,
            format!(
                "chi2={:.2} (dof {}) p={:.3}; mean {:.4} vs DP {:.4}, z={z:.2}",
                gof.statistic, gof.degrees_of_freedom, gof.p_value, stats.moment_estimates[0], exact_mean
            ),
        ))
    })
}

fn float_table(spec: &FamilySpec, variant: Variant, alpha: f64, n: usize, s_max: usize) -> Result<MomentTable> {
    let counts = compute_counts(spec, n, 0)?;
    compute_moments(variant, &counts, &TollSpec::power(alpha)?, n, s_max, MomentOptions::default())
}

fn within(rows: &[ConvergenceRow], tol: f64) -> (bool, String) {
    let passed = rows.iter().all(|r| r.relative_error.is_some_and(|e| e <= tol));
    let detail = rows
        .iter()
        .map(|r| {
            format!(
                "s={}: {:.5} vs {:.5} ({:+.2}%)",
                r.s,
                r.normalized_moment,
                r.limit_m_s,
                100.0 * (r.normalized_moment - r.limit_m_s) / r.limit_m_s
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    (passed, detail)
}

pub fn one_sided_rayleigh() -> CriterionResult {
    timed(5, "one-sided alpha=0 Rayleigh limit (Cayley, n=10^4)", Some(120.0), || {
        let spec = FamilySpec::cayley();
        let n = 10_000;
        let t = float_table(&spec, Variant::OneSided, 0.0, n, 2)?;
        let constants = solve_constants(&spec)?;
        let report = normalize_moments(&t, &constants, None, &[n])?;
        let rows: Vec<ConvergenceRow> = report.rows.clone();
        // the limit values are the Rayleigh moments
        let expected = [(PI / 2.0).sqrt(), 2.0];
        let consistent = rows
            .iter()
            .all(|r| relative(r.limit_m_s, expected[r.s - 1]) < 1e-12);
        let (passed, detail) = within(&rows, 0.02);
        Ok(Outcome {
            passed: passed && consistent,
            detail: format!("{detail}; tolerance 2%"),
            convergence: rows,
        })
    })
}

pub fn two_sided_alpha_one() -> CriterionResult {
    timed(6, "two-sided alpha=1 limit (ordered, n=2000)", Some(300.0), || {
        let spec = FamilySpec::ordered();
        let n = 2000;
        let t = float_table(&spec, Variant::TwoSided, 1.0, n, 3)?;
        let constants = solve_constants(&spec)?;
        let report = normalize_moments(&t, &constants, None, &[n])?;
        let reference = oracle::two_sided_limit_unsymmetrized(1.0, 3);
        let expected = [(PI / 2.0).sqrt(), 5.0 / 3.0, reference[3]];
        let consistent = report
            .rows
            .iter()
            .all(|r| relative(r.limit_m_s, expected[r.s - 1]) < 1e-10);
        let (passed, detail) = within(&report.rows, 0.03);
        Ok(Outcome {
            passed: passed && consistent,
            detail: format!("{detail}; m_3 oracle {:.6}; tolerance 3%", reference[3]),
            convergence: report.rows,
        })
    })
}

pub fn family_independence() -> CriterionResult {
    timed(7, "family independence (Cayley vs ordered, alpha=1)", None, || {
        let ns = [250, 500, 1000, 2000];
        let mut reports = Vec::new();
        for spec in [FamilySpec::cayley(), FamilySpec::ordered()] {
            let t = float_table(&spec, Variant::TwoSided, 1.0, 2000, 3)?;
            reports.push(normalize_moments(&t, &solve_constants(&spec)?, None, &ns)?);
        }
        let mut passed = true;
        let mut parts = Vec::new();
        let mut rows = Vec::new();
        for s in 1..=3 {
            let check = family_independence_check(&reports[0], &reports[1], s)?;
            passed &= check.strictly_decreasing;
            parts.push(format!(
                "s={s}: {}",
                check
                    .rows
                    .iter()
                    .map(|r| format!("{:.2e}", r.difference))
                    .collect::<Vec<_>>()
                    .join(" > ")
            ));
            rows.extend(reports[0].rows.iter().filter(|r| r.s == s).copied());
        }
        Ok(Outcome {
            passed,
            detail: parts.join("; "),
            convergence: rows,
        })
    })
}

pub fn half_regime_mean() -> CriterionResult {
    timed(8, "alpha=1/2 n ln n coefficient and delta stability", None, || {
        let mut passed = true;
        let mut parts = Vec::new();
        for spec in [FamilySpec::ordered(), FamilySpec::cayley()] {
            let constants = solve_constants(&spec)?;
            let big = float_table(&spec, Variant::TwoSided, 0.5, 4000, 1)?;
            let small = float_table(&spec, Variant::TwoSided, 0.5, 2000, 1)?;
            let fit = crate::analysis::estimate_delta(&big, &constants, 500)?;
            let half = crate::analysis::estimate_delta(&small, &constants, 250)?;
            let stable = agrees_to_sig_figs(fit.delta, half.delta, 2);
            let ok = fit.leading_relative_error <= 0.03 && stable;
            passed &= ok;
            parts.push(format!(
                "{}: leading {:.5} vs {:.5} ({:.2}%), delta {:.4} (n_max 4000) / {:.4} (n_max 2000)",
                spec.label(),
                fit.free_leading,
                fit.predicted_leading,
                100.0 * fit.leading_relative_error,
                fit.delta,
                half.delta
            ));
        }
        Ok(Outcome::new(passed, parts.join("; ")))
    })
}

pub fn one_sided_alpha_one() -> CriterionResult {
    timed(9, "one-sided alpha=1 product formula (ordered, n=2000)", None, || {
        let spec = FamilySpec::ordered();
        let n = 2000;
        let t = float_table(&spec, Variant::OneSided, 1.0, n, 2)?;
        let report = normalize_moments(&t, &solve_constants(&spec)?, None, &[n])?;
        let expected = [(PI / 8.0).sqrt(), 8.0 / 15.0];
        let consistent = report
            .rows
            .iter()
            .all(|r| relative(r.limit_m_s, expected[r.s - 1]) < 1e-12);
        let (passed, detail) = within(&report.rows, 0.03);
        Ok(Outcome {
            passed: passed && consistent,
            detail: format!("{detail}; tolerance 3%"),
            convergence: report.rows,
        })
    })
}

pub fn j_integrals() -> CriterionResult {
    timed(10, "J integrals", None, || {
        let a = j_integral_with(0, 1, 1, JScheme::TanhSinh)?;
        let b = j_integral_with(0, 2, 1, JScheme::TanhSinh)?;
        let mut passed = (a - PI / 2.0).abs() <= 1e-8 && (b - 3.0 * PI / 8.0).abs() <= 1e-8;
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for s in 2..=4u32 {
            for s2 in 0..s {
                for s3 in 0..s {
                    if s2 + s3 > s {
                        continue;
                    }
                    let s1 = s - s2 - s3;
                    let x = j_integral_with(s1, s2, s3, JScheme::TanhSinh)?;
                    let y = j_integral_with(s1, s2, s3, JScheme::SubstitutedKronrod)?;
                    worst = worst.max((x - y).abs());
                    count += 1;
                }
            }
        }
        passed &= worst <= 1e-8;
        Ok(Outcome::new(
            passed,
            format!(
                "J(0,1,1)-pi/2 = {:.1e}, J(0,2,1)-3pi/8 = {:.1e}; {count} index triples, max scheme gap {worst:.1e}",
                a - PI / 2.0,
                b - 3.0 * PI / 8.0
            ),
        ))
    })
}

pub fn monte_carlo_consistency(options: &BatteryOptions) -> CriterionResult {
    timed(11, "size-process Monte Carlo vs DP (ordered, alpha=1, n=200)", None, || {
        let spec = FamilySpec::ordered();
        let n = 200;
        let counts = compute_counts(&spec, n, n)?;
        let toll = TollSpec::power(1.0)?;
        let mut passed = true;
        let mut parts = Vec::new();
        for variant in [Variant::OneSided, Variant::TwoSided] {
            let dp = compute_moments(variant, &counts, &toll, n, 1, MomentOptions::exact())?;
            let mut config = ExperimentConfig::new(spec.clone(), 1.0, n, variant, 100_000, options.seed);
            config.workers = 1;
            let serial = run_experiment(&config)?;
            config.workers = 4;
            let parallel = run_experiment(&config)?;
            let identical = serial == parallel;
            let z = (serial.moment_estimates[0] - dp.get(n, 1)) / serial.standard_errors[0];
            passed &= identical && z.abs() <= 4.0;
            parts.push(format!(
                "{variant}: mean {:.3} vs DP {:.3}, z={z:.2}, replay {}",
                serial.moment_estimates[0],
                dp.get(n, 1),
                if identical { "identical" } else { "differs" }
            ));
        }
        Ok(Outcome::new(passed, parts.join("; ")))
    })
}

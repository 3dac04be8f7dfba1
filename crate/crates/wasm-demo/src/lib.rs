//! wasm-bindgen exports for the static page in `www/`. Every export takes a
//! family config block (`kind=C\nalpha0=1\nalpha1=1`) where it needs a family
//! and returns a JSON string.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use treecut_core::analysis::{convergence_report, geometric_grid, ConvergenceRow};
use treecut_core::counts::{compute_counts, split_distribution};
use treecut_core::family::{solve_constants, FamilySpec};
use treecut_core::limit_laws::{limit_moments_one_sided, limit_moments_two_sided, limit_moments_two_sided_half};
use treecut_core::moments::{compute_moments, MomentOptions, TollSpec, Variant};

/// Largest tree size the page may request; the DP is quadratic in n.
pub const DEMO_N_MAX: usize = 4000;

#[derive(Serialize)]
struct SplitLaw {
    family: String,
    n: usize,
    probabilities: Vec<f64>,
}

#[derive(Serialize)]
struct LimitCurvePoint {
    alpha: f64,
    m: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct Convergence {
    family: String,
    regime: String,
    rows: Vec<ConvergenceRow>,
    fitted: Option<(String, f64)>,
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

fn family(config: &str) -> Result<FamilySpec, String> {
    FamilySpec::from_config(config).map_err(|e| e.to_string())
}

/// `p_{n,1}, ..., p_{n,n-1}` for the family.
pub fn split_law_json(config: &str, n: usize, symmetrized: bool) -> Result<String, String> {
    let spec = family(config)?;
    if !(2..=DEMO_N_MAX).contains(&n) {
        return Err(format!("n must lie in 2..={DEMO_N_MAX}"));
    }
    let counts = compute_counts(&spec, n, 0).map_err(|e| e.to_string())?;
    let split = split_distribution(&counts, n, symmetrized).map_err(|e| e.to_string())?;
    to_json(&SplitLaw {
        family: spec.label(),
        n,
        probabilities: split.to_f64(),
    })
}

/// Limit moments `m_0..m_smax` at `points` values of α spread over `[lo, hi]`.
/// Points where the law is undefined carry `null`.
pub fn limit_curve_json(variant: &str, lo: f64, hi: f64, points: usize, s_max: usize) -> Result<String, String> {
    let variant: Variant = variant.parse().map_err(|e: treecut_core::Error| e.to_string())?;
    if !(2..=1000).contains(&points) || lo.is_nan() || hi.is_nan() || lo >= hi || lo < 0.0 {
        return Err("need 0 <= lo < hi and 2..=1000 points".into());
    }
    let curve: Vec<LimitCurvePoint> = (0..points)
        .map(|i| {
            let alpha = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            let m = match variant {
                Variant::OneSided => limit_moments_one_sided(alpha, s_max),
                Variant::TwoSided if alpha == 0.5 => limit_moments_two_sided_half(s_max),
                Variant::TwoSided => limit_moments_two_sided(alpha, s_max),
            };
            LimitCurvePoint { alpha, m: m.ok().map(|l| l.m) }
        })
        .collect();
    to_json(&curve)
}

/// Normalized moments of order `1..=s_max` along a geometric grid up to `n_max`,
/// next to their limits.
pub fn convergence_json(config: &str, variant: &str, alpha: f64, n_max: usize, s_max: usize) -> Result<String, String> {
    let spec = family(config)?;
    let variant: Variant = variant.parse().map_err(|e: treecut_core::Error| e.to_string())?;
    if !(16..=DEMO_N_MAX).contains(&n_max) {
        return Err(format!("n_max must lie in 16..={DEMO_N_MAX}"));
    }
    let toll = TollSpec::power(alpha).map_err(|e| e.to_string())?;
    let counts = compute_counts(&spec, n_max, 0).map_err(|e| e.to_string())?;
    let table = compute_moments(variant, &counts, &toll, n_max, s_max, MomentOptions::default())
        .map_err(|e| e.to_string())?;
    let constants = solve_constants(&spec).map_err(|e| e.to_string())?;
    let grid = geometric_grid(8, n_max);
    let report = convergence_report(&table, &constants, &grid).map_err(|e| e.to_string())?;
    to_json(&Convergence {
        family: spec.label(),
        regime: format!("{:?}", report.regime),
        rows: report.rows,
        fitted: report.fitted_coefficients.map(|f| (f.name, f.value)),
    })
}

#[wasm_bindgen(js_name = splitLaw)]
pub fn split_law(config: &str, n: usize, symmetrized: bool) -> Result<String, JsValue> {
    split_law_json(config, n, symmetrized).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = limitCurve)]
pub fn limit_curve(variant: &str, lo: f64, hi: f64, points: usize, s_max: usize) -> Result<String, JsValue> {
    limit_curve_json(variant, lo, hi, points, s_max).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = convergence)]
pub fn convergence(config: &str, variant: &str, alpha: f64, n_max: usize, s_max: usize) -> Result<String, JsValue> {
    convergence_json(config, variant, alpha, n_max, s_max).map_err(|e| JsValue::from_str(&e))
}

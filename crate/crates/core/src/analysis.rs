//! Finite-n moments against their limits: normalization, fitted linear
//! coefficients, and comparisons across families.
//!
//! The linear coefficients `μ` (two-sided, `α < 1/2`) and `δ` (two-sided,
//! `α = 1/2`) are obtained by least squares on the exact means and are
//! reported as estimates.

use nalgebra::{DMatrix, DVector};
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::FamilyConstants;
use crate::limit_laws::{
    limit_moments_one_sided, limit_moments_two_sided, limit_moments_two_sided_half, HALF_EXCLUSION,
};
use crate::moments::{shifted_moments, MomentTable, SizeOneCost, Variant};
use crate::rational::{self, Rational};

/// Condition number (after column scaling) above which a fit is rejected.
pub const MAX_CONDITION: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Two-sided, `α = 0`: the cost is deterministic and linear in `n`.
    Degenerate,
    /// Two-sided, `α > 1/2`.
    TwoSidedAbove,
    /// Two-sided, `0 < α < 1/2`; needs the fitted `μ`.
    TwoSidedBelow,
    /// Two-sided, `α = 1/2`; needs the fitted `δ`.
    TwoSidedHalf,
    OneSided,
}

impl Regime {
    pub fn of(variant: Variant, alpha: f64) -> Regime {
        match variant {
            Variant::OneSided => Regime::OneSided,
            Variant::TwoSided if alpha == 0.0 => Regime::Degenerate,
            Variant::TwoSided if (alpha - 0.5).abs() < HALF_EXCLUSION => Regime::TwoSidedHalf,
            Variant::TwoSided if alpha > 0.5 => Regime::TwoSidedAbove,
            Variant::TwoSided => Regime::TwoSidedBelow,
        }
    }

    pub fn needs_shift(self) -> bool {
        matches!(self, Regime::TwoSidedBelow | Regime::TwoSidedHalf)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub s: usize,
    pub normalized_moment: f64,
    pub limit_m_s: f64,
    /// `None` when the limit is zero.
    pub relative_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedCoefficient {
    /// `"mu"` or `"delta"`.
    pub name: String,
    pub value: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub family: String,
    pub variant: Variant,
    pub alpha: f64,
    pub regime: Regime,
    pub rows: Vec<ConvergenceRow>,
    pub fitted_coefficients: Option<FittedCoefficient>,
}

impl ConvergenceReport {
    /// Normalized moment of order `s` at size `n`, if reported.
    pub fn normalized(&self, n: usize, s: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.n == n && r.s == s)
            .map(|r| r.normalized_moment)
    }

    pub fn row(&self, n: usize, s: usize) -> Option<&ConvergenceRow> {
        self.rows.iter().find(|r| r.n == n && r.s == s)
    }
}

fn power_alpha(table: &MomentTable) -> Result<f64> {
    table
        .toll
        .alpha()
        .ok_or_else(|| Error::InvalidConfig("normalization needs a power toll n^alpha".into()))
}

/// Normalized moments at the sizes `ns` for orders `1..=s_max`.
///
/// `coefficient` is the fitted `μ` (two-sided, `α < 1/2`) or `δ`
/// (two-sided, `α = 1/2`); other regimes ignore it.
pub fn normalize_moments(
    table: &MomentTable,
    constants: &FamilyConstants,
    coefficient: Option<f64>,
    ns: &[usize],
) -> Result<ConvergenceReport> {
    let alpha = power_alpha(table)?;
    let regime = Regime::of(table.variant, alpha);
    if regime.needs_shift() && coefficient.is_none() {
        return Err(Error::MissingShift(format!(
            "two-sided alpha = {alpha} needs a fitted linear coefficient"
        )));
    }
    if let Some(&bad) = ns.iter().find(|&&n| n == 0 || n > table.n_max) {
        return Err(Error::OutOfRange {
            index: bad,
            max: table.n_max,
        });
    }
    let s_max = table.s_max;
    let sigma = constants.sigma;
    let ap = alpha + 0.5;
    let limits: Vec<f64> = match regime {
        Regime::Degenerate => {
            let slope: f64 = match table.toll.size_one() {
                SizeOneCost::Free => 1.0,
                SizeOneCost::Toll => 2.0,
            };
            (0..=s_max).map(|s| slope.powi(s as i32)).collect()
        }
        Regime::TwoSidedAbove | Regime::TwoSidedBelow => limit_moments_two_sided(alpha, s_max)?.m,
        Regime::TwoSidedHalf => limit_moments_two_sided_half(s_max.max(2))?.m,
        Regime::OneSided => limit_moments_one_sided(alpha, s_max)?.m,
    };
    let shift = |n: usize| -> f64 {
        let nf = n as f64;
        match (regime, coefficient) {
            (Regime::TwoSidedBelow, Some(mu)) => mu * nf,
            (Regime::TwoSidedHalf, Some(delta)) => {
                sigma / (2.0 * std::f64::consts::PI).sqrt() * nf * nf.ln() + delta * nf
            }
            _ => 0.0,
        }
    };
    let mut rows = Vec::with_capacity(ns.len() * s_max);
    for s in 1..=s_max {
        let shifted = shifted_moments(table, shift, s);
        for &n in ns {
            let nf = n as f64;
            let scale = match regime {
                Regime::Degenerate => nf.powi(s as i32),
                Regime::TwoSidedHalf => (sigma * nf).powi(s as i32),
                _ => (sigma * nf.powf(ap)).powi(s as i32),
            };
            let normalized = shifted[n - 1] / scale;
            let limit = limits[s];
            rows.push(ConvergenceRow {
                n,
                s,
                normalized_moment: normalized,
                limit_m_s: limit,
                relative_error: (limit != 0.0).then(|| ((normalized - limit) / limit).abs()),
            });
        }
    }
    let fitted_coefficients = match regime {
        Regime::TwoSidedBelow => coefficient.map(|v| ("mu", v)),
        Regime::TwoSidedHalf => coefficient.map(|v| ("delta", v)),
        _ => None,
    }
    .map(|(name, value)| FittedCoefficient {
        name: name.into(),
        value,
        residual: f64::NAN,
    });
    Ok(ConvergenceReport {
        family: table.family.label(),
        variant: table.variant,
        alpha,
        regime,
        rows,
        fitted_coefficients,
    })
}

/// Like [`normalize_moments`], fitting the shift first when the regime needs one.
pub fn convergence_report(
    table: &MomentTable,
    constants: &FamilyConstants,
    ns: &[usize],
) -> Result<ConvergenceReport> {
    let alpha = power_alpha(table)?;
    let fitted = match Regime::of(table.variant, alpha) {
        Regime::TwoSidedBelow => {
            let e = estimate_mu(table)?;
            Some(FittedCoefficient {
                name: "mu".into(),
                value: e.mu,
                residual: e.residual,
            })
        }
        Regime::TwoSidedHalf => {
            let e = estimate_delta(table, constants, table.n_max / 8)?;
            Some(FittedCoefficient {
                name: "delta".into(),
                value: e.delta,
                residual: e.residual,
            })
        }
        _ => None,
    };
    let mut report = normalize_moments(table, constants, fitted.as_ref().map(|f| f.value), ns)?;
    report.fitted_coefficients = fitted;
    Ok(report)
}

/// Geometric grid of sizes from `lo` to `hi` with `2^{1/4}` spacing.
pub fn geometric_grid(lo: usize, hi: usize) -> Vec<usize> {
    let mut grid = Vec::new();
    let mut j = 0;
    loop {
        let n = (hi as f64 * 2f64.powf(-0.25 * j as f64)).round() as usize;
        if n < lo.max(1) {
            break;
        }
        if grid.last() != Some(&n) {
            grid.push(n);
        }
        j += 1;
    }
    if grid.last() != Some(&lo) && lo >= 1 && lo < hi {
        grid.push(lo);
    }
    grid.reverse();
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeastSquaresFit {
    pub coefficients: Vec<f64>,
    /// Root-mean-square of the relative residuals.
    pub residual: f64,
    /// Condition number of the column-scaled design matrix.
    pub condition: f64,
}

/// Least squares of `y ≈ Σ_j c_j f_j(n)` over the sizes in `grid`, with
/// relative weighting so large `n` does not dominate.
pub fn fit_basis(
    grid: &[usize],
    y: impl Fn(usize) -> f64,
    basis: &[&dyn Fn(f64) -> f64],
) -> Result<LeastSquaresFit> {
    let rows = grid.len();
    let cols = basis.len();
    if rows < cols {
        return Err(Error::InvalidConfig(format!(
            "{rows} grid points cannot determine {cols} coefficients"
        )));
    }
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    let mut b = DVector::<f64>::zeros(rows);
    for (i, &n) in grid.iter().enumerate() {
        let value = y(n);
        let w = 1.0 / value.abs().max(f64::MIN_POSITIVE);
        b[i] = value * w;
        for (j, f) in basis.iter().enumerate() {
            a[(i, j)] = f(n as f64) * w;
        }
    }
    let scales: Vec<f64> = (0..cols).map(|j| a.column(j).norm().max(f64::MIN_POSITIVE)).collect();
    for (j, s) in scales.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let condition = sv.max() / sv.min();
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::IllConditioned(condition));
    }
    let x = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::InvalidConfig(format!("least squares failed: {e}")))?;
    let residual = ((&a * &x - &b).norm_squared() / rows as f64).sqrt();
    Ok(LeastSquaresFit {
        coefficients: (0..cols).map(|j| x[j] / scales[j]).collect(),
        residual,
        condition,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuEstimate {
    /// Fitted linear coefficient `μ̂`.
    pub mu: f64,
    pub residual: f64,
    pub condition: f64,
    /// The same fit using only sizes up to `n_max / 2`.
    pub mu_half_range: Option<f64>,
    /// Exact slope, when the exact means are affine in `n` over the grid.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exact_slope: Option<String>,
}

fn mu_fit(table: &MomentTable, alpha: f64, n_max: usize) -> Result<LeastSquaresFit> {
    let grid = geometric_grid(n_max / 8, n_max);
    let ap = alpha + 0.5;
    fit_basis(
        &grid,
        |n| table.get(n, 1),
        &[&|n: f64| n, &move |n: f64| n.powf(ap), &move |n: f64| n.powf(alpha)],
    )
}

/// Fits `μ_n^{[1]} ≈ μ n + A n^{α+1/2} + B n^α` on a geometric grid over `[n_max/8, n_max]`.
pub fn estimate_mu(table: &MomentTable) -> Result<MuEstimate> {
    let alpha = power_alpha(table)?;
    if alpha >= 0.5 {
        return Err(Error::InvalidConfig(format!(
            "the linear coefficient is only defined for alpha < 1/2, got {alpha}"
        )));
    }
    if table.n_max < 512 {
        return Err(Error::InvalidConfig(format!(
            "estimate_mu needs n_max >= 512, got {}",
            table.n_max
        )));
    }
    let fit = mu_fit(table, alpha, table.n_max)?;
    let mu_half_range = mu_fit(table, alpha, table.n_max / 2).ok().map(|f| f.coefficients[0]);
    Ok(MuEstimate {
        mu: fit.coefficients[0],
        residual: fit.residual,
        condition: fit.condition,
        mu_half_range,
        exact_slope: exact_affine_slope(table).map(|q| rational::format(&q)),
    })
}

/// Slope of the exact means over the fit grid, when they lie exactly on a line.
fn exact_affine_slope(table: &MomentTable) -> Option<Rational> {
    let grid = geometric_grid(table.n_max / 8, table.n_max);
    let first = grid[0];
    let y0 = table.exact(first, 1)?;
    let mut slope: Option<Rational> = None;
    for &n in &grid[1..] {
        let q = (table.exact(n, 1)? - y0) / rational::int((n - first) as i64);
        match &slope {
            None => slope = Some(q),
            Some(s) if *s == q => {}
            Some(_) => return None,
        }
    }
    slope.filter(|s| !s.is_zero() || grid.len() > 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    /// `δ̂` with the `n ln n` coefficient fixed at `σ/√(2π)`.
    pub delta: f64,
    pub residual: f64,
    /// Free fit: estimated `n ln n` coefficient.
    pub free_leading: f64,
    /// Free fit: `δ` alongside the estimated leading coefficient.
    pub free_delta: f64,
    /// `σ/√(2π)`.
    pub predicted_leading: f64,
    /// `|free_leading − predicted_leading| / predicted_leading`.
    pub leading_relative_error: f64,
    pub n_min: usize,
    pub n_max: usize,
}

/// Fits the two-sided `α = 1/2` mean over `[n_min, n_max]`:
/// `μ_n^{[1]} − (σ/√(2π)) n ln n ≈ δ n + C √n ln n`, and the free version
/// `μ_n^{[1]} ≈ a n ln n + δ n + C √n ln n`.
pub fn estimate_delta(table: &MomentTable, constants: &FamilyConstants, n_min: usize) -> Result<DeltaEstimate> {
    let alpha = power_alpha(table)?;
    if table.variant != Variant::TwoSided || (alpha - 0.5).abs() >= HALF_EXCLUSION {
        return Err(Error::InvalidConfig("estimate_delta needs a two-sided table at alpha = 1/2".into()));
    }
    if table.n_max < 1000 {
        return Err(Error::InvalidConfig(format!(
            "estimate_delta needs n_max >= 1000, got {}",
            table.n_max
        )));
    }
    let n_min = n_min.max(2);
    let grid = geometric_grid(n_min, table.n_max);
    let lead = constants.sigma / (2.0 * std::f64::consts::PI).sqrt();
    let n_ln_n = |n: f64| n * n.ln();
    let sqrt_ln = |n: f64| n.sqrt() * n.ln();
    let linear = |n: f64| n;
    let fixed = fit_basis(
        &grid,
        |n| table.get(n, 1) - lead * n_ln_n(n as f64),
        &[&linear, &sqrt_ln],
    )?;
    let free = fit_basis(&grid, |n| table.get(n, 1), &[&n_ln_n, &linear, &sqrt_ln])?;
    Ok(DeltaEstimate {
        delta: fixed.coefficients[0],
        residual: fixed.residual,
        free_leading: free.coefficients[0],
        free_delta: free.coefficients[1],
        predicted_leading: lead,
        leading_relative_error: ((free.coefficients[0] - lead) / lead).abs(),
        n_min,
        n_max: table.n_max,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceRow {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceCheck {
    pub s: usize,
    pub rows: Vec<IndependenceRow>,
    pub strictly_decreasing: bool,
    pub final_below_first: bool,
}

/// `|normalized_a(n) − normalized_b(n)|` over the sizes both reports share.
pub fn family_independence_check(
    a: &ConvergenceReport,
    b: &ConvergenceReport,
    s: usize,
) -> Result<IndependenceCheck> {
    if a.variant != b.variant || a.alpha != b.alpha {
        return Err(Error::InvalidConfig(
            "reports must share the variant and toll exponent".into(),
        ));
    }
    let rows: Vec<IndependenceRow> = a
        .rows
        .iter()
        .filter(|r| r.s == s)
        .filter_map(|r| {
            b.normalized(r.n, s).map(|other| IndependenceRow {
                n: r.n,
                a: r.normalized_moment,
                b: other,
                difference: (r.normalized_moment - other).abs(),
            })
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::InvalidConfig(format!("no common sizes for order {s}")));
    }
    let strictly_decreasing = rows.windows(2).all(|w| w[1].difference < w[0].difference);
    let final_below_first = rows.len() == 1 || rows[rows.len() - 1].difference < rows[0].difference;
    Ok(IndependenceCheck {
        s,
        rows,
        strictly_decreasing,
        final_below_first,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counts::compute_counts;
    use crate::family::{solve_constants, FamilySpec};
    use crate::moments::{compute_moments, MomentOptions, TollSpec};

    fn table(spec: &FamilySpec, variant: Variant, toll: TollSpec, n_max: usize, s_max: usize) -> MomentTable {
        let counts = compute_counts(spec, n_max, 0).unwrap();
        compute_moments(variant, &counts, &toll, n_max, s_max, MomentOptions::default()).unwrap()
    }

    #[test]
    fn grid_shape() {
        let g = geometric_grid(125, 1000);
        assert_eq!(g.first(), Some(&125));
        assert_eq!(g.last(), Some(&1000));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g.len() >= 4);
    }

    #[test]
    fn degenerate_regime_normalizes_to_one() {
        let free = TollSpec::power(0.0).unwrap().with_size_one(SizeOneCost::Free);
        let t = table(&FamilySpec::ordered(), Variant::TwoSided, free, 200, 2);
        let k = solve_constants(&FamilySpec::ordered()).unwrap();
        let r = normalize_moments(&t, &k, None, &[10, 100, 200]).unwrap();
        assert_eq!(r.regime, Regime::Degenerate);
        assert!((r.normalized(200, 1).unwrap() - 199.0 / 200.0).abs() < 1e-12);
        assert_eq!(r.row(200, 1).unwrap().limit_m_s, 1.0);
    }

    #[test]
    fn missing_shift() {
        let t = table(&FamilySpec::ordered(), Variant::TwoSided, TollSpec::power(0.25).unwrap(), 100, 2);
        let k = solve_constants(&FamilySpec::ordered()).unwrap();
        assert!(matches!(
            normalize_moments(&t, &k, None, &[50]),
            Err(Error::MissingShift(_))
        ));
        assert!(normalize_moments(&t, &k, Some(1.0), &[50]).is_ok());
    }

    #[test]
    fn mu_for_edge_count() {
        let free = TollSpec::power(0.0).unwrap().with_size_one(SizeOneCost::Free);
        let t = table(&FamilySpec::cayley(), Variant::TwoSided, free, 1024, 1);
        let e = estimate_mu(&t).unwrap();
        assert!((e.mu - 1.0).abs() < 1e-9, "{}", e.mu);
        assert!(e.exact_slope.is_none());

        let counts = compute_counts(&FamilySpec::cayley(), 600, 600).unwrap();
        let free = TollSpec::power(0.0).unwrap().with_size_one(SizeOneCost::Free);
        let exact = compute_moments(Variant::TwoSided, &counts, &free, 600, 1, MomentOptions::exact()).unwrap();
        let e = estimate_mu(&exact).unwrap();
        assert_eq!(e.exact_slope.as_deref(), Some("1"));
    }

    #[test]
    fn mu_near_half_is_ill_conditioned() {
        let t = table(&FamilySpec::ordered(), Variant::TwoSided, TollSpec::power(0.49).unwrap(), 1024, 1);
        assert!(matches!(estimate_mu(&t), Err(Error::IllConditioned(_))));
        let small = table(&FamilySpec::ordered(), Variant::TwoSided, TollSpec::power(0.25).unwrap(), 256, 1);
        assert!(estimate_mu(&small).is_err());
    }

    #[test]
    fn fit_recovers_known_coefficients() {
        let grid = geometric_grid(100, 3200);
        let fit = fit_basis(
            &grid,
            |n| 3.0 * n as f64 - 2.0 * (n as f64).sqrt() + 0.5,
            &[&|n: f64| n, &|n: f64| n.sqrt(), &|_: f64| 1.0],
        )
        .unwrap();
        assert!((fit.coefficients[0] - 3.0).abs() < 1e-10);
        assert!((fit.coefficients[1] + 2.0).abs() < 1e-8);
        assert!((fit.coefficients[2] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn independence_same_family_is_zero() {
        let t = table(&FamilySpec::ordered(), Variant::TwoSided, TollSpec::power(1.0).unwrap(), 400, 2);
        let k = solve_constants(&FamilySpec::ordered()).unwrap();
        let r = normalize_moments(&t, &k, None, &[100, 200, 400]).unwrap();
        let c = family_independence_check(&r, &r, 2).unwrap();
        assert!(c.rows.iter().all(|row| row.difference == 0.0));
        assert!(!c.strictly_decreasing);
    }
}

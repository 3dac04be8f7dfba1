//! Moments `m_s` of the limiting distributions and leading terms of the means.
//!
//! Three regimes:
//!
//! - two-sided with `α ≠ 1/2`, a recurrence in `s` with gamma-ratio
//!   coefficients (for `α < 1/2` it describes the centered cost);
//! - two-sided with `α = 1/2`, where the coefficients are the integrals
//!   `J_{s1,s2,s3}`;
//! - one-sided, a closed-form product (Rayleigh at `α = 0`).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::FamilyConstants;
use crate::moments::Variant;
use crate::quadrature;
use crate::special::{binomial_f64, gamma, ln_gamma_signed, multinomial3};

/// Default number of limit moments.
pub const DEFAULT_S_MAX: usize = 8;

/// Distance from `α = 1/2` inside which the generic two-sided recurrence refuses to run.
pub const HALF_EXCLUSION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitRegime {
    TwoSidedGeneric { alpha: f64 },
    TwoSidedHalf,
    OneSided { alpha: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitMoments {
    pub regime: LimitRegime,
    /// `m_0, ..., m_{s_max}`
    pub m: Vec<f64>,
}

impl LimitMoments {
    pub fn s_max(&self) -> usize {
        self.m.len() - 1
    }

    pub fn get(&self, s: usize) -> f64 {
        self.m[s]
    }
}

/// `Π Γ(num_i) / Π Γ(den_j)` through log-gamma, keeping track of signs.
fn gamma_fraction(num: &[f64], den: &[f64]) -> f64 {
    let mut log = 0.0;
    let mut sign = 1.0;
    for &x in num {
        let (l, s) = ln_gamma_signed(x);
        log += l;
        sign *= s;
    }
    for &x in den {
        let (l, s) = ln_gamma_signed(x);
        log -= l;
        sign *= s;
    }
    sign * log.exp()
}

/// Limit moments of `σ^{−s} n^{−sα'} X_n` (for `α < 1/2`, of the centered cost).
pub fn limit_moments_two_sided(alpha: f64, s_max: usize) -> Result<LimitMoments> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::DomainError(format!(
            "two-sided limit law needs alpha > 0, got {alpha}"
        )));
    }
    if (alpha - 0.5).abs() < HALF_EXCLUSION {
        return Err(Error::DomainError(format!(
            "alpha = {alpha} is at the pole of Γ(α − 1/2); use the alpha = 1/2 regime"
        )));
    }
    if s_max < 1 {
        return Err(Error::InvalidConfig("s_max must be at least 1".into()));
    }
    let ap = alpha + 0.5;
    let mut m = vec![1.0, gamma_fraction(&[alpha - 0.5], &[alpha]) / 2f64.sqrt()];
    for s in 2..=s_max {
        let sf = s as f64;
        let mut convolution = 0.0;
        for k in 1..s {
            let kf = k as f64;
            convolution += binomial_f64(s, k)
                * gamma_fraction(
                    &[kf * ap - 0.5, (sf - kf) * ap - 0.5],
                    &[sf * ap - 0.5],
                )
                * m[k]
                * m[s - k];
        }
        let last = sf * gamma_fraction(&[sf * ap - 1.0], &[sf * ap - 0.5]) / 2f64.sqrt() * m[s - 1];
        m.push(convolution / (4.0 * PI.sqrt()) + last);
    }
    Ok(LimitMoments {
        regime: LimitRegime::TwoSidedGeneric { alpha },
        m,
    })
}

/// Quadrature scheme for [`j_integral_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JScheme {
    /// Tanh-sinh on `[0, 1/2]` and `[1/2, 1]`.
    TanhSinh,
    /// `x = u²` on the left half, `1 − x = v²` on the right, then adaptive Gauss–Kronrod.
    SubstitutedKronrod,
}

fn check_j_indices(s1: u32, s2: u32, s3: u32) -> Result<()> {
    let s = s1 + s2 + s3;
    if s < 2 || s2 >= s || s3 >= s {
        return Err(Error::NonIntegrable { s1, s2, s3 });
    }
    Ok(())
}

/// `x ln x + (1 − x) ln(1 − x)` from `x` and `y = 1 − x`, accurate near both ends.
fn entropy_term(x: f64, y: f64) -> f64 {
    let (ln_x, ln_y) = if x <= y {
        (x.ln(), (-x).ln_1p())
    } else {
        ((-y).ln_1p(), y.ln())
    };
    let a = if x > 0.0 { x * ln_x } else { 0.0 };
    let b = if y > 0.0 { y * ln_y } else { 0.0 };
    a + b
}

fn j_integrand(s1: u32, s2: u32, s3: u32, x: f64, y: f64) -> f64 {
    if x <= 0.0 || y <= 0.0 {
        return 0.0;
    }
    let g = if s1 == 0 { 1.0 } else { entropy_term(x, y).powi(s1 as i32) };
    g * x.powf(s2 as f64 - 0.5) * y.powf(s3 as f64 - 1.5)
}

/// `J_{s1,s2,s3} = ∫_0^1 [x ln x + (1−x) ln(1−x)]^{s1} x^{s2−1/2} (1−x)^{s3−3/2} dx`
/// by tanh-sinh quadrature.
pub fn j_integral(s1: u32, s2: u32, s3: u32) -> Result<f64> {
    j_integral_with(s1, s2, s3, JScheme::TanhSinh)
}

pub fn j_integral_with(s1: u32, s2: u32, s3: u32, scheme: JScheme) -> Result<f64> {
    check_j_indices(s1, s2, s3)?;
    const TOL: f64 = 1e-13;
    let value = match scheme {
        JScheme::TanhSinh => {
            let left = quadrature::tanh_sinh(|x, d| j_integrand(s1, s2, s3, x, 0.5 + d), 0.0, 0.5, TOL);
            let right = quadrature::tanh_sinh(|d, y| j_integrand(s1, s2, s3, 0.5 + d, y), 0.0, 0.5, TOL);
            left.value + right.value
        }
        JScheme::SubstitutedKronrod => {
            let edge = 0.5f64.sqrt();
            let left = quadrature::gauss_kronrod(
                |u, _| {
                    let x = u * u;
                    2.0 * u * j_integrand(s1, s2, s3, x, 1.0 - x)
                },
                0.0,
                edge,
                TOL,
            );
            let right = quadrature::gauss_kronrod(
                |v, _| {
                    let y = v * v;
                    2.0 * v * j_integrand(s1, s2, s3, 1.0 - y, y)
                },
                0.0,
                edge,
                TOL,
            );
            left.value + right.value
        }
    };
    Ok(value)
}

/// Limit moments of `n^{−1} X̃_n` at `α = 1/2`, where
/// `X̃_n = X_n − (σ/√(2π)) n ln n − δ n`.
pub fn limit_moments_two_sided_half(s_max: usize) -> Result<LimitMoments> {
    if s_max < 2 {
        return Err(Error::InvalidConfig("s_max must be at least 2".into()));
    }
    let inv = 1.0 / (2.0 * PI).sqrt();
    let mut m = vec![1.0, 0.0];
    for s in 2..=s_max {
        let mut total = 0.0;
        for s2 in 0..s {
            for s3 in 0..s - s2 {
                let s1 = s - s2 - s3;
                if m[s2] == 0.0 || m[s3] == 0.0 {
                    continue;
                }
                let j = j_integral(s1 as u32, s2 as u32, s3 as u32)?;
                total += multinomial3(s1, s2, s3) * inv.powi(s1 as i32) * m[s2] * m[s3] * j;
            }
        }
        let sf = s as f64;
        m.push(gamma_fraction(&[sf - 1.0], &[sf - 0.5]) / (2.0 * PI.sqrt()) * total);
    }
    Ok(LimitMoments {
        regime: LimitRegime::TwoSidedHalf,
        m,
    })
}

/// `m_s = s! / 2^{s/2} Π_{j=1}^{s} Γ(jα') / Γ(jα' + 1/2)`, limit moments of `σ^{−s} n^{−sα'} Y_n`.
pub fn limit_moments_one_sided(alpha: f64, s_max: usize) -> Result<LimitMoments> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::DomainError(format!(
            "one-sided limit law needs alpha >= 0, got {alpha}"
        )));
    }
    let ap = alpha + 0.5;
    let mut m = vec![1.0];
    let mut log_product = 0.0;
    for s in 1..=s_max {
        let jf = s as f64 * ap;
        log_product += ln_gamma_signed(jf).0 - ln_gamma_signed(jf + 0.5).0;
        let log_fact = ln_gamma_signed(s as f64 + 1.0).0;
        m.push((log_fact - 0.5 * s as f64 * 2f64.ln() + log_product).exp());
    }
    Ok(LimitMoments {
        regime: LimitRegime::OneSided { alpha },
        m,
    })
}

/// Standard Rayleigh density `y e^{−y²/2}` on `y ≥ 0`.
pub fn rayleigh_density(y: f64) -> f64 {
    if y < 0.0 {
        0.0
    } else {
        y * (-0.5 * y * y).exp()
    }
}

/// `E R^s = 2^{s/2} Γ(1 + s/2)` for a standard Rayleigh variable.
pub fn rayleigh_moment(s: u32) -> f64 {
    let sf = s as f64;
    2f64.powf(0.5 * sf) * gamma(1.0 + 0.5 * sf)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientStatus {
    /// Coefficient follows from the family constants.
    Known,
    /// Linear coefficient that has to be fitted numerically.
    EstimateRequired,
}

/// Leading term `coefficient · n^{power} (ln n)^{log_power}` of a mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeadingTerm {
    pub coefficient: Option<f64>,
    pub power: f64,
    pub log_power: u32,
    pub status: CoefficientStatus,
}

impl LeadingTerm {
    fn known(coefficient: f64, power: f64, log_power: u32) -> Self {
        LeadingTerm {
            coefficient: Some(coefficient),
            power,
            log_power,
            status: CoefficientStatus::Known,
        }
    }

    /// Value at `n`, when the coefficient is known.
    pub fn eval(&self, n: f64) -> Option<f64> {
        self.coefficient
            .map(|c| c * n.powf(self.power) * n.ln().powi(self.log_power as i32))
    }
}

/// Leading term of `E X_n` or `E Y_n` for the toll `n^α`.
pub fn predicted_mean(constants: &FamilyConstants, alpha: f64, variant: Variant) -> Result<LeadingTerm> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::DomainError(format!("alpha must be >= 0, got {alpha}")));
    }
    let sigma = constants.sigma;
    let sqrt2 = 2f64.sqrt();
    Ok(match variant {
        Variant::OneSided => LeadingTerm::known(
            sigma * gamma_fraction(&[alpha + 0.5], &[alpha + 1.0]) / sqrt2,
            alpha + 0.5,
            0,
        ),
        Variant::TwoSided if (alpha - 0.5).abs() < HALF_EXCLUSION => {
            LeadingTerm::known(sigma / (2.0 * PI).sqrt(), 1.0, 1)
        }
        Variant::TwoSided if alpha > 0.5 => LeadingTerm::known(
            sigma * gamma_fraction(&[alpha - 0.5], &[alpha]) / sqrt2,
            alpha + 0.5,
            0,
        ),
        Variant::TwoSided => LeadingTerm {
            coefficient: None,
            power: 1.0,
            log_power: 0,
            status: CoefficientStatus::EstimateRequired,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{solve_constants, FamilySpec};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn two_sided_examples() {
        let m = limit_moments_two_sided(1.0, 3).unwrap();
        assert!(close(m.get(1), (PI / 2.0).sqrt(), 1e-14));
        assert!(close(m.get(2), 5.0 / 3.0, 1e-14));
        let m = limit_moments_two_sided(2.0, 1).unwrap();
        assert!(close(m.get(1), (PI / 8.0).sqrt(), 1e-14));
    }

    #[test]
    fn two_sided_domain() {
        for alpha in [0.5, 0.5 + 5e-7, 0.5 - 5e-7, 0.0, -1.0] {
            assert!(matches!(
                limit_moments_two_sided(alpha, 3),
                Err(Error::DomainError(_))
            ));
        }
        // centered law below 1/2: negative mean, even moments positive
        for alpha in [0.1, 0.25, 0.4] {
            let below = limit_moments_two_sided(alpha, 6).unwrap();
            assert!(below.get(1) < 0.0);
            assert!(below.get(2) > below.get(1).powi(2));
            assert!(below.get(4) > 0.0 && below.get(6) > 0.0);
        }
    }

    /// The constants `C_s` with the family constants, mapped back to `m_s`.
    fn via_family_constants(constants: &FamilyConstants, alpha: f64, s_max: usize) -> Vec<f64> {
        let ap = alpha + 0.5;
        let (tau, rho, b, c, sigma) = (constants.tau, constants.rho, constants.b, constants.c, constants.sigma);
        let g = |x: f64| statrs::function::gamma::gamma(x);
        let mut cs = vec![c, tau * g(alpha - 0.5) / (2.0 * PI.sqrt())];
        for s in 2..=s_max {
            let sf = s as f64;
            let mut conv = 0.0;
            for k in 1..s {
                conv += binomial_f64(s, k) * (k as f64 * ap - 0.5) * cs[k] * cs[s - k];
            }
            let bracket = conv / (sf * ap - 1.0)
                + sf * tau * g(sf * ap - 1.0) / g((sf - 1.0) * ap - 0.5) * cs[s - 1];
            cs.push(bracket / (rho.sqrt() * b));
        }
        (0..=s_max)
            .map(|s| sigma.powi(-(s as i32)) * cs[s] / (c * g(s as f64 * ap - 0.5)))
            .map(|v| if v.is_finite() { v } else { 1.0 })
            .collect()
    }

    #[test]
    fn recurrence_matches_family_constant_form() {
        for spec in [FamilySpec::cayley(), FamilySpec::ordered(), FamilySpec::binary()] {
            let k = solve_constants(&spec).unwrap();
            for alpha in [0.75, 1.0, 1.6, 3.0] {
                let ours = limit_moments_two_sided(alpha, 5).unwrap();
                let theirs = via_family_constants(&k, alpha, 5);
                for s in 1..=5 {
                    assert!(close(ours.get(s), theirs[s], 1e-9), "{} α={alpha} s={s}", spec.label());
                }
            }
        }
    }

    #[test]
    fn carleman_growth_is_tame() {
        for alpha in [0.75, 1.0, 2.0] {
            let m = limit_moments_two_sided(alpha, 10).unwrap();
            let ratios: Vec<f64> = (1..=10).map(|s| m.get(s).powf(1.0 / s as f64) / s as f64).collect();
            assert!(ratios.iter().all(|r| r.is_finite() && *r < 3.0), "{ratios:?}");
        }
    }

    #[test]
    fn j_beta_closed_forms() {
        assert!((j_integral(0, 1, 1).unwrap() - PI / 2.0).abs() < 1e-10);
        assert!((j_integral(0, 2, 1).unwrap() - 3.0 * PI / 8.0).abs() < 1e-10);
        for s2 in 1..4u32 {
            for s3 in 1..4u32 {
                if s2 + s3 < 2 {
                    continue;
                }
                let beta = crate::special::beta(s2 as f64 + 0.5, s3 as f64 - 0.5);
                for scheme in [JScheme::TanhSinh, JScheme::SubstitutedKronrod] {
                    let j = j_integral_with(0, s2, s3, scheme).unwrap();
                    assert!((j - beta).abs() < 1e-9, "({s2},{s3}) {scheme:?}: {j} vs {beta}");
                }
            }
        }
    }

    #[test]
    fn j_schemes_agree_and_signs() {
        for s in 2..=4u32 {
            for s2 in 0..s {
                for s3 in 0..(s - s2) {
                    let s1 = s - s2 - s3;
                    if s3 >= s {
                        continue;
                    }
                    let a = j_integral_with(s1, s2, s3, JScheme::TanhSinh).unwrap();
                    let b = j_integral_with(s1, s2, s3, JScheme::SubstitutedKronrod).unwrap();
                    assert!((a - b).abs() < 1e-9, "({s1},{s2},{s3}): {a} vs {b}");
                    if s1 % 2 == 1 {
                        assert!(a < 0.0);
                    } else {
                        assert!(a > 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn j_rejects_non_integrable() {
        for (s1, s2, s3) in [(0, 0, 2), (0, 2, 0), (1, 0, 0), (0, 1, 0)] {
            assert!(matches!(j_integral(s1, s2, s3), Err(Error::NonIntegrable { .. })));
        }
    }

    #[test]
    fn half_regime() {
        let m = limit_moments_two_sided_half(4).unwrap();
        assert_eq!(m.get(0), 1.0);
        assert_eq!(m.get(1), 0.0);
        let j200 = j_integral(2, 0, 0).unwrap();
        assert!(close(m.get(2), j200 / (2.0 * PI * PI), 1e-14));
        assert!(m.get(2) > 0.0 && m.get(4) > 0.0);
    }

    #[test]
    fn one_sided_examples() {
        let m = limit_moments_one_sided(0.0, 2).unwrap();
        assert!(close(m.get(1), (PI / 2.0).sqrt(), 1e-13));
        assert!(close(m.get(2), 2.0, 1e-13));
        let m = limit_moments_one_sided(1.0, 2).unwrap();
        assert!(close(m.get(1), (PI / 8.0).sqrt(), 1e-13));
        assert!(close(m.get(2), 8.0 / 15.0, 1e-13));
    }

    #[test]
    fn one_sided_alpha_zero_is_rayleigh() {
        let m = limit_moments_one_sided(0.0, 10).unwrap();
        for s in 0..=10u32 {
            let sf = s as f64;
            let sharpened = gamma(sf + 1.0) * PI.sqrt() / (2f64.powf(0.5 * sf) * gamma(0.5 * (sf + 1.0)));
            assert!(close(m.get(s as usize), sharpened, 1e-12), "s={s}");
            assert!(close(rayleigh_moment(s), sharpened, 1e-12));
        }
    }

    #[test]
    fn rayleigh_density_normalized() {
        let total = quadrature::gauss_kronrod(|y, _| rayleigh_density(y), 0.0, 40.0, 1e-13);
        assert!((total.value - 1.0).abs() < 1e-10);
        let second = quadrature::gauss_kronrod(|y, _| y * y * rayleigh_density(y), 0.0, 40.0, 1e-13);
        assert!((second.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn leading_terms() {
        let cayley = solve_constants(&FamilySpec::cayley()).unwrap();
        let t = predicted_mean(&cayley, 0.0, Variant::OneSided).unwrap();
        assert!(close(t.coefficient.unwrap(), (PI / 2.0).sqrt(), 1e-13));
        assert_eq!(t.power, 0.5);
        let ordered = solve_constants(&FamilySpec::ordered()).unwrap();
        let t = predicted_mean(&ordered, 0.5, Variant::TwoSided).unwrap();
        assert!(close(t.coefficient.unwrap(), 1.0 / PI.sqrt(), 1e-12));
        assert_eq!((t.power, t.log_power), (1.0, 1));
        let t = predicted_mean(&ordered, 1.0, Variant::TwoSided).unwrap();
        assert!(close(t.coefficient.unwrap(), PI.sqrt(), 1e-12));
        assert_eq!(t.power, 1.5);
        let t = predicted_mean(&ordered, 0.25, Variant::TwoSided).unwrap();
        assert_eq!(t.status, CoefficientStatus::EstimateRequired);
        assert!(t.eval(10.0).is_none());
    }
}

//! The three very simple tree families and their singularity constants.
//!
//! A family is a simply generated family whose degree generating function
//! `Φ(t) = Σ φ_k t^k` has one of three shapes:
//!
//! | kind | `Φ(t)`                          | constraint      | `a1`         | `a0`            |
//! |------|---------------------------------|-----------------|--------------|-----------------|
//! | A    | `exp(α0 t)`                     |                 | `α0`         | `0`             |
//! | B    | `(1 + α0 t / d)^d`              | `d ≥ 2`         | `α0 (d-1)/d` | `α0 / d`        |
//! | C    | `(1 - (2α1-α0) t)^(-α0/(2α1-α0))` | `2α1 - α0 > 0`  | `2α1`        | `-(2α1 - α0)`   |
//!
//! with `α0 > 0` for every family. Cayley trees are A with `α0 = 1`, binary
//! trees are B with `α0 = 2, d = 2`, and plane (ordered) trees are C with
//! `α0 = α1 = 1`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyKind {
    A,
    B,
    C,
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(FamilyKind::A),
            "B" | "b" => Ok(FamilyKind::B),
            "C" | "c" => Ok(FamilyKind::C),
            other => Err(Error::Parse(format!("unknown family kind {other:?}"))),
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FamilyKind::A => "A",
            FamilyKind::B => "B",
            FamilyKind::C => "C",
        };
        f.write_str(s)
    }
}

/// A validated very simple family together with its splitting constants `(a0, a1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FamilySpec {
    kind: FamilyKind,
    alpha0: Rational,
    d: Option<u32>,
    alpha1: Option<Rational>,
    a0: Rational,
    a1: Rational,
}

impl FamilySpec {
    /// Builds and validates a family. `d` is required for B and `alpha1` for C;
    /// they are rejected for the other kinds.
    pub fn new(
        kind: FamilyKind,
        alpha0: Rational,
        d: Option<u32>,
        alpha1: Option<Rational>,
    ) -> Result<Self> {
        if !alpha0.is_positive() {
            return Err(Error::ConstraintViolation(format!(
                "alpha0 must be positive, got {}",
                rational::format(&alpha0)
            )));
        }
        let (d, alpha1, a0, a1) = match kind {
            FamilyKind::A => {
                reject_extra(kind, d.is_some(), alpha1.is_some())?;
                (None, None, Rational::zero(), alpha0.clone())
            }
            FamilyKind::B => {
                reject_extra(kind, false, alpha1.is_some())?;
                let d = d.ok_or_else(|| {
                    Error::ConstraintViolation("family B requires the arity d".into())
                })?;
                if d < 2 {
                    return Err(Error::ConstraintViolation(format!(
                        "family B needs d >= 2, got {d}"
                    )));
                }
                let dq = rational::int(d as i64);
                let a0 = &alpha0 / &dq;
                let a1 = &alpha0 * (&dq - Rational::one()) / &dq;
                (Some(d), None, a0, a1)
            }
            FamilyKind::C => {
                reject_extra(kind, d.is_some(), false)?;
                let alpha1 = alpha1.ok_or_else(|| {
                    Error::ConstraintViolation("family C requires alpha1".into())
                })?;
                let beta = rational::int(2) * &alpha1 - &alpha0;
                if !beta.is_positive() {
                    return Err(Error::ConstraintViolation(format!(
                        "family C needs 2*alpha1 - alpha0 > 0, got {}",
                        rational::format(&beta)
                    )));
                }
                let a1 = rational::int(2) * &alpha1;
                (None, Some(alpha1), -beta, a1)
            }
        };
        Ok(FamilySpec {
            kind,
            alpha0,
            d,
            alpha1,
            a0,
            a1,
        })
    }

    /// Cayley trees: family A with `α0 = 1`.
    pub fn cayley() -> Self {
        FamilySpec::new(FamilyKind::A, rational::int(1), None, None).expect("valid family")
    }

    /// Unweighted plane trees: family C with `α0 = α1 = 1`.
    pub fn ordered() -> Self {
        FamilySpec::new(FamilyKind::C, rational::int(1), None, Some(rational::int(1)))
            .expect("valid family")
    }

    /// Binary trees: family B with `α0 = 2, d = 2`.
    pub fn binary() -> Self {
        FamilySpec::new(FamilyKind::B, rational::int(2), Some(2), None).expect("valid family")
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn alpha0(&self) -> &Rational {
        &self.alpha0
    }

    pub fn d(&self) -> Option<u32> {
        self.d
    }

    pub fn alpha1(&self) -> Option<&Rational> {
        self.alpha1.as_ref()
    }

    pub fn a0(&self) -> &Rational {
        &self.a0
    }

    pub fn a1(&self) -> &Rational {
        &self.a1
    }

    /// `β = 2α1 − α0` and `γ = α0/β` for family C.
    fn family_c_params(&self) -> Option<(Rational, Rational)> {
        let alpha1 = self.alpha1.as_ref()?;
        let beta = rational::int(2) * alpha1 - &self.alpha0;
        let gamma = &self.alpha0 / &beta;
        Some((beta, gamma))
    }

    /// The k-th coefficient `φ_k` of the degree generating function.
    pub fn phi_coefficient(&self, k: u32) -> Rational {
        match self.kind {
            FamilyKind::A => {
                let mut acc = Rational::one();
                for j in 1..=k {
                    acc = acc * &self.alpha0 / rational::int(j as i64);
                }
                acc
            }
            FamilyKind::B => {
                let d = self.d.expect("family B has d");
                if k > d {
                    return Rational::zero();
                }
                let base = &self.alpha0 / rational::int(d as i64);
                let binom = binomial(d, k);
                Rational::from_integer(binom) * num_traits::pow(base, k as usize)
            }
            FamilyKind::C => {
                let (beta, gamma) = self.family_c_params().expect("family C has alpha1");
                // C(γ+k−1, k) β^k = Π_{j<k} (γ + j) β / (j + 1)
                let mut acc = Rational::one();
                for j in 0..k {
                    acc = acc * (&gamma + rational::int(j as i64)) * &beta
                        / rational::int(j as i64 + 1);
                }
                acc
            }
        }
    }

    /// Floating-point view of Φ, Φ', Φ'' and the radius of convergence.
    pub fn degree_function(&self) -> DegreeFunction {
        let alpha0 = rational::to_f64(&self.alpha0);
        match self.kind {
            FamilyKind::A => DegreeFunction::Exponential { alpha0 },
            FamilyKind::B => DegreeFunction::Polynomial {
                alpha0,
                d: self.d.expect("family B has d") as f64,
            },
            FamilyKind::C => {
                let (beta, gamma) = self.family_c_params().expect("family C has alpha1");
                DegreeFunction::Binomial {
                    beta: rational::to_f64(&beta),
                    gamma: rational::to_f64(&gamma),
                }
            }
        }
    }

    /// True when the family assigns every plane tree the same weight up to
    /// a size-dependent factor (family C with `γ = 1`).
    pub fn is_uniform_plane(&self) -> bool {
        self.family_c_params()
            .is_some_and(|(_, gamma)| gamma.is_one())
    }

    /// Serializes to the `key=value` config block.
    pub fn to_config(&self) -> String {
        let mut out = format!(
            "kind={}\nalpha0={}\n",
            self.kind,
            rational::format(&self.alpha0)
        );
        if let Some(d) = self.d {
            out.push_str(&format!("d={d}\n"));
        }
        if let Some(alpha1) = &self.alpha1 {
            out.push_str(&format!("alpha1={}\n", rational::format(alpha1)));
        }
        out
    }

    /// Parses a `key=value` config block (`kind`, `alpha0`, `d`, `alpha1`).
    /// Blank lines and `#` comments are ignored.
    pub fn from_config(text: &str) -> Result<Self> {
        let mut kind = None;
        let mut alpha0 = None;
        let mut d = None;
        let mut alpha1 = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected key=value, got {raw:?}", lineno + 1))
            })?;
            let value = value.trim();
            match key.trim() {
                "kind" => kind = Some(value.parse::<FamilyKind>()?),
                "alpha0" => alpha0 = Some(rational::parse(value)?),
                "d" => {
                    d = Some(value.parse::<u32>().map_err(|_| {
                        Error::Parse(format!("line {}: d must be an integer", lineno + 1))
                    })?)
                }
                "alpha1" => alpha1 = Some(rational::parse(value)?),
                other => {
                    return Err(Error::Parse(format!(
                        "line {}: unknown key {other:?}",
                        lineno + 1
                    )))
                }
            }
        }
        let kind = kind.ok_or_else(|| Error::Parse("missing kind".into()))?;
        let alpha0 = alpha0.ok_or_else(|| Error::Parse("missing alpha0".into()))?;
        FamilySpec::new(kind, alpha0, d, alpha1)
    }

    /// Short human-readable label, e.g. `C(alpha0=1, alpha1=1)`.
    pub fn label(&self) -> String {
        let mut s = format!("{}(alpha0={}", self.kind, rational::format(&self.alpha0));
        if let Some(d) = self.d {
            s.push_str(&format!(", d={d}"));
        }
        if let Some(a1) = &self.alpha1 {
            s.push_str(&format!(", alpha1={}", rational::format(a1)));
        }
        s.push(')');
        s
    }
}

fn reject_extra(kind: FamilyKind, has_d: bool, has_alpha1: bool) -> Result<()> {
    if has_d {
        return Err(Error::ConstraintViolation(format!(
            "family {kind} takes no arity d"
        )));
    }
    if has_alpha1 {
        return Err(Error::ConstraintViolation(format!(
            "family {kind} takes no alpha1"
        )));
    }
    Ok(())
}

pub(crate) fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for j in 0..k {
        acc = acc * BigInt::from(n - j) / BigInt::from(j + 1);
    }
    acc
}

/// Φ in closed form over the reals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DegreeFunction {
    /// `exp(α0 t)`
    Exponential { alpha0: f64 },
    /// `(1 + α0 t / d)^d`
    Polynomial { alpha0: f64, d: f64 },
    /// `(1 − β t)^(−γ)`
    Binomial { beta: f64, gamma: f64 },
}

impl DegreeFunction {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            DegreeFunction::Exponential { alpha0 } => (alpha0 * t).exp(),
            DegreeFunction::Polynomial { alpha0, d } => (1.0 + alpha0 * t / d).powf(d),
            DegreeFunction::Binomial { beta, gamma } => (1.0 - beta * t).powf(-gamma),
        }
    }

    pub fn first_derivative(&self, t: f64) -> f64 {
        match *self {
            DegreeFunction::Exponential { alpha0 } => alpha0 * (alpha0 * t).exp(),
            DegreeFunction::Polynomial { alpha0, d } => alpha0 * (1.0 + alpha0 * t / d).powf(d - 1.0),
            DegreeFunction::Binomial { beta, gamma } => {
                gamma * beta * (1.0 - beta * t).powf(-gamma - 1.0)
            }
        }
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        match *self {
            DegreeFunction::Exponential { alpha0 } => alpha0 * alpha0 * (alpha0 * t).exp(),
            DegreeFunction::Polynomial { alpha0, d } => {
                alpha0 * alpha0 * (d - 1.0) / d * (1.0 + alpha0 * t / d).powf(d - 2.0)
            }
            DegreeFunction::Binomial { beta, gamma } => {
                gamma * (gamma + 1.0) * beta * beta * (1.0 - beta * t).powf(-gamma - 2.0)
            }
        }
    }

    /// Radius of convergence of the power series (infinite for A and B).
    pub fn radius(&self) -> f64 {
        match *self {
            DegreeFunction::Binomial { beta, .. } => 1.0 / beta,
            _ => f64::INFINITY,
        }
    }
}

/// Singularity constants: `T_n ~ c ρ^{-n} n^{-3/2}` and the variance constant `σ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyConstants {
    pub tau: f64,
    pub rho: f64,
    pub b: f64,
    pub c: f64,
    pub sigma2: f64,
    pub sigma: f64,
}

/// Relative agreement demanded between the closed-form τ and the bracketed root.
pub const ROOT_TOLERANCE: f64 = 1e-10;

/// Computes `τ = 1/a1` and the derived constants, cross-checking τ against a
/// bisection root of `tΦ'(t) − Φ(t)`.
pub fn solve_constants(spec: &FamilySpec) -> Result<FamilyConstants> {
    let phi = spec.degree_function();
    let tau = rational::to_f64(&(Rational::one() / spec.a1()));
    let numeric = characteristic_root(&phi);
    if ((numeric - tau) / tau).abs() > ROOT_TOLERANCE {
        return Err(Error::RootMismatch {
            closed: tau,
            numeric,
        });
    }
    Ok(constants_at(&phi, tau))
}

fn constants_at(phi: &DegreeFunction, tau: f64) -> FamilyConstants {
    let value = phi.value(tau);
    let second = phi.second_derivative(tau);
    let rho = tau / value;
    let b = value * (2.0 / (tau * second)).sqrt();
    let c = b * rho.sqrt() / (2.0 * std::f64::consts::PI.sqrt());
    let sigma2 = tau * tau * second / value;
    FamilyConstants {
        tau,
        rho,
        b,
        c,
        sigma2,
        sigma: sigma2.sqrt(),
    }
}

/// Root of `tΦ'(t) = Φ(t)` on `(0, R)` by bracketing and bisection.
pub fn characteristic_root(phi: &DegreeFunction) -> f64 {
    let g = |t: f64| t * phi.first_derivative(t) - phi.value(t);
    let radius = phi.radius();
    let mut hi = if radius.is_finite() { 0.5 * radius } else { 1.0 };
    let mut lo = 0.0;
    let mut steps = 0;
    while g(hi) <= 0.0 && steps < 200 {
        lo = hi;
        hi = if radius.is_finite() {
            0.5 * (hi + radius)
        } else {
            2.0 * hi
        };
        steps += 1;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

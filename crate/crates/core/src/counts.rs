//! Weighted tree counts `T_n` and the splitting law of the first cut.
//!
//! Normalizing the splitting probabilities gives the convolution
//!
//! ```text
//! (n − 1) T_n = Σ_{k=1}^{n−1} (a1 k + a0) T_k T_{n−k}
//!             = (a1 n / 2 + a0) Σ_{k=1}^{n−1} T_k T_{n−k},
//! ```
//!
//! which is used for both the exact rationals and the float path. The float
//! path stores `U_n = T_n ρ^n`. The recurrence is homogeneous in the size, so
//! `U_n` obeys the same convolution started from `U_1 = ρ`, and `U_n ~ c n^{-3/2}`
//! never overflows. Splitting probabilities are ratios in which the powers
//! of ρ cancel.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{solve_constants, FamilySpec};
use crate::rational::{self, Rational};
use crate::summation::CompensatedSum;

/// Default number of sizes for which exact rationals are kept.
pub const DEFAULT_EXACT_CUTOFF: usize = 400;
/// Hard bound on the exact cutoff; rationals past this size exhaust memory and time.
pub const MAX_EXACT_CUTOFF: usize = 5000;

#[derive(Debug, Clone)]
pub struct WeightedCounts {
    family: FamilySpec,
    n_max: usize,
    exact_cutoff: usize,
    exact: Vec<Rational>,
    scaled: Vec<f64>,
    ln_rho: f64,
    a0: f64,
    a1: f64,
}

/// Computes `T_1..T_{n_max}` in float form and `T_1..T_{min(n_max, exact_cutoff)}` exactly.
pub fn compute_counts(
    spec: &FamilySpec,
    n_max: usize,
    exact_cutoff: usize,
) -> Result<WeightedCounts> {
    if n_max < 1 {
        return Err(Error::InvalidConfig("n_max must be at least 1".into()));
    }
    if exact_cutoff > MAX_EXACT_CUTOFF {
        return Err(Error::OverflowPolicy {
            requested: exact_cutoff,
            limit: MAX_EXACT_CUTOFF,
        });
    }
    let constants = solve_constants(spec)?;
    let a0 = rational::to_f64(spec.a0());
    let a1 = rational::to_f64(spec.a1());

    let exact_len = n_max.min(exact_cutoff);
    let ints = IntegerCounts::new(spec, exact_len);
    let mut exact: Vec<Rational> = Vec::with_capacity(exact_len);
    let mut scale = BigInt::one();
    for n in 1..=exact_len {
        if n > 1 {
            scale *= BigInt::from(n - 1) * &ints.q;
        }
        exact.push(Rational::new(ints.values[n - 1].clone(), scale.clone()));
    }

    let mut scaled = Vec::with_capacity(n_max);
    scaled.push(constants.rho);
    for n in 2..=n_max {
        let mut acc = CompensatedSum::new();
        for k in 1..=(n - 1) / 2 {
            acc.add(scaled[k - 1] * scaled[n - k - 1]);
        }
        let mut conv = 2.0 * acc.value();
        if n % 2 == 0 {
            let half = scaled[n / 2 - 1];
            conv += half * half;
        }
        let nf = n as f64;
        scaled.push((0.5 * a1 * nf + a0) / (nf - 1.0) * conv);
    }

    Ok(WeightedCounts {
        family: spec.clone(),
        n_max,
        exact_cutoff,
        exact,
        scaled,
        ln_rho: constants.rho.ln(),
        a0,
        a1,
    })
}

/// Integer-scaled counts `A_n = (n − 1)! q^{n−1} T_n`, where `a1/2 = u/q` and
/// `a0 = v/q` share the denominator `q`. They satisfy
///
/// ```text
/// A_n = (u n + v) Σ_{k=1}^{n−1} C(n−2, k−1) A_k A_{n−k},
/// ```
///
/// so exact arithmetic never needs a gcd until a value is read out.
#[derive(Debug, Clone)]
pub(crate) struct IntegerCounts {
    pub u: BigInt,
    pub v: BigInt,
    pub q: BigInt,
    /// `A_n`, index `n − 1`.
    pub values: Vec<BigInt>,
}

impl IntegerCounts {
    pub fn new(spec: &FamilySpec, n_max: usize) -> Self {
        let half_a1 = spec.a1() / rational::int(2);
        let q = half_a1.denom().lcm(spec.a0().denom());
        let u = half_a1.numer() * (&q / half_a1.denom());
        let v = spec.a0().numer() * (&q / spec.a0().denom());
        let mut values: Vec<BigInt> = Vec::with_capacity(n_max);
        let mut row = BinomialRow::new();
        for n in 1..=n_max {
            if n == 1 {
                values.push(BigInt::one());
                continue;
            }
            row.advance_to(n - 2);
            let c = row.coefficients();
            let mut conv = BigInt::from(0);
            for k in 1..=(n - 1) / 2 {
                conv += &c[k - 1] * &values[k - 1] * &values[n - k - 1];
            }
            conv *= 2;
            if n % 2 == 0 {
                let h = n / 2;
                conv += &c[h - 1] * &values[h - 1] * &values[h - 1];
            }
            values.push((&u * BigInt::from(n) + &v) * conv);
        }
        IntegerCounts { u, v, q, values }
    }
}

/// Pascal-triangle row `C(m, 0..=m)` advanced in place.
#[derive(Debug, Clone)]
pub(crate) struct BinomialRow {
    m: usize,
    row: Vec<BigInt>,
}

impl BinomialRow {
    pub fn new() -> Self {
        BinomialRow {
            m: 0,
            row: vec![BigInt::one()],
        }
    }

    pub fn advance_to(&mut self, m: usize) {
        assert!(m >= self.m, "binomial rows only move forward");
        while self.m < m {
            let mut next = Vec::with_capacity(self.row.len() + 1);
            next.push(BigInt::one());
            for w in self.row.windows(2) {
                next.push(&w[0] + &w[1]);
            }
            next.push(BigInt::one());
            self.row = next;
            self.m += 1;
        }
    }

    pub fn coefficients(&self) -> &[BigInt] {
        &self.row
    }
}

impl WeightedCounts {
    pub fn family(&self) -> &FamilySpec {
        &self.family
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn exact_cutoff(&self) -> usize {
        self.exact_cutoff
    }

    /// Exact `T_n` when `n` is within the exact range.
    pub fn exact(&self, n: usize) -> Option<&Rational> {
        if n == 0 {
            return None;
        }
        self.exact.get(n - 1)
    }

    pub fn exact_len(&self) -> usize {
        self.exact.len()
    }

    /// `ln T_n`.
    pub fn log_value(&self, n: usize) -> f64 {
        self.scaled[n - 1].ln() - n as f64 * self.ln_rho
    }

    /// `T_n ρ^n`, the overflow-free float representation.
    pub fn scaled(&self, n: usize) -> f64 {
        self.scaled[n - 1]
    }

    pub fn scaled_values(&self) -> &[f64] {
        &self.scaled
    }

    /// `a1 k + a0` in floating point.
    pub fn split_weight(&self, k: usize) -> f64 {
        self.a1 * k as f64 + self.a0
    }

    /// `a1 k + a0` exactly.
    pub fn split_weight_exact(&self, k: usize) -> Rational {
        self.family.a1() * rational::int(k as i64) + self.family.a0()
    }

    fn check_range(&self, n: usize) -> Result<()> {
        if n < 2 || n > self.n_max {
            return Err(Error::OutOfRange {
                index: n,
                max: self.n_max,
            });
        }
        Ok(())
    }

    /// `p_{n,k}` in floating point.
    pub fn split_prob(&self, n: usize, k: usize) -> f64 {
        self.split_weight(k) * self.scaled[k - 1] * self.scaled[n - k - 1]
            / ((n - 1) as f64 * self.scaled[n - 1])
    }

    /// `p_{n,k}` exactly; `None` outside the exact range.
    pub fn split_prob_exact(&self, n: usize, k: usize) -> Option<Rational> {
        let tn = self.exact(n)?;
        let num = self.split_weight_exact(k) * self.exact(k)? * self.exact(n - k)?;
        Some(num / (tn * rational::int(n as i64 - 1)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SplitProbs {
    Exact(#[serde(serialize_with = "serialize_rationals")] Vec<Rational>),
    Float(Vec<f64>),
}

fn serialize_rationals<S: serde::Serializer>(
    values: &[Rational],
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    serializer.collect_seq(values.iter().map(rational::format))
}

/// Law of the root-component size `K_n` after the first cut; `probs[k-1] = P(K_n = k)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitDistribution {
    pub n: usize,
    pub symmetrized: bool,
    pub probs: SplitProbs,
}

impl SplitDistribution {
    pub fn len(&self) -> usize {
        self.n - 1
    }

    pub fn is_empty(&self) -> bool {
        self.n < 2
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.probs, SplitProbs::Exact(_))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match &self.probs {
            SplitProbs::Exact(v) => v.iter().map(rational::to_f64).collect(),
            SplitProbs::Float(v) => v.clone(),
        }
    }

    /// Probability of `K_n = k`, as a float.
    pub fn prob(&self, k: usize) -> f64 {
        match &self.probs {
            SplitProbs::Exact(v) => rational::to_f64(&v[k - 1]),
            SplitProbs::Float(v) => v[k - 1],
        }
    }
}

/// `p_{n,k} = (a1 k + a0) T_k T_{n−k} / ((n − 1) T_n)`, or its palindromic
/// average `(p_{n,k} + p_{n,n−k}) / 2` when `symmetrized`. Exact within the
/// exact range, float beyond it.
pub fn split_distribution(
    counts: &WeightedCounts,
    n: usize,
    symmetrized: bool,
) -> Result<SplitDistribution> {
    counts.check_range(n)?;
    let probs = if n <= counts.exact_len() {
        let mut v: Vec<Rational> = (1..n)
            .map(|k| counts.split_prob_exact(n, k).expect("within exact range"))
            .collect();
        if symmetrized {
            let raw = v.clone();
            for k in 1..n {
                v[k - 1] = (&raw[k - 1] + &raw[n - k - 1]) / rational::int(2);
            }
        }
        SplitProbs::Exact(v)
    } else {
        let mut v: Vec<f64> = (1..n).map(|k| counts.split_prob(n, k)).collect();
        if symmetrized {
            let raw = v.clone();
            for k in 1..n {
                v[k - 1] = 0.5 * (raw[k - 1] + raw[n - k - 1]);
            }
        }
        SplitProbs::Float(v)
    };
    Ok(SplitDistribution {
        n,
        symmetrized,
        probs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn exact_list(c: &WeightedCounts) -> Vec<Rational> {
        (1..=c.exact_len()).map(|n| c.exact(n).unwrap().clone()).collect()
    }

    #[test]
    fn small_counts() {
        let c = compute_counts(&FamilySpec::ordered(), 5, 400).unwrap();
        assert_eq!(exact_list(&c), vec![int(1), int(1), int(2), int(5), int(14)]);
        let c = compute_counts(&FamilySpec::cayley(), 4, 400).unwrap();
        assert_eq!(exact_list(&c), vec![int(1), int(1), ratio(3, 2), ratio(8, 3)]);
        let c = compute_counts(&FamilySpec::binary(), 3, 400).unwrap();
        assert_eq!(exact_list(&c), vec![int(1), int(2), int(5)]);
    }

    #[test]
    fn split_examples() {
        let c = compute_counts(&FamilySpec::ordered(), 3, 400).unwrap();
        let d = split_distribution(&c, 3, false).unwrap();
        assert_eq!(d.probs, SplitProbs::Exact(vec![ratio(1, 4), ratio(3, 4)]));

        let c = compute_counts(&FamilySpec::cayley(), 4, 400).unwrap();
        let d = split_distribution(&c, 4, false).unwrap();
        assert_eq!(
            d.probs,
            SplitProbs::Exact(vec![ratio(3, 16), ratio(4, 16), ratio(9, 16)])
        );
        let d = split_distribution(&c, 4, true).unwrap();
        assert_eq!(
            d.probs,
            SplitProbs::Exact(vec![ratio(6, 16), ratio(4, 16), ratio(6, 16)])
        );
    }

    #[test]
    fn out_of_range() {
        let c = compute_counts(&FamilySpec::ordered(), 10, 400).unwrap();
        assert!(matches!(
            split_distribution(&c, 1, false),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            split_distribution(&c, 11, false),
            Err(Error::OutOfRange { .. })
        ));
        assert!(compute_counts(&FamilySpec::ordered(), 0, 10).is_err());
        assert!(matches!(
            compute_counts(&FamilySpec::ordered(), 10, MAX_EXACT_CUTOFF + 1),
            Err(Error::OverflowPolicy { .. })
        ));
    }

    #[test]
    fn log_values_match_exact() {
        for spec in [FamilySpec::cayley(), FamilySpec::ordered(), FamilySpec::binary()] {
            let c = compute_counts(&spec, 400, 400).unwrap();
            for n in 1..=400 {
                let exact = rational::ln(c.exact(n).unwrap());
                let rel = (c.log_value(n) - exact).abs();
                // relative error in T_n equals absolute error in ln T_n
                assert!(rel < 1e-10, "{} n={n}: {} vs {exact}", spec.label(), c.log_value(n));
            }
        }
    }

    #[test]
    fn float_split_probs_match_exact() {
        let c = compute_counts(&FamilySpec::ordered(), 120, 120).unwrap();
        for n in [2, 17, 64, 120] {
            for k in 1..n {
                let exact = rational::to_f64(&c.split_prob_exact(n, k).unwrap());
                let float = c.split_prob(n, k);
                assert!((exact - float).abs() <= 1e-12 * exact.max(1e-300) + 1e-300);
            }
        }
    }

    #[test]
    fn large_n_scaled_counts_stay_finite() {
        let c = compute_counts(&FamilySpec::ordered(), 20_000, 0).unwrap();
        let k = solve_constants(&FamilySpec::ordered()).unwrap();
        let n = 20_000usize;
        // T_n ρ^n n^{3/2} → c
        let approx = c.scaled(n) * (n as f64).powf(1.5);
        assert!((approx / k.c - 1.0).abs() < 1e-3);
        assert!(c.log_value(n).is_finite());
        let d = split_distribution(&c, n, false).unwrap();
        assert!(!d.is_exact());
        let total: f64 = d.to_f64().iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
    }
}

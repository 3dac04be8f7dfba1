//! Exact moment recurrences for the destruction costs.
//!
//! One-sided cost `Y_n = Y_{K_n} + t_n`, two-sided cost
//! `X_n = X_{K_n} + X*_{n−K_n} + t_n`, both with `Y_1 = X_1 = t_1`. Raising to
//! the `s`-th power and conditioning on `K_n` gives recurrences in which
//! `μ_n^{[s]}` depends only on moments of smaller sizes:
//!
//! ```text
//! one-sided:  μ_n^{[s]} = Σ_{s1+s2=s} C(s,s1) t_n^{s1} Σ_k p_{n,k} μ_k^{[s2]}
//! two-sided:  μ_n^{[s]} = Σ_{s1+s2+s3=s} (s; s1,s2,s3) t_n^{s1} Σ_k p_{n,k} μ_k^{[s2]} μ_{n−k}^{[s3]}
//! ```
//!
//! Both are evaluated as convolutions against the weighted counts. For the
//! two-sided recurrence the ordered index pairs `(s2, s3)` and `(s3, s2)` carry
//! the same multinomial, so only `p_{n,k} + p_{n,n−k} = (a1 n + 2a0) T_k T_{n−k} / ((n−1) T_n)`
//! enters; [`SumStrategy::Folded`] exploits this and sums over `k ≤ n/2`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::counts::{BinomialRow, IntegerCounts, WeightedCounts};
use crate::error::{Error, Result};
use crate::family::{binomial, FamilySpec};
use crate::rational::{self, Rational};
use crate::summation::{Accumulator, CompensatedSum, DoubleDoubleSum, Precision};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[serde(rename = "one")]
    OneSided,
    #[serde(rename = "two")]
    TwoSided,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" | "one-sided" => Ok(Variant::OneSided),
            "two" | "two-sided" => Ok(Variant::TwoSided),
            other => Err(Error::Parse(format!("unknown variant {other:?}"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::OneSided => "one",
            Variant::TwoSided => "two",
        })
    }
}

/// What a component of size one costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeOneCost {
    /// `t_1 = 1^α = 1` (or the first table entry).
    #[default]
    Toll,
    /// `t_1 = 0`: only cuts are charged, so for `α = 0` the two-sided cost is the edge count.
    Free,
}

#[derive(Debug, Clone, PartialEq)]
enum TollKind {
    Power(f64),
    Table(Vec<Rational>),
}

/// Toll sequence `t_n`: either `n^α` or an explicit table `t_1, t_2, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct TollSpec {
    kind: TollKind,
    size_one: SizeOneCost,
}

impl TollSpec {
    /// `t_n = n^α`, `α ≥ 0`.
    pub fn power(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "toll exponent must be finite and nonnegative, got {alpha}"
            )));
        }
        Ok(TollSpec {
            kind: TollKind::Power(alpha),
            size_one: SizeOneCost::Toll,
        })
    }

    /// Generic toll given by a table `t_1, ..., t_m`.
    pub fn table(values: Vec<Rational>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidConfig("empty toll table".into()));
        }
        Ok(TollSpec {
            kind: TollKind::Table(values),
            size_one: SizeOneCost::Toll,
        })
    }

    pub fn with_size_one(mut self, size_one: SizeOneCost) -> Self {
        self.size_one = size_one;
        self
    }

    pub fn size_one(&self) -> SizeOneCost {
        self.size_one
    }

    /// The exponent α for power tolls.
    pub fn alpha(&self) -> Option<f64> {
        match self.kind {
            TollKind::Power(a) => Some(a),
            TollKind::Table(_) => None,
        }
    }

    /// `α' = α + 1/2`.
    pub fn alpha_prime(&self) -> Option<f64> {
        self.alpha().map(|a| a + 0.5)
    }

    /// Largest size the toll is defined for.
    pub fn max_size(&self) -> usize {
        match &self.kind {
            TollKind::Power(_) => usize::MAX,
            TollKind::Table(v) => v.len(),
        }
    }

    fn raw(&self, n: usize) -> f64 {
        match &self.kind {
            TollKind::Power(alpha) => (n as f64).powf(*alpha),
            TollKind::Table(v) => rational::to_f64(&v[n - 1]),
        }
    }

    /// `t_n`, honoring the size-one convention.
    pub fn value(&self, n: usize) -> f64 {
        if n == 1 && self.size_one == SizeOneCost::Free {
            return 0.0;
        }
        self.raw(n)
    }

    /// Exact `t_n` when the toll is rational (integer exponent or rational table).
    pub fn exact_value(&self, n: usize) -> Option<Rational> {
        if n == 1 && self.size_one == SizeOneCost::Free {
            return Some(Rational::zero());
        }
        match &self.kind {
            TollKind::Power(alpha) => {
                if alpha.fract() != 0.0 || *alpha > 64.0 {
                    return None;
                }
                let e = alpha.to_usize()?;
                Some(Rational::from_integer(num_traits::pow(BigInt::from(n), e)))
            }
            TollKind::Table(v) => v.get(n - 1).cloned(),
        }
    }

    pub fn is_rational(&self) -> bool {
        self.exact_value(2).is_some()
    }

    pub fn label(&self) -> String {
        let base = match &self.kind {
            TollKind::Power(a) => format!("n^{a}"),
            TollKind::Table(v) => format!("table[{}]", v.len()),
        };
        match self.size_one {
            SizeOneCost::Toll => base,
            SizeOneCost::Free => format!("{base}, t_1=0"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    #[default]
    Float,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "rational" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            other => Err(Error::Parse(format!("unknown mode {other:?}"))),
        }
    }
}

/// How the two-sided convolutions are summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SumStrategy {
    /// Every ordered index pair, every `k = 1..n−1`.
    Direct,
    /// Unordered index pairs with the symmetrized splitting law, `k ≤ n/2`.
    #[default]
    Folded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MomentOptions {
    pub mode: Mode,
    pub precision: Precision,
    pub strategy: SumStrategy,
}

impl MomentOptions {
    pub fn exact() -> Self {
        MomentOptions {
            mode: Mode::Exact,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MomentValues {
    /// `values[s][n − 1]`
    Exact(Vec<Vec<Rational>>),
    Float(Vec<Vec<f64>>),
}

/// `μ_n^{[s]}` for `1 ≤ n ≤ n_max`, `0 ≤ s ≤ s_max`.
#[derive(Debug, Clone)]
pub struct MomentTable {
    pub variant: Variant,
    pub family: FamilySpec,
    pub toll: TollSpec,
    pub s_max: usize,
    pub n_max: usize,
    pub values: MomentValues,
}

impl MomentTable {
    pub fn mode(&self) -> Mode {
        match self.values {
            MomentValues::Exact(_) => Mode::Exact,
            MomentValues::Float(_) => Mode::Float,
        }
    }

    /// `μ_n^{[s]}` as a float.
    pub fn get(&self, n: usize, s: usize) -> f64 {
        match &self.values {
            MomentValues::Exact(v) => rational::to_f64(&v[s][n - 1]),
            MomentValues::Float(v) => v[s][n - 1],
        }
    }

    pub fn exact(&self, n: usize, s: usize) -> Option<&Rational> {
        match &self.values {
            MomentValues::Exact(v) => Some(&v[s][n - 1]),
            MomentValues::Float(_) => None,
        }
    }

    /// Raw moments of order `0..=s_max` at size `n`.
    pub fn row(&self, n: usize) -> Vec<f64> {
        (0..=self.s_max).map(|s| self.get(n, s)).collect()
    }
}

/// Moments of the one-sided cost with default float options.
pub fn one_sided_moments(
    counts: &WeightedCounts,
    toll: &TollSpec,
    n_max: usize,
    s_max: usize,
) -> Result<MomentTable> {
    compute_moments(Variant::OneSided, counts, toll, n_max, s_max, MomentOptions::default())
}

/// Moments of the two-sided cost with default float options.
pub fn two_sided_moments(
    counts: &WeightedCounts,
    toll: &TollSpec,
    n_max: usize,
    s_max: usize,
) -> Result<MomentTable> {
    compute_moments(Variant::TwoSided, counts, toll, n_max, s_max, MomentOptions::default())
}

pub fn compute_moments(
    variant: Variant,
    counts: &WeightedCounts,
    toll: &TollSpec,
    n_max: usize,
    s_max: usize,
    options: MomentOptions,
) -> Result<MomentTable> {
    if n_max < 1 || n_max > counts.n_max() {
        return Err(Error::OutOfRange {
            index: n_max,
            max: counts.n_max(),
        });
    }
    if s_max < 1 {
        return Err(Error::InvalidConfig("s_max must be at least 1".into()));
    }
    if toll.max_size() < n_max {
        return Err(Error::InvalidConfig(format!(
            "toll table covers sizes up to {}, need {n_max}",
            toll.max_size()
        )));
    }
    let values = match options.mode {
        Mode::Exact => {
            if !toll.is_rational() {
                return Err(Error::NotExact(format!(
                    "toll {} is not rational",
                    toll.label()
                )));
            }
            if n_max > counts.exact_len() {
                return Err(Error::NotExact(format!(
                    "exact counts only cover n <= {}",
                    counts.exact_len()
                )));
            }
            let ints = IntegerCounts::new(counts.family(), n_max);
            let tolls: Vec<Rational> = (1..=n_max).map(|n| toll.exact_value(n).unwrap()).collect();
            MomentValues::Exact(fill_exact(variant, &ints, &tolls, s_max, options.strategy))
        }
        Mode::Float => {
            let inputs = FloatInputs {
                counts: counts.scaled_values()[..n_max].to_vec(),
                weights: (1..=n_max).map(|k| counts.split_weight(k)).collect(),
                pair_weights: (1..=n_max)
                    .map(|n| {
                        rational::to_f64(counts.family().a1()) * n as f64
                            + 2.0 * rational::to_f64(counts.family().a0())
                    })
                    .collect(),
                tolls: (1..=n_max).map(|n| toll.value(n)).collect(),
            };
            let v = match options.precision {
                Precision::Standard => {
                    fill_float::<CompensatedSum>(variant, &inputs, s_max, options.strategy)
                }
                Precision::Extended => {
                    fill_float::<DoubleDoubleSum>(variant, &inputs, s_max, options.strategy)
                }
            };
            MomentValues::Float(v)
        }
    };
    Ok(MomentTable {
        variant,
        family: counts.family().clone(),
        toll: toll.clone(),
        s_max,
        n_max,
        values,
    })
}

struct FloatInputs {
    /// `T_n ρ^n`, index `n − 1`.
    counts: Vec<f64>,
    /// `a1 k + a0`
    weights: Vec<f64>,
    /// `a1 n + 2 a0`
    pair_weights: Vec<f64>,
    tolls: Vec<f64>,
}

/// Expands `μ_n^{[s]} = Σ_{s1} C(s, s1) t_n^{s1} inner[s − s1]`.
fn assemble_row(binom: &[Vec<f64>], toll: f64, inner: &[f64]) -> Vec<f64> {
    let s_max = inner.len() - 1;
    let mut toll_pow = vec![1.0];
    for s in 1..=s_max {
        toll_pow.push(toll_pow[s - 1] * toll);
    }
    (0..=s_max)
        .map(|s| {
            if s == 0 {
                return 1.0;
            }
            let mut acc = CompensatedSum::new();
            for s1 in 0..=s {
                acc.add(binom[s][s1] * toll_pow[s1] * inner[s - s1]);
            }
            acc.value()
        })
        .collect()
}

fn fill_float<S: Accumulator>(
    variant: Variant,
    inputs: &FloatInputs,
    s_max: usize,
    strategy: SumStrategy,
) -> Vec<Vec<f64>> {
    let n_max = inputs.counts.len();
    let binom: Vec<Vec<f64>> = (0..=s_max)
        .map(|s| (0..=s).map(|j| crate::special::binomial_f64(s, j)).collect())
        .collect();

    let mut mu: Vec<Vec<f64>> = vec![Vec::with_capacity(n_max); s_max + 1];
    // right[s][k-1] = T_k μ_k^{[s]}; left[s][k-1] = (a1 k + a0) T_k μ_k^{[s]}
    let mut right: Vec<Vec<f64>> = vec![Vec::with_capacity(n_max); s_max + 1];
    let mut left: Vec<Vec<f64>> = vec![Vec::with_capacity(n_max); s_max + 1];

    for n in 1..=n_max {
        let row = if n == 1 {
            let t1 = inputs.tolls[0];
            (0..=s_max).map(|s| t1.powi(s as i32)).collect()
        } else {
            let norm = (n - 1) as f64 * inputs.counts[n - 1];
            // inner[j] = Σ_{s2+s3=j} C(j, s2) E[μ_K^{s2} μ_{n−K}^{s3}] (two-sided)
            //          = E[μ_K^{j}]                                       (one-sided)
            let mut inner = vec![1.0];
            for j in 1..=s_max {
                let value = match (variant, strategy) {
                    (Variant::OneSided, _) => {
                        let mut acc = S::default();
                        for k in 1..n {
                            acc.add_product(left[j][k - 1], inputs.counts[n - k - 1]);
                        }
                        acc.value()
                    }
                    (Variant::TwoSided, SumStrategy::Direct) => {
                        let mut total = CompensatedSum::new();
                        for s2 in 0..=j {
                            let mut acc = S::default();
                            for k in 1..n {
                                acc.add_product(left[s2][k - 1], right[j - s2][n - k - 1]);
                            }
                            total.add(binom[j][s2] * acc.value());
                        }
                        total.value()
                    }
                    (Variant::TwoSided, SumStrategy::Folded) => {
                        let mut total = CompensatedSum::new();
                        for s2 in 0..=j / 2 {
                            let s3 = j - s2;
                            let q = folded_pair_sum::<S>(&right[s2], &right[s3], n);
                            // the ordered pairs (s2, s3) and (s3, s2) together weigh
                            // (a1 n + 2 a0) q; a diagonal pair counts once
                            let mut factor = binom[j][s2] * inputs.pair_weights[n - 1];
                            if s2 == s3 {
                                factor *= 0.5;
                            }
                            total.add(factor * q);
                        }
                        total.value()
                    }
                };
                inner.push(value / norm);
            }
            assemble_row(&binom, inputs.tolls[n - 1], &inner)
        };
        for (s, v) in row.into_iter().enumerate() {
            let r = inputs.counts[n - 1] * v;
            left[s].push(inputs.weights[n - 1] * r);
            right[s].push(r);
            mu[s].push(v);
        }
    }
    mu
}

/// `Σ_{k=1}^{n−1} a[k−1] b[n−k−1]` evaluated over `k ≤ n/2`.
fn folded_pair_sum<S: Accumulator>(a: &[f64], b: &[f64], n: usize) -> f64 {
    let same = std::ptr::eq(a, b);
    let mut acc = S::default();
    for k in 1..=(n - 1) / 2 {
        acc.add_product(a[k - 1], b[n - k - 1]);
        if !same {
            acc.add_product(b[k - 1], a[n - k - 1]);
        }
    }
    let mut q = acc.value();
    if same {
        q *= 2.0;
    }
    if n.is_multiple_of(2) {
        q += a[n / 2 - 1] * b[n / 2 - 1];
    }
    q
}

/// Exact recurrences in integer-scaled form.
///
/// With `A_n` from [`IntegerCounts`], tolls written as `t_n = τ_n / L` with
/// integer `τ_n`, and `G_n^{[s]} = L^s A_n μ_n^{[s]}`, both recurrences become
///
/// ```text
/// G_n^{[s]} = Σ_{s1} C(s, s1) τ_n^{s1} I_n^{[s−s1]},
/// I_n^{[j]} = Σ_k C(n−2, k−1) (2uk + v) G_k^{[j]} A_{n−k}                      (one-sided)
/// I_n^{[j]} = Σ_{s2+s3=j} C(j, s2) Σ_k C(n−2, k−1) (2uk + v) G_k^{[s2]} G_{n−k}^{[s3]}  (two-sided)
/// ```
///
/// which involve integers only.
fn fill_exact(
    variant: Variant,
    ints: &IntegerCounts,
    tolls: &[Rational],
    s_max: usize,
    strategy: SumStrategy,
) -> Vec<Vec<Rational>> {
    let n_max = tolls.len();
    let denom = tolls
        .iter()
        .fold(BigInt::one(), |acc, t| acc.lcm(t.denom()));
    let scaled_tolls: Vec<BigInt> = tolls
        .iter()
        .map(|t| t.numer() * (&denom / t.denom()))
        .collect();
    let binom: Vec<Vec<BigInt>> = (0..=s_max)
        .map(|s| (0..=s).map(|j| binomial(s as u32, j as u32)).collect())
        .collect();
    let (u, v) = (&ints.u, &ints.v);
    let two_u = u * 2;

    // g[s][n-1] = G_n^{[s]}; g[0] = A
    let mut g: Vec<Vec<BigInt>> = vec![Vec::with_capacity(n_max); s_max + 1];
    let mut row_binom = BinomialRow::new();
    for n in 1..=n_max {
        let tau = &scaled_tolls[n - 1];
        let mut tau_pow = vec![BigInt::one()];
        for s in 1..=s_max {
            let next = &tau_pow[s - 1] * tau;
            tau_pow.push(next);
        }
        if n == 1 {
            for (s, t) in tau_pow.into_iter().enumerate() {
                g[s].push(t);
            }
            continue;
        }
        row_binom.advance_to(n - 2);
        let c = row_binom.coefficients();
        let nb = BigInt::from(n);
        // weighted[k-1] = C(n−2, k−1) (2uk + v)
        let weighted: Vec<BigInt> = (1..n)
            .map(|k| &c[k - 1] * (&two_u * BigInt::from(k) + v))
            .collect();

        let mut inner: Vec<BigInt> = vec![ints.values[n - 1].clone()];
        for j in 1..=s_max {
            let value = match (variant, strategy) {
                (Variant::OneSided, _) => (1..n)
                    .map(|k| &weighted[k - 1] * &g[j][k - 1] * &g[0][n - k - 1])
                    .sum(),
                (Variant::TwoSided, SumStrategy::Direct) => {
                    let mut total = BigInt::zero();
                    for s2 in 0..=j {
                        let part: BigInt = (1..n)
                            .map(|k| &weighted[k - 1] * &g[s2][k - 1] * &g[j - s2][n - k - 1])
                            .sum();
                        total += &binom[j][s2] * part;
                    }
                    total
                }
                (Variant::TwoSided, SumStrategy::Folded) => {
                    let mut total = BigInt::zero();
                    for s2 in 0..=j / 2 {
                        let s3 = j - s2;
                        let q = folded_pair_sum_exact(c, &g[s2], &g[s3], n, s2 == s3);
                        let weight = if s2 == s3 {
                            u * &nb + v
                        } else {
                            (u * &nb + v) * 2
                        };
                        total += &binom[j][s2] * weight * q;
                    }
                    total
                }
            };
            inner.push(value);
        }
        for s in 0..=s_max {
            let value = if s == 0 {
                ints.values[n - 1].clone()
            } else {
                (0..=s)
                    .map(|s1| &binom[s][s1] * &tau_pow[s1] * &inner[s - s1])
                    .sum()
            };
            g[s].push(value);
        }
    }

    (0..=s_max)
        .map(|s| {
            let scale = num_traits::pow(denom.clone(), s);
            (0..n_max)
                .map(|i| Rational::new(g[s][i].clone(), &scale * &ints.values[i]))
                .collect()
        })
        .collect()
}

/// `Σ_{k=1}^{n−1} C(n−2, k−1) a[k−1] b[n−k−1]` evaluated over `k ≤ n/2`.
fn folded_pair_sum_exact(c: &[BigInt], a: &[BigInt], b: &[BigInt], n: usize, same: bool) -> BigInt {
    let mut q = BigInt::zero();
    for k in 1..=(n - 1) / 2 {
        let mut term = &a[k - 1] * &b[n - k - 1];
        if !same {
            term += &b[k - 1] * &a[n - k - 1];
        }
        q += &c[k - 1] * term;
    }
    if same {
        q *= 2;
    }
    if n.is_multiple_of(2) {
        let h = n / 2 - 1;
        q += &c[h] * &a[h] * &b[h];
    }
    q
}

/// `E[(V_n − shift(n))^s]` for every `n ≤ n_max`, by binomial expansion of the raw moments.
pub fn shifted_moments(table: &MomentTable, shift: impl Fn(usize) -> f64, s: usize) -> Vec<f64> {
    assert!(s <= table.s_max, "order {s} exceeds table order {}", table.s_max);
    (1..=table.n_max)
        .map(|n| {
            let c = shift(n);
            (0..=s)
                .map(|j| {
                    crate::special::binomial_f64(s, j) * (-c).powi((s - j) as i32) * table.get(n, j)
                })
                .sum()
        })
        .collect()
}

/// Exact counterpart of [`shifted_moments`]; `None` for float tables.
pub fn shifted_moments_exact(
    table: &MomentTable,
    shift: impl Fn(usize) -> Rational,
    s: usize,
) -> Option<Vec<Rational>> {
    assert!(s <= table.s_max, "order {s} exceeds table order {}", table.s_max);
    if table.mode() != Mode::Exact {
        return None;
    }
    Some(
        (1..=table.n_max)
            .map(|n| {
                let neg = -shift(n);
                let mut total = Rational::zero();
                for j in 0..=s {
                    let coeff = Rational::from_integer(binomial(s as u32, j as u32));
                    total += coeff
                        * num_traits::pow(neg.clone(), s - j)
                        * table.exact(n, j).unwrap();
                }
                total
            })
            .collect(),
    )
}

//! Reference computations that share no code path with the main algorithms.
//!
//! * Lagrange inversion for `T_n = (1/n) [w^{n−1}] Φ(w)^n`.
//! * Closed-form counts (Catalan, `n^{n−1}/n!`).
//! * Exhaustive enumeration of weighted plane trees, with the exact law of
//!   the destruction cost obtained by averaging over every edge choice.
//! * The unsymmetrized form of the two-sided limit recurrence, evaluated
//!   with `statrs`'s gamma function.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::family::{binomial, FamilySpec};
use crate::rational::{self, Rational};

/// `T_n` by Lagrange inversion of `T = zΦ(T)`.
pub fn lagrange_counts(spec: &FamilySpec, n_max: usize) -> Vec<Rational> {
    let phi: Vec<Rational> = (0..n_max as u32).map(|k| spec.phi_coefficient(k)).collect();
    let mut out = Vec::with_capacity(n_max);
    // power = Φ^n truncated to degree n_max − 1
    let mut power = vec![Rational::zero(); n_max];
    power[0] = Rational::one();
    for n in 1..=n_max {
        let mut next = vec![Rational::zero(); n_max];
        for (i, a) in power.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in phi.iter().enumerate().take(n_max - i) {
                next[i + j] += a * b;
            }
        }
        power = next;
        out.push(&power[n - 1] / rational::int(n as i64));
    }
    out
}

/// Catalan number `C_m = binom(2m, m) / (m + 1)`.
pub fn catalan(m: u32) -> BigInt {
    binomial(2 * m, m) / BigInt::from(m + 1)
}

/// `n^{n−1} / n!`, the weighted count of Cayley trees.
pub fn cayley_count(n: u32) -> Rational {
    let num = num_traits::pow(BigInt::from(n), (n - 1) as usize);
    let den: BigInt = (1..=n).map(BigInt::from).product();
    Rational::new(num, den)
}

/// A plane tree given by the ordered list of its root's subtrees.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlaneTree {
    pub children: Vec<PlaneTree>,
}

impl PlaneTree {
    pub fn leaf() -> Self {
        PlaneTree {
            children: Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(PlaneTree::size).sum::<usize>()
    }

    /// `w(T) = Π_v φ_{outdeg(v)}`.
    pub fn weight(&self, phi: &[Rational]) -> Rational {
        let mut w = phi[self.children.len()].clone();
        for c in &self.children {
            w *= c.weight(phi);
        }
        w
    }

    /// Every way of cutting one edge: `(root component, detached subtree)`.
    pub fn cuts(&self) -> Vec<(PlaneTree, PlaneTree)> {
        let mut out = Vec::new();
        for (i, child) in self.children.iter().enumerate() {
            let mut rest = self.clone();
            let detached = rest.children.remove(i);
            out.push((rest, detached));
            for (root_part, sub) in child.cuts() {
                let mut rest = self.clone();
                rest.children[i] = root_part;
                out.push((rest, sub));
            }
        }
        out
    }
}

/// All plane trees with `n` nodes.
pub fn plane_trees(n: usize) -> Vec<PlaneTree> {
    let mut memo: HashMap<usize, Vec<PlaneTree>> = HashMap::new();
    plane_trees_memo(n, &mut memo)
}

fn plane_trees_memo(n: usize, memo: &mut HashMap<usize, Vec<PlaneTree>>) -> Vec<PlaneTree> {
    if let Some(v) = memo.get(&n) {
        return v.clone();
    }
    let forests = plane_forests(n - 1, memo);
    let out: Vec<PlaneTree> = forests
        .into_iter()
        .map(|children| PlaneTree { children })
        .collect();
    memo.insert(n, out.clone());
    out
}

fn plane_forests(total: usize, memo: &mut HashMap<usize, Vec<PlaneTree>>) -> Vec<Vec<PlaneTree>> {
    if total == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 1..=total {
        let heads = plane_trees_memo(first, memo);
        let tails = plane_forests(total - first, memo);
        for h in &heads {
            for t in &tails {
                let mut f = Vec::with_capacity(t.len() + 1);
                f.push(h.clone());
                f.extend(t.iter().cloned());
                out.push(f);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CutVariant {
    OneSided,
    TwoSided,
}

/// Exact moments `E[cost^s | T]`, `s = 0..=s_max`, for a fixed tree, averaging
/// over uniform edge choices at every step. `tolls[m − 1]` is the cost
/// charged for a component of size `m`.
pub struct TreeCostOracle<'a> {
    tolls: &'a [Rational],
    s_max: usize,
    variant: CutVariant,
    memo: HashMap<PlaneTree, Vec<Rational>>,
}

impl<'a> TreeCostOracle<'a> {
    pub fn new(tolls: &'a [Rational], s_max: usize, variant: CutVariant) -> Self {
        TreeCostOracle {
            tolls,
            s_max,
            variant,
            memo: HashMap::new(),
        }
    }

    pub fn moments(&mut self, tree: &PlaneTree) -> Vec<Rational> {
        if let Some(v) = self.memo.get(tree) {
            return v.clone();
        }
        let m = tree.size();
        let toll = &self.tolls[m - 1];
        let powers_of = |x: &Rational, s_max: usize| {
            let mut p = vec![Rational::one()];
            for s in 1..=s_max {
                let next = &p[s - 1] * x;
                p.push(next);
            }
            p
        };
        let result = if m == 1 {
            powers_of(toll, self.s_max)
        } else {
            let cuts = tree.cuts();
            let edges = rational::int(cuts.len() as i64);
            let tp = powers_of(toll, self.s_max);
            let mut acc = vec![Rational::zero(); self.s_max + 1];
            for (root_part, sub) in cuts {
                let a = self.moments(&root_part);
                let b = match self.variant {
                    CutVariant::TwoSided => self.moments(&sub),
                    CutVariant::OneSided => {
                        let mut zero = vec![Rational::zero(); self.s_max + 1];
                        zero[0] = Rational::one();
                        zero
                    }
                };
                // E(t + A + B)^s with A, B independent
                for (s, slot) in acc.iter_mut().enumerate() {
                    for s1 in 0..=s {
                        for s2 in 0..=(s - s1) {
                            let s3 = s - s1 - s2;
                            let coeff = binomial(s as u32, s1 as u32)
                                * binomial((s - s1) as u32, s2 as u32);
                            *slot += Rational::from_integer(coeff) * &tp[s1] * &a[s2] * &b[s3];
                        }
                    }
                }
            }
            acc.into_iter().map(|v| v / &edges).collect()
        };
        self.memo.insert(tree.clone(), result.clone());
        result
    }
}

/// `E[cost^s]` for a random tree of size `n` from `spec`, by enumerating every
/// plane tree with its weight.
pub fn brute_force_moments(
    spec: &FamilySpec,
    n: usize,
    tolls: &[Rational],
    s_max: usize,
    variant: CutVariant,
) -> Vec<Rational> {
    let phi: Vec<Rational> = (0..n as u32).map(|k| spec.phi_coefficient(k)).collect();
    let mut oracle = TreeCostOracle::new(tolls, s_max, variant);
    let mut total_weight = Rational::zero();
    let mut acc = vec![Rational::zero(); s_max + 1];
    for tree in plane_trees(n) {
        let w = tree.weight(&phi);
        if w.is_zero() {
            continue;
        }
        let m = oracle.moments(&tree);
        for (slot, v) in acc.iter_mut().zip(m) {
            *slot += &w * v;
        }
        total_weight += w;
    }
    acc.into_iter().map(|v| v / &total_weight).collect()
}

/// Weighted count `T_n` by enumeration.
pub fn brute_force_count(spec: &FamilySpec, n: usize) -> Rational {
    let phi: Vec<Rational> = (0..n as u32).map(|k| spec.phi_coefficient(k)).collect();
    plane_trees(n).iter().map(|t| t.weight(&phi)).sum()
}

/// Two-sided limit moments from the unsymmetrized recurrence
///
/// ```text
/// m_s = 1/(2√π) Σ_{k=1}^{s−1} C(s,k) Γ(kα'+½) Γ((s−k)α'−½) / ((sα'−1) Γ(sα'−½)) m_k m_{s−k}
///       + s Γ(sα'−1) / (√2 Γ(sα'−½)) m_{s−1},
/// ```
///
/// with `m_1 = Γ(α−½)/(√2 Γ(α))`.
pub fn two_sided_limit_unsymmetrized(alpha: f64, s_max: usize) -> Vec<f64> {
    use statrs::function::gamma::gamma;
    let ap = alpha + 0.5;
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut m = vec![1.0, gamma(alpha - 0.5) / (2f64.sqrt() * gamma(alpha))];
    for s in 2..=s_max {
        let sf = s as f64;
        let mut total = 0.0;
        for k in 1..s {
            let kf = k as f64;
            let binom = crate::special::binomial_f64(s, k);
            total += binom * gamma(kf * ap + 0.5) * gamma((sf - kf) * ap - 0.5)
                / ((sf * ap - 1.0) * gamma(sf * ap - 0.5))
                * m[k]
                * m[s - k];
        }
        total /= 2.0 * sqrt_pi;
        total += sf * gamma(sf * ap - 1.0) / (2f64.sqrt() * gamma(sf * ap - 0.5)) * m[s - 1];
        m.push(total);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn enumeration_sizes_are_catalan() {
        for n in 1..=8 {
            assert_eq!(BigInt::from(plane_trees(n).len()), catalan(n as u32 - 1));
        }
    }

    #[test]
    fn lagrange_small_values() {
        let t = lagrange_counts(&FamilySpec::ordered(), 5);
        assert_eq!(t, vec![int(1), int(1), int(2), int(5), int(14)]);
        let t = lagrange_counts(&FamilySpec::cayley(), 4);
        assert_eq!(t, vec![int(1), int(1), ratio(3, 2), ratio(8, 3)]);
        let t = lagrange_counts(&FamilySpec::binary(), 3);
        assert_eq!(t, vec![int(1), int(2), int(5)]);
    }

    #[test]
    fn enumeration_matches_lagrange() {
        for spec in [FamilySpec::cayley(), FamilySpec::ordered(), FamilySpec::binary()] {
            let t = lagrange_counts(&spec, 7);
            for n in 1..=7 {
                assert_eq!(brute_force_count(&spec, n), t[n - 1]);
            }
        }
    }

    #[test]
    fn cut_enumeration_counts_edges() {
        for tree in plane_trees(6) {
            let cuts = tree.cuts();
            assert_eq!(cuts.len(), 5);
            for (a, b) in cuts {
                assert_eq!(a.size() + b.size(), 6);
            }
        }
    }

    #[test]
    fn hand_unrolled_small_cases() {
        let ones = vec![int(1); 5];
        let m = brute_force_moments(&FamilySpec::ordered(), 3, &ones, 2, CutVariant::OneSided);
        assert_eq!(m[1], ratio(11, 4));
        let lin: Vec<Rational> = (1..=5).map(int).collect();
        let m = brute_force_moments(&FamilySpec::cayley(), 3, &lin, 1, CutVariant::TwoSided);
        assert_eq!(m[1], int(8));
        let m = brute_force_moments(&FamilySpec::cayley(), 2, &ones, 2, CutVariant::OneSided);
        assert_eq!(m[2], int(4));
    }

    #[test]
    fn unsymmetrized_limit_at_alpha_one() {
        let m = two_sided_limit_unsymmetrized(1.0, 2);
        assert!((m[1] - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-12);
        assert!((m[2] - 5.0 / 3.0).abs() < 1e-12);
    }
}

//! Compensated accumulators used by the float-mode recurrences.

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Dot-product accumulator carrying the sum as an unevaluated pair of
/// doubles (error-free transformations, about 106 bits of working precision).
#[derive(Debug, Clone, Copy, Default)]
pub struct DoubleDoubleSum {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

impl DoubleDoubleSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let (s, e) = two_sum(self.hi, x);
        self.hi = s;
        self.lo += e;
    }

    /// Adds `a * b` with the product's rounding error captured by a fused multiply-add.
    #[inline]
    pub fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        let perr = a.mul_add(b, -p);
        self.add(p);
        self.lo += perr;
    }

    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

/// Selects the accumulator used in the moment recurrences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    /// Double precision with compensated summation.
    #[default]
    Standard,
    /// Double-double accumulation of every convolution.
    Extended,
}

/// Common interface so the recurrences can be generic over the accumulator.
pub trait Accumulator: Default {
    fn add_product(&mut self, a: f64, b: f64);
    fn value(&self) -> f64;
}

impl Accumulator for CompensatedSum {
    #[inline]
    fn add_product(&mut self, a: f64, b: f64) {
        self.add(a * b);
    }

    fn value(&self) -> f64 {
        CompensatedSum::value(self)
    }
}

impl Accumulator for DoubleDoubleSum {
    #[inline]
    fn add_product(&mut self, a: f64, b: f64) {
        DoubleDoubleSum::add_product(self, a, b);
    }

    fn value(&self) -> f64 {
        DoubleDoubleSum::value(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_recovers_lost_bits() {
        let mut naive = 0.0;
        let mut k = CompensatedSum::new();
        let mut dd = DoubleDoubleSum::new();
        for x in [1.0, 1e100, 1.0, -1e100] {
            naive += x;
            k.add(x);
            dd.add(x);
        }
        assert_eq!(naive, 0.0);
        assert_eq!(k.value(), 2.0);
        assert_eq!(dd.value(), 2.0);
    }

    #[test]
    fn exact_products() {
        let a = 1.0 + f64::EPSILON;
        let mut dd = DoubleDoubleSum::new();
        dd.add_product(a, a);
        dd.add(-1.0);
        // (1+e)^2 - 1 = 2e + e^2; plain doubles drop the e^2 term.
        let expected = 2.0 * f64::EPSILON + f64::EPSILON * f64::EPSILON;
        assert_eq!(dd.value(), expected);
    }
}

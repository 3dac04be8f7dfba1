//! Small helpers around `BigRational`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `p/q`, an integer, or a finite decimal such as `0.25` into an exact rational.
pub fn parse(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || Error::Parse(format!("not a rational number: {text:?}"));
    if let Some((p, q)) = text.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {text:?}")));
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.trim_start().starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        let whole: BigInt = if whole_digits.is_empty() {
            BigInt::zero()
        } else {
            whole_digits.parse().map_err(|_| bad())?
        };
        let frac_int: BigInt = frac.parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let magnitude = Rational::new(whole * &scale + frac_int, scale);
        return Ok(if negative { -magnitude } else { magnitude });
    }
    let p: BigInt = text.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(p))
}

/// `p/q` string, or just `p` for integers.
pub fn format(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Converts to `f64`, staying accurate when numerator and denominator overflow separately.
pub fn to_f64(value: &Rational) -> f64 {
    if let Some(v) = value.to_f64() {
        if v.is_finite() && (v != 0.0 || value.is_zero()) {
            return v;
        }
    }
    let sign = if value.is_negative() { -1.0 } else { 1.0 };
    let num = value.numer().abs();
    let den = value.denom();
    // Integer quotient with about 64 significant bits, then rescale.
    let shift = den.bits() as i64 - num.bits() as i64 + 64;
    let q = if shift >= 0 {
        (num << shift as u64) / den
    } else {
        num / (den << (-shift) as u64)
    };
    let mantissa = q.to_f64().unwrap_or(f64::NAN);
    let half = (shift / 2) as i32;
    sign * mantissa * 2f64.powi(-half) * 2f64.powi(-(shift as i32 - half))
}

/// Natural logarithm of a positive rational, accurate for huge numerators/denominators.
pub fn ln(value: &Rational) -> f64 {
    fn ln_int(v: &BigInt) -> f64 {
        let bits = v.bits();
        if bits < 1000 {
            v.to_f64().unwrap_or(f64::NAN).ln()
        } else {
            let drop = bits - 60;
            (v >> drop).to_f64().unwrap_or(f64::NAN).ln() + drop as f64 * std::f64::consts::LN_2
        }
    }
    ln_int(value.numer()) - ln_int(value.denom())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_forms() {
        assert_eq!(parse("3/4").unwrap(), ratio(3, 4));
        assert_eq!(parse(" 2 ").unwrap(), int(2));
        assert_eq!(parse("0.25").unwrap(), ratio(1, 4));
        assert_eq!(parse("-1.5").unwrap(), ratio(-3, 2));
        assert!(parse("1/0").is_err());
        assert!(parse("abc").is_err());
        assert!(parse("1.").is_err());
    }

    #[test]
    fn formats_integers_without_denominator() {
        assert_eq!(format(&ratio(6, 3)), "2");
        assert_eq!(format(&ratio(3, 16)), "3/16");
    }

    #[test]
    fn huge_ratio_to_f64() {
        let big = num_traits::pow(BigInt::from(10), 400);
        let r = Rational::new(big.clone() * BigInt::from(3), big * BigInt::from(4));
        assert_eq!(to_f64(&r), 0.75);
        let r = Rational::new(num_traits::pow(BigInt::from(2), 1500), BigInt::from(3));
        assert!((ln(&r) - (1500.0 * std::f64::consts::LN_2 - 3f64.ln())).abs() < 1e-9);
    }
}

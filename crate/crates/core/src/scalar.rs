//! Scalar abstraction shared by the whole crate.
//!
//! Every geometric and dynamical computation is written once against
//! [`Scalar`]. Two implementations ship: `f64` (fast, outer-enclosure mode)
//! and [`BigRational`] (exact mode, where certified verdicts never degrade
//! to `Unknown`).

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A real-number field with exact comparisons, closed under the operations
/// the model maps need (affine maps, `floor`, halving).
pub trait Scalar:
    Num + Signed + Clone + PartialOrd + Debug + Display + Send + Sync + 'static
{
    /// `true` when arithmetic is exact (no rounding anywhere).
    const EXACT: bool;

    fn from_ratio(num: i64, den: i64) -> Self;

    fn from_rational(q: &BigRational) -> Self;

    /// `k / 2^bits`, used to turn raw random bits into a uniform variate.
    fn from_dyadic(k: u64, bits: u32) -> Self;

    fn to_f64(&self) -> f64;

    fn floor(&self) -> Self;

    /// Width by which outer enclosures are inflated after each operation.
    /// Zero for exact arithmetic.
    fn rounding_slack() -> Self;

    fn from_usize(n: usize) -> Self {
        Self::from_ratio(n as i64, 1)
    }

    fn half() -> Self {
        Self::from_ratio(1, 2)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_rational(q: &BigRational) -> Self {
        ToPrimitive::to_f64(q).unwrap_or(f64::NAN)
    }

    fn from_dyadic(k: u64, bits: u32) -> Self {
        k as f64 / (2f64).powi(bits as i32)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn floor(&self) -> Self {
        f64::floor(*self)
    }

    fn rounding_slack() -> Self {
        1e-12
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_rational(q: &BigRational) -> Self {
        q.clone()
    }

    fn from_dyadic(k: u64, bits: u32) -> Self {
        BigRational::new(BigInt::from(k), BigInt::one() << bits as usize)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn floor(&self) -> Self {
        BigRational::floor(self)
    }

    fn rounding_slack() -> Self {
        BigRational::zero()
    }
}

/// Fractional part, in `[0, 1)`.
pub fn frac<S: Scalar>(x: &S) -> S {
    x.clone() - x.floor()
}

pub fn smin<S: Scalar>(a: &S, b: &S) -> S {
    if b < a {
        b.clone()
    } else {
        a.clone()
    }
}

pub fn smax<S: Scalar>(a: &S, b: &S) -> S {
    if b > a {
        b.clone()
    } else {
        a.clone()
    }
}

/// Integer power by repeated squaring; exact for rationals.
pub fn powi<S: Scalar>(base: &S, exp: usize) -> S {
    num_traits::pow(base.clone(), exp)
}

/// Parses `7`, `-0.25`, `1e-3`, `610/987` into an exact rational.
///
/// Decimal literals are read digit by digit, so `0.02` is exactly `1/50`.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let t = text.trim();
    if t.is_empty() {
        return Err(Error::Parse("empty number literal".to_string()));
    }
    if let Some((num, den)) = t.split_once('/') {
        let n = parse_rational(num)?;
        let d = parse_rational(den)?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in `{t}`")));
        }
        return Ok(n / d);
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = t[pos + 1..]
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent in `{t}`")))?;
            (&t[..pos], e)
        }
        None => (t, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(Error::Parse(format!("no digits in `{t}`")));
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(Error::Parse(format!("invalid number literal `{t}`")));
    }
    let all_digits = format!("{int_part}{frac_part}");
    let numer = BigInt::parse_bytes(all_digits.as_bytes(), 10).unwrap_or_default();
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(if negative { -value } else { value })
}

pub fn parse_scalar<S: Scalar>(text: &str) -> Result<S> {
    parse_rational(text).map(|q| S::from_rational(&q))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        <BigRational as Scalar>::from_ratio(n, d)
    }

    #[test]
    fn parses_literals_exactly() {
        assert_eq!(parse_rational("0.02").unwrap(), q(1, 50));
        assert_eq!(parse_rational("610/987").unwrap(), q(610, 987));
        assert_eq!(parse_rational("-0.25").unwrap(), q(-1, 4));
        assert_eq!(parse_rational("1e-3").unwrap(), q(1, 1000));
        assert_eq!(parse_rational("2.5E1").unwrap(), q(25, 1));
        assert_eq!(parse_rational("3").unwrap(), q(3, 1));
        assert_eq!(parse_rational(".5").unwrap(), q(1, 2));
        assert!(parse_rational("").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn frac_is_in_unit_interval() {
        assert_eq!(frac(&q(-1, 4)), q(3, 4));
        assert_eq!(frac(&q(5, 4)), q(1, 4));
        assert_eq!(frac(&1.0f64), 0.0);
        assert_eq!(frac(&-0.25f64), 0.75);
    }

    #[test]
    fn dyadic_matches_between_modes() {
        let k = 123_456_789u64;
        let exact = BigRational::from_dyadic(k, 53);
        assert_eq!(Scalar::to_f64(&exact), f64::from_dyadic(k, 53));
    }
}

//! Scalar abstraction shared by the exact and floating-point code paths.
//!
//! Certification-critical routines are instantiated with [`Rational`]; the
//! same generic code runs on `f64`/`f32` for quick exploratory use.

use std::fmt::Debug;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact ratio of two arbitrary-precision integers, always kept in lowest terms.
pub type Rational = BigRational;

pub trait Scalar: Num + Clone + Debug + PartialOrd + Send + Sync {
    /// `num / den` in this scalar type.
    fn ratio(num: u64, den: u64) -> Self;

    fn from_rational(r: &Rational) -> Self;

    fn to_f64(&self) -> f64;

    /// Exact rational value; `None` for non-finite floats.
    fn to_rational(&self) -> Option<Rational>;

    /// Slack used when checking normalization. Zero for exact types.
    fn tolerance() -> Self;

    fn is_exact() -> bool;
}

impl Scalar for Rational {
    fn ratio(num: u64, den: u64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }

    fn tolerance() -> Self {
        Rational::zero()
    }

    fn is_exact() -> bool {
        true
    }
}

macro_rules! float_scalar {
    ($t:ty, $tol:expr) => {
        impl Scalar for $t {
            fn ratio(num: u64, den: u64) -> Self {
                num as $t / den as $t
            }

            fn from_rational(r: &Rational) -> Self {
                ToPrimitive::to_f64(r).unwrap_or(f64::NAN) as $t
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn to_rational(&self) -> Option<Rational> {
                Rational::from_float(*self)
            }

            fn tolerance() -> Self {
                $tol
            }

            fn is_exact() -> bool {
                false
            }
        }
    };
}

float_scalar!(f64, 1e-9);
float_scalar!(f32, 1e-4);

/// Parses `"a/b"`, an integer, or a plain decimal such as `"0.875"` into an
/// exact rational. Exponent notation is accepted (`"1e-3"`).
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Validation(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| bad())?;
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        Rational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// Formats a non-negative rational as a decimal rounded *up* to `digits`
/// fractional digits.
pub fn format_decimal_ceil(value: &Rational, digits: usize) -> String {
    assert!(!value.is_negative(), "format_decimal_ceil expects a non-negative value");
    let scale = num_traits::pow(BigInt::from(10u32), digits);
    let scaled = value * Rational::from_integer(scale.clone());
    let units = scaled.ceil().to_integer();
    let int_part = &units / &scale;
    let frac_part = &units % &scale;
    if digits == 0 {
        return int_part.to_string();
    }
    format!("{int_part}.{:0>width$}", frac_part.to_string(), width = digits)
}

/// `1/2` as an exact rational.
pub fn one_half() -> Rational {
    Rational::new(BigInt::one(), BigInt::from(2u32))
}

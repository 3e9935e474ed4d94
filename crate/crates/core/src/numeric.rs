//! Numeric contexts.
//!
//! Every computation in the crate is generic over [`Real`], which is
//! implemented for `f64`, for binary big-floats of configurable width and
//! for exact rationals. Callers pick the context at runtime through
//! [`Precision`] and dispatch with [`with_real!`](crate::with_real).

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_int::{IBig, UBig};
use dashu_ratio::RBig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary big-float with round-half-even.
pub type BigFloat = FBig<HalfEven, 2>;

/// Exact rational.
pub type Rational = RBig;

pub const DEFAULT_BIGFLOAT_BITS: usize = 256;

/// Arithmetic used for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Precision {
    Float64,
    BigFloat { bits: usize },
    Rational,
}

impl Default for Precision {
    fn default() -> Self {
        Precision::Float64
    }
}

impl Precision {
    pub fn bigfloat() -> Self {
        Precision::BigFloat {
            bits: DEFAULT_BIGFLOAT_BITS,
        }
    }

    /// Bits handed to [`Real::from_rational`]; zero for the other contexts.
    pub fn bits(&self) -> usize {
        match self {
            Precision::BigFloat { bits } => *bits,
            _ => 0,
        }
    }

    /// Significant decimal digits worth printing in this context.
    pub fn decimal_digits(&self) -> usize {
        match self {
            Precision::Float64 => 17,
            Precision::BigFloat { bits } => ((*bits as f64) * std::f64::consts::LOG10_2).floor() as usize,
            Precision::Rational => 40,
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Precision::Float64 => write!(f, "float64"),
            Precision::BigFloat { bits } => write!(f, "bigfloat:{bits}"),
            Precision::Rational => write!(f, "rational"),
        }
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse {
            input: s.to_string(),
            expected: "float64 | bigfloat[:BITS] | rational",
        };
        match s.trim().to_ascii_lowercase().as_str() {
            "float64" | "f64" | "float" => Ok(Precision::Float64),
            "rational" | "exact" => Ok(Precision::Rational),
            "bigfloat" => Ok(Precision::bigfloat()),
            other => {
                let bits = other.strip_prefix("bigfloat:").ok_or_else(bad)?;
                let bits: usize = bits.parse().map_err(|_| bad())?;
                if !(53..=1 << 16).contains(&bits) {
                    return Err(bad());
                }
                Ok(Precision::BigFloat { bits })
            }
        }
    }
}

impl From<Precision> for String {
    fn from(p: Precision) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for Precision {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Field operations shared by all numeric contexts.
pub trait Real:
    Clone
    + fmt::Debug
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True when arithmetic is exact.
    const EXACT: bool;

    /// Converts an exact rational; `bits` is only read by big-floats.
    fn from_rational(r: &Rational, bits: usize) -> Self;

    /// The value `num/den` carried at the same precision as `like`.
    fn ratio_like(num: i64, den: i64, like: &Self) -> Self;

    /// Converts an `f64` at the precision of `like`.
    fn f64_like(x: f64, like: &Self) -> Self;

    fn as_f64(&self) -> f64;

    /// Decimal rendering with `digits` significant digits.
    fn to_decimal_string(&self, digits: usize) -> String;

    fn abs(&self) -> Self {
        if *self < Self::ratio_like(0, 1, self) {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if a <= b {
            a
        } else {
            b
        }
    }
}

impl Real for f64 {
    const EXACT: bool = false;

    fn from_rational(r: &Rational, _bits: usize) -> Self {
        r.to_f64().value()
    }

    fn ratio_like(num: i64, den: i64, _like: &Self) -> Self {
        num as f64 / den as f64
    }

    fn f64_like(x: f64, _like: &Self) -> Self {
        x
    }

    fn as_f64(&self) -> f64 {
        *self
    }

    fn to_decimal_string(&self, digits: usize) -> String {
        fmt_sig(*self, digits.min(17))
    }
}

impl Real for BigFloat {
    const EXACT: bool = false;

    fn from_rational(r: &Rational, bits: usize) -> Self {
        let bits = bits.max(53);
        let num = BigFloat::from(r.numerator().clone()).with_precision(bits).value();
        num / BigFloat::from(IBig::from(r.denominator().clone()))
    }

    fn ratio_like(num: i64, den: i64, like: &Self) -> Self {
        let bits = like.precision().max(53);
        BigFloat::from(num).with_precision(bits).value() / BigFloat::from(den)
    }

    fn f64_like(x: f64, like: &Self) -> Self {
        let bits = like.precision().max(53);
        BigFloat::try_from(x)
            .expect("finite f64")
            .with_precision(bits)
            .value()
    }

    fn as_f64(&self) -> f64 {
        FBig::to_f64(self).value()
    }

    fn to_decimal_string(&self, digits: usize) -> String {
        if *self == BigFloat::ZERO {
            return "0".to_string();
        }
        let dec = self.clone().with_base_and_precision::<10>(digits.max(1)).value();
        dec.to_string()
    }
}

impl Real for Rational {
    const EXACT: bool = true;

    fn from_rational(r: &Rational, _bits: usize) -> Self {
        r.clone()
    }

    fn ratio_like(num: i64, den: i64, _like: &Self) -> Self {
        debug_assert!(den != 0);
        let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
        RBig::from_parts(IBig::from(num), UBig::from(den as u64))
    }

    fn f64_like(x: f64, _like: &Self) -> Self {
        RBig::try_from(x).expect("finite f64")
    }

    fn as_f64(&self) -> f64 {
        RBig::to_f64(self).value()
    }

    fn to_decimal_string(&self, digits: usize) -> String {
        let bits = ((digits as f64) / std::f64::consts::LOG10_2).ceil() as usize + 8;
        Real::to_decimal_string(&BigFloat::from_rational(self, bits), digits)
    }
}

/// Runs `$body` with `$R` bound to the Rust type matching `$prec`.
#[macro_export]
macro_rules! with_real {
    ($prec:expr, $R:ident => $body:expr) => {
        match $prec {
            $crate::numeric::Precision::Float64 => {
                type $R = f64;
                $body
            }
            $crate::numeric::Precision::BigFloat { .. } => {
                type $R = $crate::numeric::BigFloat;
                $body
            }
            $crate::numeric::Precision::Rational => {
                type $R = $crate::numeric::Rational;
                $body
            }
        }
    };
}

/// Parses `0.73275300915`, `3/4`, `-2`, or `1.5e-4` as an exact rational.
pub fn parse_exact(input: &str) -> Result<Rational> {
    let s = input.trim();
    let bad = || Error::Parse {
        input: input.to_string(),
        expected: "a decimal or a fraction",
    };
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_exact(n)?;
        let d = parse_exact(d)?;
        if d == RBig::ZERO {
            return Err(bad());
        }
        return Ok(n / d);
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: String = format!("{int_part}{frac_part}");
    let mut num = IBig::from_str_radix(if all.is_empty() { "0" } else { &all }, 10).map_err(|_| bad())?;
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = UBig::from(10u8);
    Ok(if scale >= 0 {
        RBig::from(num * IBig::from(ten.pow(scale as usize)))
    } else {
        RBig::from_parts(num, ten.pow((-scale) as usize))
    })
}

/// Formats `x` with `sig` significant digits, switching to exponent form
/// for very large or small magnitudes.
pub fn fmt_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sig = sig.max(1);
    let exp = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&exp) {
        return format!("{:.*e}", sig - 1, x);
    }
    let decimals = (sig as i32 - 1 - exp).max(0) as usize;
    format!("{:.*}", decimals, x)
}

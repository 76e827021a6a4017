//! Exact rational numbers used as the no-rounding oracle.
//!
//! Almost every value that shows up in argument reduction is dyadic
//! (`m * 2^e`), so that case is kept separate from general fractions: sums
//! and products of dyadics stay dyadic and never pay for a gcd.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::softfp::Ties;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Repr {
    /// `mant * 2^exp`, `mant` odd, or zero with `exp == 0`.
    Dyadic { mant: BigInt, exp: i64 },
    /// Reduced fraction whose denominator is not a power of two.
    Ratio(BigRational),
}

/// An exact rational number. Arithmetic never rounds.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExactReal(Repr);

fn dyadic(mant: BigInt, exp: i64) -> ExactReal {
    if mant.is_zero() {
        return ExactReal(Repr::Dyadic { mant, exp: 0 });
    }
    let tz = mant.trailing_zeros().unwrap_or(0);
    ExactReal(Repr::Dyadic { mant: mant >> tz, exp: exp + tz as i64 })
}

fn shl(v: &BigInt, by: i64) -> BigInt {
    debug_assert!(by >= 0);
    v << (by as usize)
}

impl ExactReal {
    pub fn zero() -> Self {
        dyadic(BigInt::zero(), 0)
    }

    pub fn one() -> Self {
        dyadic(BigInt::one(), 0)
    }

    pub fn from_int(v: impl Into<BigInt>) -> Self {
        dyadic(v.into(), 0)
    }

    /// `2^k`.
    pub fn pow2(k: i64) -> Self {
        ExactReal(Repr::Dyadic { mant: BigInt::one(), exp: k })
    }

    /// `mant * 2^exp`.
    pub fn dyadic(mant: impl Into<BigInt>, exp: i64) -> Self {
        dyadic(mant.into(), exp)
    }

    /// `num / den`. Panics if `den` is zero.
    pub fn ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Self {
        Self::from_rational(BigRational::new(num.into(), den.into()))
    }

    pub fn from_rational(r: BigRational) -> Self {
        let den = r.denom();
        if den.is_one() {
            return dyadic(r.numer().clone(), 0);
        }
        let tz = den.trailing_zeros().unwrap_or(0);
        if (den >> tz).is_one() {
            return dyadic(r.numer().clone(), -(tz as i64));
        }
        ExactReal(Repr::Ratio(r))
    }

    pub fn to_rational(&self) -> BigRational {
        match &self.0 {
            Repr::Dyadic { mant, exp } => {
                if *exp >= 0 {
                    BigRational::from_integer(shl(mant, *exp))
                } else {
                    BigRational::new(mant.clone(), BigInt::one() << ((-exp) as usize))
                }
            }
            Repr::Ratio(r) => r.clone(),
        }
    }

    /// `(mant, exp)` with `mant` odd, when the value is dyadic.
    pub fn as_dyadic(&self) -> Option<(&BigInt, i64)> {
        match &self.0 {
            Repr::Dyadic { mant, exp } => Some((mant, *exp)),
            Repr::Ratio(_) => None,
        }
    }

    /// Numerator, positive denominator and a binary exponent such that the
    /// value is `num / den * 2^shift`.
    pub(crate) fn parts(&self) -> (BigInt, BigInt, i64) {
        match &self.0 {
            Repr::Dyadic { mant, exp } => (mant.clone(), BigInt::one(), *exp),
            Repr::Ratio(r) => (r.numer().clone(), r.denom().clone(), 0),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(&self.0, Repr::Dyadic { mant, .. } if mant.is_zero())
    }

    pub fn signum(&self) -> i32 {
        let s = match &self.0 {
            Repr::Dyadic { mant, .. } => mant.sign(),
            Repr::Ratio(r) => r.numer().sign(),
        };
        match s {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    pub fn is_negative(&self) -> bool {
        self.signum() < 0
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Dyadic { mant, exp } => mant.is_zero() || *exp >= 0,
            Repr::Ratio(_) => false,
        }
    }

    /// Multiplies by `2^k` exactly.
    pub fn mul_pow2(&self, k: i64) -> Self {
        match &self.0 {
            Repr::Dyadic { mant, exp } => {
                if mant.is_zero() {
                    self.clone()
                } else {
                    ExactReal(Repr::Dyadic { mant: mant.clone(), exp: exp + k })
                }
            }
            Repr::Ratio(r) => {
                let two = BigInt::from(2u8);
                if k >= 0 {
                    Self::from_rational(r * BigRational::from_integer(num_traits::pow(two, k as usize)))
                } else {
                    Self::from_rational(r / BigRational::from_integer(num_traits::pow(two, (-k) as usize)))
                }
            }
        }
    }

    /// `1 / self`, or `None` for zero.
    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        match &self.0 {
            Repr::Dyadic { mant, exp } if mant.abs().is_one() => {
                Some(ExactReal(Repr::Dyadic { mant: mant.clone(), exp: -exp }))
            }
            _ => Some(Self::from_rational(self.to_rational().recip())),
        }
    }

    pub fn div(&self, rhs: &Self) -> Option<Self> {
        rhs.recip().map(|r| self * &r)
    }

    /// Largest integer not above the value.
    pub fn floor(&self) -> BigInt {
        match &self.0 {
            Repr::Dyadic { mant, exp } => {
                if *exp >= 0 {
                    shl(mant, *exp)
                } else {
                    // Arithmetic shift on BigInt rounds toward negative infinity.
                    mant >> ((-exp) as usize)
                }
            }
            Repr::Ratio(r) => r.numer().div_floor(r.denom()),
        }
    }

    /// Nearest integer with the given tie rule.
    pub fn round_to_int(&self, ties: Ties) -> BigInt {
        let fl = Self::from_int(self.floor());
        let frac = self - &fl;
        let half = Self::pow2(-1);
        let base = fl.floor();
        match frac.cmp(&half) {
            Ordering::Less => base,
            Ordering::Greater => base + 1,
            Ordering::Equal => match ties {
                Ties::Even => {
                    if base.is_even() {
                        base
                    } else {
                        base + 1
                    }
                }
                Ties::Away => {
                    if self.is_negative() {
                        base
                    } else {
                        base + 1
                    }
                }
            },
        }
    }

    /// `floor(log2 |v|)` for nonzero values.
    pub fn ilog2(&self) -> Option<i64> {
        if self.is_zero() {
            return None;
        }
        let (num, den, shift) = self.parts();
        let num = num.magnitude().clone();
        let den = den.magnitude().clone();
        let t = num.bits() as i64 - den.bits() as i64 + shift;
        // value lies in (2^(t-1), 2^(t+1)); decide which side of 2^t.
        let ge = compare_scaled(&num, &den, shift, t) != Ordering::Less;
        Some(if ge { t } else { t - 1 })
    }

    /// Approximate `f64` value (truncated to 60 bits), for reporting only.
    pub fn to_f64(&self) -> f64 {
        match self.ilog2() {
            None => 0.0,
            Some(l) => {
                let top = self.mul_pow2(60 - l).floor().to_f64().unwrap_or(0.0);
                top * 2f64.powi((l - 60).clamp(-2000, 2000) as i32)
            }
        }
    }

    /// `log2 |v|` as a float, for reporting magnitudes that overflow `f64`.
    pub fn log2_abs(&self) -> f64 {
        match self.ilog2() {
            None => f64::NEG_INFINITY,
            Some(l) => {
                let frac = self.abs().mul_pow2(-l).to_f64();
                l as f64 + frac.log2()
            }
        }
    }
}

/// Compares `num / den * 2^shift` against `2^t` for positive integers.
fn compare_scaled(num: &BigUint, den: &BigUint, shift: i64, t: i64) -> Ordering {
    let k = shift - t;
    if k >= 0 {
        (num << (k as usize)).cmp(den)
    } else {
        num.cmp(&(den << ((-k) as usize)))
    }
}

impl Default for ExactReal {
    fn default() -> Self {
        Self::zero()
    }
}

impl Ord for ExactReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Dyadic { mant: a, exp: ea }, Repr::Dyadic { mant: b, exp: eb }) => {
                let sa = a.sign();
                let sb = b.sign();
                if sa != sb {
                    return sa.cmp(&sb);
                }
                if a.is_zero() {
                    return Ordering::Equal;
                }
                let e = (*ea).min(*eb);
                shl(a, ea - e).cmp(&shl(b, eb - e))
            }
            _ => self.to_rational().cmp(&other.to_rational()),
        }
    }
}

impl PartialOrd for ExactReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Neg for &ExactReal {
    type Output = ExactReal;

    fn neg(self) -> ExactReal {
        match &self.0 {
            Repr::Dyadic { mant, exp } => ExactReal(Repr::Dyadic { mant: -mant, exp: *exp }),
            Repr::Ratio(r) => ExactReal(Repr::Ratio(-r)),
        }
    }
}

impl Neg for ExactReal {
    type Output = ExactReal;

    fn neg(self) -> ExactReal {
        -&self
    }
}

impl Add for &ExactReal {
    type Output = ExactReal;

    fn add(self, rhs: &ExactReal) -> ExactReal {
        match (&self.0, &rhs.0) {
            (Repr::Dyadic { mant: a, exp: ea }, Repr::Dyadic { mant: b, exp: eb }) => {
                if a.is_zero() {
                    return rhs.clone();
                }
                if b.is_zero() {
                    return self.clone();
                }
                let e = (*ea).min(*eb);
                dyadic(shl(a, ea - e) + shl(b, eb - e), e)
            }
            _ => ExactReal::from_rational(self.to_rational() + rhs.to_rational()),
        }
    }
}

impl Sub for &ExactReal {
    type Output = ExactReal;

    fn sub(self, rhs: &ExactReal) -> ExactReal {
        self + &(-rhs)
    }
}

impl Mul for &ExactReal {
    type Output = ExactReal;

    fn mul(self, rhs: &ExactReal) -> ExactReal {
        match (&self.0, &rhs.0) {
            (Repr::Dyadic { mant: a, exp: ea }, Repr::Dyadic { mant: b, exp: eb }) => {
                if a.is_zero() || b.is_zero() {
                    ExactReal::zero()
                } else {
                    // product of odd mantissas is odd: already normalized
                    ExactReal(Repr::Dyadic { mant: a * b, exp: ea + eb })
                }
            }
            _ => ExactReal::from_rational(self.to_rational() * rhs.to_rational()),
        }
    }
}

macro_rules! owned_binop {
    ($tr:ident, $f:ident) => {
        impl $tr for ExactReal {
            type Output = ExactReal;
            fn $f(self, rhs: ExactReal) -> ExactReal {
                (&self).$f(&rhs)
            }
        }
        impl $tr<&ExactReal> for ExactReal {
            type Output = ExactReal;
            fn $f(self, rhs: &ExactReal) -> ExactReal {
                (&self).$f(rhs)
            }
        }
        impl $tr<ExactReal> for &ExactReal {
            type Output = ExactReal;
            fn $f(self, rhs: ExactReal) -> ExactReal {
                self.$f(&rhs)
            }
        }
    };
}

owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);

/// Dyadics print as `m * 2^e` (the same layout as [`Fpn`](crate::softfp::Fpn)),
/// other fractions as `num/den`.
impl fmt::Display for ExactReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Dyadic { mant, exp } => write!(f, "{mant} * 2^{exp}"),
            Repr::Ratio(r) => write!(f, "{}/{}", r.numer(), r.denom()),
        }
    }
}

/// Parses an integer significand in decimal or `0x` hexadecimal, with an
/// optional sign.
pub(crate) fn parse_significand(s: &str) -> Result<BigInt> {
    let s = s.trim();
    let (neg, body) = match s.as_bytes().first() {
        Some(b'-') => (true, &s[1..]),
        Some(b'+') => (false, &s[1..]),
        _ => (false, s),
    };
    let body = body.trim();
    let mag = if let Some(hex) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        BigInt::parse_bytes(hex.replace('_', "").as_bytes(), 16)
    } else {
        BigInt::parse_bytes(body.replace('_', "").as_bytes(), 10)
    }
    .filter(|_| !body.is_empty() && !body.starts_with(['+', '-']))
    .ok_or_else(|| Error::Parse(format!("invalid significand `{s}`")))?;
    Ok(if neg { -mag } else { mag })
}

fn parse_decimal(s: &str) -> Result<ExactReal> {
    let err = || Error::Parse(format!("invalid decimal `{s}`"));
    let (neg, body) = match s.as_bytes().first() {
        Some(b'-') => (true, &s[1..]),
        Some(b'+') => (false, &s[1..]),
        _ => (false, s),
    };
    let (mantissa, exp10) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i64>().map_err(|_| err())?),
        None => (body, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(err());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num = BigInt::parse_bytes(digits.as_bytes(), 10).ok_or_else(err)?;
    if neg {
        num = -num;
    }
    let scale = exp10 - frac_part.len() as i64;
    if scale.unsigned_abs() > 100_000 {
        return Err(err());
    }
    let ten = BigInt::from(10u8);
    Ok(if scale >= 0 {
        ExactReal::from_int(num * num_traits::pow(ten, scale as usize))
    } else {
        ExactReal::ratio(num, num_traits::pow(ten, (-scale) as usize))
    })
}

/// Accepts `m * 2^e` (decimal or hex `m`), `num/den`, and decimal literals
/// such as `10.0` or `-1.5e-3`. Parsing is exact.
impl FromStr for ExactReal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(star) = s.find('*') {
            let (m, rest) = (&s[..star], s[star + 1..].trim());
            let e = rest
                .strip_prefix("2^")
                .ok_or_else(|| Error::Parse(format!("expected `2^<exp>` in `{s}`")))?;
            let e = e
                .trim()
                .trim_start_matches('(')
                .trim_end_matches(')')
                .parse::<i64>()
                .map_err(|_| Error::Parse(format!("invalid exponent in `{s}`")))?;
            return Ok(dyadic(parse_significand(m)?, e));
        }
        if let Some(slash) = s.find('/') {
            let num = parse_significand(&s[..slash])?;
            let den = parse_significand(&s[slash + 1..])?;
            if den.is_zero() {
                return Err(Error::Parse("zero denominator".into()));
            }
            return Ok(ExactReal::ratio(num, den));
        }
        if s.starts_with("0x") || s.starts_with("-0x") || s.starts_with("+0x") {
            return Ok(ExactReal::from_int(parse_significand(s)?));
        }
        parse_decimal(s)
    }
}

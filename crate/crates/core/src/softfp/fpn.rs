use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::softfp::{round, ExactReal, Format};

/// One floating-point number `±m * 2^e` of a [`Format`].
///
/// Always canonical: either `m >= 2^(p-1)` (normal) or `e == e_min_q`
/// (subnormal or zero), so two numbers are equal iff their fields are.
/// There is no negative zero, infinity or NaN; overflow is an error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Fpn {
    neg: bool,
    m: u128,
    e: i32,
    fmt: Format,
}

pub(crate) fn bits_u128(m: u128) -> u32 {
    128 - m.leading_zeros()
}

impl Fpn {
    pub fn zero(fmt: Format) -> Self {
        Fpn { neg: false, m: 0, e: fmt.e_min_q(), fmt }
    }

    /// Builds `±m * 2^e` from a significand with at most `p` significant
    /// bits. Fails when the value needs more than `p` bits at or above the
    /// subnormal quantum, or overflows.
    pub fn from_parts(fmt: Format, neg: bool, m: u128, e: i64) -> Result<Self> {
        if m == 0 {
            return Ok(Self::zero(fmt));
        }
        let tz = m.trailing_zeros() as i64;
        let (m, e) = (m >> tz, e + tz);
        let not_repr = || Error::NotRepresentable {
            value: format!("{}{m} * 2^{e}", if neg { "-" } else { "" }),
            format: fmt.to_string(),
        };
        if bits_u128(m) > fmt.p() || e < fmt.e_min_q() as i64 {
            return Err(not_repr());
        }
        Self::canonical(fmt, neg, m, e)
    }

    /// Canonicalizes an in-range significand (`m < 2^p`, `e >= e_min_q`).
    pub(crate) fn canonical(fmt: Format, neg: bool, m: u128, e: i64) -> Result<Self> {
        debug_assert!(bits_u128(m) <= fmt.p() && e >= fmt.e_min_q() as i64);
        if m == 0 {
            return Ok(Self::zero(fmt));
        }
        let room = (fmt.p() - bits_u128(m)) as i64;
        let shift = room.min(e - fmt.e_min_q() as i64);
        let m = m << shift;
        let e = e - shift;
        if e + bits_u128(m) as i64 - 1 > fmt.e_max() as i64 {
            return Err(Error::Overflow(format!(
                "{}{m} * 2^{e} exceeds the range of {fmt}",
                if neg { "-" } else { "" }
            )));
        }
        Ok(Fpn { neg, m, e: e as i32, fmt })
    }

    pub fn from_int(fmt: Format, v: i128) -> Result<Self> {
        Self::from_parts(fmt, v < 0, v.unsigned_abs(), 0)
    }

    /// `2^k`.
    pub fn pow2(fmt: Format, k: i64) -> Result<Self> {
        Self::from_parts(fmt, false, 1, k)
    }

    /// The exact value `v`, or an error when it needs rounding.
    pub fn from_exact(fmt: Format, v: &ExactReal) -> Result<Self> {
        let (x, inexact) = round::round_flagged(v, fmt, fmt.p())?;
        if inexact {
            return Err(Error::NotRepresentable { value: v.to_string(), format: fmt.to_string() });
        }
        Ok(x)
    }

    /// Parses the textual `m * 2^e` layout (decimal or `0x` significand)
    /// or a fraction; the value must be exactly representable.
    pub fn parse_exact(s: &str, fmt: Format) -> Result<Self> {
        let v: ExactReal = s.parse()?;
        Self::from_exact(fmt, &v)
    }

    /// Parses any literal accepted by [`ExactReal`] (including decimals like
    /// `10.0`) and rounds it to nearest.
    pub fn parse_nearest(s: &str, fmt: Format) -> Result<Self> {
        let v: ExactReal = s.parse()?;
        round::round(&v, fmt, fmt.p())
    }

    pub fn format(&self) -> Format {
        self.fmt
    }

    pub fn is_zero(&self) -> bool {
        self.m == 0
    }

    pub fn is_negative(&self) -> bool {
        self.neg
    }

    /// Integer significand, `0 <= m < 2^p`.
    pub fn significand(&self) -> u128 {
        self.m
    }

    /// Quantum exponent: the value is `±significand * 2^exponent`.
    pub fn exponent(&self) -> i32 {
        self.e
    }

    pub fn signed_significand(&self) -> i128 {
        if self.neg {
            -(self.m as i128)
        } else {
            self.m as i128
        }
    }

    pub fn is_normal(&self) -> bool {
        bits_u128(self.m) == self.fmt.p()
    }

    pub fn is_subnormal(&self) -> bool {
        self.m != 0 && !self.is_normal()
    }

    /// `floor(log2 |x|)`, `None` for zero.
    pub fn binade(&self) -> Option<i64> {
        (self.m != 0).then(|| self.e as i64 + bits_u128(self.m) as i64 - 1)
    }

    /// Number of significant bits: significand length without trailing zeros.
    pub fn significant_bits(&self) -> u32 {
        if self.m == 0 {
            0
        } else {
            bits_u128(self.m) - self.m.trailing_zeros()
        }
    }

    /// Largest exponent `e'` such that `x = n * 2^e'` for an integer `n`.
    pub fn max_repr_exponent(&self) -> i64 {
        if self.m == 0 {
            i64::MAX
        } else {
            self.e as i64 + self.m.trailing_zeros() as i64
        }
    }

    pub fn is_power_of_two(&self) -> bool {
        self.m.is_power_of_two()
    }

    pub fn neg(self) -> Self {
        if self.m == 0 {
            self
        } else {
            Fpn { neg: !self.neg, ..self }
        }
    }

    pub fn abs(self) -> Self {
        Fpn { neg: false, ..self }
    }

    /// Same value in another format; errors when it does not fit.
    pub fn convert(&self, fmt: Format) -> Result<Self> {
        Self::from_parts(fmt, self.neg, self.m, self.e as i64)
    }

    pub fn to_exact(&self) -> ExactReal {
        ExactReal::dyadic(BigInt::from(self.signed_significand()), self.e as i64)
    }

    pub fn to_f64(&self) -> f64 {
        let v = self.m.to_f64().unwrap_or(0.0) * 2f64.powi(self.e.clamp(-1100, 1100));
        if self.neg {
            -v
        } else {
            v
        }
    }

    /// Exponent of `ulp(x)`. For canonical numbers this is the quantum
    /// exponent, subnormals and zero included.
    pub fn ulp_exp(&self) -> i64 {
        self.e as i64
    }

    /// Unit in the last place of a `p`-bit number; `λ` for zero and
    /// subnormals, `2^(k-p+1)` for `2^k`.
    pub fn ulp(&self) -> ExactReal {
        ExactReal::pow2(self.ulp_exp())
    }

    /// Exponent of `ulp(ulp(x))`.
    pub fn ulp2_exp(&self) -> i64 {
        let u = self.ulp_exp();
        (u - self.fmt.p() as i64 + 1).max(self.fmt.e_min_q() as i64)
    }

    /// `ulp(ulp(x))`.
    pub fn ulp2(&self) -> ExactReal {
        ExactReal::pow2(self.ulp2_exp())
    }

    /// Magnitude comparison.
    pub fn cmp_abs(&self, other: &Fpn) -> Ordering {
        match (self.m == 0, other.m == 0) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let (ba, bb) = (self.binade().unwrap(), other.binade().unwrap());
        if ba != bb {
            return ba.cmp(&bb);
        }
        // same binade: align the quanta
        let e = self.e.min(other.e);
        let sa = (self.e - e) as u32;
        let sb = (other.e - e) as u32;
        (self.m << sa).cmp(&(other.m << sb))
    }
}

impl PartialOrd for Fpn {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let sa = if self.m == 0 { 0 } else if self.neg { -1 } else { 1 };
        let sb = if other.m == 0 { 0 } else if other.neg { -1 } else { 1 };
        Some(match sa.cmp(&sb) {
            Ordering::Equal if sa >= 0 => self.cmp_abs(other),
            Ordering::Equal => other.cmp_abs(self),
            ord => ord,
        })
    }
}

/// `m * 2^e` with a decimal significand; `{:#}` prints it in hexadecimal.
impl fmt::Display for Fpn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.neg { "-" } else { "" };
        if f.alternate() {
            write!(f, "{sign}{:#x} * 2^{}", self.m, self.e)
        } else {
            write!(f, "{sign}{} * 2^{}", self.m, self.e)
        }
    }
}

//! Certified enclosures of real constants and exact rational rounding.
//!
//! Enclosures are computed from series with rigorous truncation bounds, so
//! no digit table is trusted. Anything rounded from an enclosure goes
//! through [`resolve`], which only answers once both ends of the enclosure
//! agree.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::softfp::{round, ExactReal, Format, Fpn, Ties};

/// Closed interval `[lo, hi]` with dyadic or rational endpoints known to
/// contain a real constant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RealEnclosure {
    lo: ExactReal,
    hi: ExactReal,
}

impl RealEnclosure {
    pub fn new(lo: ExactReal, hi: ExactReal) -> Result<Self> {
        if lo > hi {
            return Err(Error::Range(format!("empty enclosure [{lo}, {hi}]")));
        }
        Ok(RealEnclosure { lo, hi })
    }

    /// Width-zero enclosure of an exactly known value.
    pub fn exact(v: ExactReal) -> Self {
        RealEnclosure { lo: v.clone(), hi: v }
    }

    pub fn lo(&self) -> &ExactReal {
        &self.lo
    }

    pub fn hi(&self) -> &ExactReal {
        &self.hi
    }

    pub fn width(&self) -> ExactReal {
        &self.hi - &self.lo
    }

    pub fn contains(&self, v: &ExactReal) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    /// True when `other` lies inside `self`.
    pub fn contains_enclosure(&self, other: &RealEnclosure) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// `-log2(width)`, rounded down; `None` for a width-zero enclosure.
    pub fn accuracy_bits(&self) -> Option<i64> {
        self.width().ilog2().map(|l| -l - 1)
    }

    pub fn mul_pow2(&self, k: i64) -> Self {
        RealEnclosure { lo: self.lo.mul_pow2(k), hi: self.hi.mul_pow2(k) }
    }

    pub fn neg(&self) -> Self {
        RealEnclosure { lo: -&self.hi, hi: -&self.lo }
    }

    /// `1/C`, defined when the enclosure excludes zero.
    pub fn recip(&self) -> Option<Self> {
        if self.lo.signum() * self.hi.signum() <= 0 {
            return None;
        }
        Some(RealEnclosure { lo: self.hi.recip()?, hi: self.lo.recip()? })
    }

    /// `C - v` for an exact `v`.
    pub fn sub_exact(&self, v: &ExactReal) -> Self {
        RealEnclosure { lo: &self.lo - v, hi: &self.hi - v }
    }

    /// Largest distance from `v` to a point of the enclosure.
    pub fn max_distance(&self, v: &ExactReal) -> ExactReal {
        let a = (&self.lo - v).abs();
        let b = (&self.hi - v).abs();
        if a > b {
            a
        } else {
            b
        }
    }
}

impl fmt::Display for RealEnclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl Serialize for RealEnclosure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("RealEnclosure", 2)?;
        st.serialize_field("lo", &self.lo.to_string())?;
        st.serialize_field("hi", &self.hi.to_string())?;
        st.end()
    }
}

/// Parses two lines `lo = <value>` and `hi = <value>`; `#` starts a comment.
impl FromStr for RealEnclosure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (mut lo, mut hi) = (None, None);
        for line in s.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, val) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected `lo = ...` or `hi = ...`, got `{line}`")))?;
            let val: ExactReal = val.trim().parse()?;
            match key.trim() {
                "lo" => lo = Some(val),
                "hi" => hi = Some(val),
                k => return Err(Error::Parse(format!("unknown enclosure key `{k}`"))),
            }
        }
        match (lo, hi) {
            (Some(lo), Some(hi)) => RealEnclosure::new(lo, hi),
            _ => Err(Error::Parse("enclosure needs both `lo` and `hi`".into())),
        }
    }
}

/// `atan(1/x) * 2^w` with a bound on the error of the returned integer.
fn atan_inv_scaled(x: u32, w: u64) -> (BigInt, BigInt) {
    let x2 = BigUint::from(x) * BigUint::from(x);
    let mut power = (BigUint::one() << w) / BigUint::from(x);
    let mut sum = BigInt::zero();
    let mut k: u64 = 0;
    while !power.is_zero() {
        let term = BigInt::from(&power / BigUint::from(2 * k + 1));
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        power /= &x2;
        k += 1;
    }
    // Each floored power is at most k+1 units low, each term one more; the
    // first omitted term is below one unit.
    let err = BigInt::from(2 * k + 3) * BigInt::from(k + 1);
    (sum, err)
}

/// Enclosure of π of width at most `2^-bits`, by Machin's formula
/// `π = 16 atan(1/5) - 4 atan(1/239)`.
pub fn pi_enclosure(bits: u32) -> RealEnclosure {
    let mut w = bits as u64 + 24 + 2 * (64 - (bits as u64).leading_zeros() as u64);
    loop {
        let (a, ea) = atan_inv_scaled(5, w);
        let (b, eb) = atan_inv_scaled(239, w);
        let mid = BigInt::from(16) * a - BigInt::from(4) * b;
        let err = BigInt::from(16) * ea + BigInt::from(4) * eb;
        let enc = RealEnclosure {
            lo: ExactReal::dyadic(&mid - &err, -(w as i64)),
            hi: ExactReal::dyadic(&mid + &err, -(w as i64)),
        };
        if enc.width() <= ExactReal::pow2(-(bits as i64)) {
            return enc;
        }
        w += 16;
    }
}

/// Enclosure of ln 2 of width at most `2^-bits`, from
/// `ln 2 = sum_{k>=1} 1 / (k 2^k)`.
pub fn ln2_enclosure(bits: u32) -> RealEnclosure {
    let mut w = bits as u64 + 8 + 64 - (bits as u64).leading_zeros() as u64;
    loop {
        let one = BigUint::one();
        let mut sum = BigUint::zero();
        for k in 1..=w {
            sum += (&one << (w - k)) / BigUint::from(k);
        }
        // w floored terms, plus a tail below 2 / (w + 1) units.
        let sum = BigInt::from(sum);
        let enc = RealEnclosure {
            lo: ExactReal::dyadic(sum.clone(), -(w as i64)),
            hi: ExactReal::dyadic(sum + BigInt::from(w + 1), -(w as i64)),
        };
        if enc.width() <= ExactReal::pow2(-(bits as i64)) {
            return enc;
        }
        w += 16;
    }
}

/// A real constant that can be enclosed to any requested accuracy, or a
/// user-supplied fixed enclosure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Constant {
    Pi,
    Ln2,
    /// `base * 2^pow2`, e.g. `π/2` or `2π`.
    Scaled { base: Box<Constant>, pow2: i64 },
    /// An enclosure that cannot be refined further.
    Fixed { name: String, enclosure: RealEnclosure },
}

impl Constant {
    pub fn scaled(self, pow2: i64) -> Self {
        match self {
            Constant::Scaled { base, pow2: k } => Constant::Scaled { base, pow2: k + pow2 },
            c => Constant::Scaled { base: Box::new(c), pow2 },
        }
    }

    pub fn enclosure(&self, bits: u32) -> RealEnclosure {
        match self {
            Constant::Pi => pi_enclosure(bits),
            Constant::Ln2 => ln2_enclosure(bits),
            Constant::Scaled { base, pow2 } => {
                let extra = (*pow2).max(0) as u32;
                base.enclosure(bits + extra).mul_pow2(*pow2)
            }
            Constant::Fixed { enclosure, .. } => enclosure.clone(),
        }
    }

    /// Whether asking for more bits can shrink the enclosure.
    pub fn is_refinable(&self) -> bool {
        match self {
            Constant::Pi | Constant::Ln2 => true,
            Constant::Scaled { base, .. } => base.is_refinable(),
            Constant::Fixed { .. } => false,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Constant::Pi => "pi".into(),
            Constant::Ln2 => "ln2".into(),
            Constant::Scaled { base, pow2 } if *pow2 >= 0 => format!("{}*2^{}", base.name(), pow2),
            Constant::Scaled { base, pow2 } => format!("{}/2^{}", base.name(), -pow2),
            Constant::Fixed { name, .. } => name.clone(),
        }
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Accepts `pi`, `ln2`, power-of-two scalings such as `2pi`, `pi/2`,
/// `pi*2^3`, and `exact:<number>` for an exactly known value.
impl FromStr for Constant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(v) = s.trim().strip_prefix("exact:") {
            let v: ExactReal = v.parse()?;
            return Ok(Constant::Fixed { name: format!("exact:{v}"), enclosure: RealEnclosure::exact(v) });
        }
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
        let base = |b: &str| match b {
            "pi" | "π" => Some(Constant::Pi),
            "ln2" | "log2" => Some(Constant::Ln2),
            _ => None,
        };
        let pow2_of = |n: &str| -> Option<i64> {
            if let Some(e) = n.strip_prefix("2^") {
                return e.trim_matches(|c| c == '(' || c == ')').parse().ok();
            }
            let v: u64 = n.parse().ok()?;
            v.is_power_of_two().then(|| v.trailing_zeros() as i64)
        };
        let err = || Error::Parse(format!("unknown constant `{s}`"));
        if let Some(c) = base(&t) {
            return Ok(c);
        }
        if let Some((b, n)) = t.split_once('/') {
            return Ok(base(b).ok_or_else(err)?.scaled(-pow2_of(n).ok_or_else(err)?));
        }
        if let Some((b, n)) = t.split_once('*') {
            if let Some(c) = base(b) {
                return Ok(c.scaled(pow2_of(n).ok_or_else(err)?));
            }
            return Ok(base(n).ok_or_else(err)?.scaled(pow2_of(b).ok_or_else(err)?));
        }
        for (i, _) in t.char_indices().skip(1) {
            if let (Some(k), Some(c)) = (pow2_of(&t[..i]), base(&t[i..])) {
                return Ok(c.scaled(k));
            }
        }
        Err(err())
    }
}

/// Maximum number of refinements before giving up on an ambiguous result.
pub const MAX_REFINEMENTS: u32 = 8;

/// Evaluates a monotone function of a constant on both ends of an
/// enclosure, refining until both ends agree.
///
/// Starts at `start_bits` and doubles. Fails with
/// [`Error::AmbiguousRounding`] when the answers still differ after
/// [`MAX_REFINEMENTS`] doublings, or at once for a fixed enclosure.
pub fn resolve<T, F>(c: &Constant, start_bits: u32, f: F) -> Result<T>
where
    T: PartialEq + fmt::Display,
    F: Fn(&ExactReal) -> Result<T>,
{
    let mut bits = start_bits.max(16);
    for _ in 0..=MAX_REFINEMENTS {
        let enc = c.enclosure(bits);
        let (a, b) = (f(enc.lo())?, f(enc.hi())?);
        if a == b {
            return Ok(a);
        }
        if !c.is_refinable() {
            return Err(Error::AmbiguousRounding(format!(
                "{c}: enclosure {enc} rounds to both {a} and {b}"
            )));
        }
        bits = bits.saturating_mul(2);
    }
    Err(Error::AmbiguousRounding(format!(
        "{c}: still ambiguous at {bits} bits; the value may be a tie or exactly representable"
    )))
}

/// Rounds an enclosure when both ends round alike.
pub fn safe_round(enc: &RealEnclosure, fmt: Format, target_p: u32) -> Result<Fpn> {
    let a = round(enc.lo(), fmt, target_p)?;
    let b = round(enc.hi(), fmt, target_p)?;
    if a == b {
        Ok(a)
    } else {
        Err(Error::AmbiguousRounding(format!("{enc} rounds to both {a} and {b}")))
    }
}

/// `∘_target_p(C)`, refining the enclosure from 3× the target width.
pub fn round_constant(c: &Constant, fmt: Format, target_p: u32) -> Result<Fpn> {
    resolve(c, 3 * target_p, |v| round(v, fmt, target_p))
}

/// Nearest `target_p`-digit number to `num / den`, decided by integer
/// comparisons only. Independent of [`round`].
pub fn round_rational(num: &BigInt, den: &BigInt, fmt: Format, target_p: u32) -> Result<Fpn> {
    if den.is_zero() {
        return Err(Error::Range("zero denominator".into()));
    }
    if target_p < 2 || target_p > fmt.p() {
        return Err(Error::InvalidFormat(format!("cannot round to {target_p} digits in {fmt}")));
    }
    if num.is_zero() {
        return Ok(Fpn::zero(fmt));
    }
    let neg = num.is_negative() != den.is_negative();
    let a = num.magnitude().clone();
    let b = den.magnitude().clone();

    // a * 2^-e vs b * m, as integers
    let scaled = |e: i64| -> (BigUint, BigUint) {
        if e >= 0 {
            (a.clone(), &b << (e as usize))
        } else {
            (&a << ((-e) as usize), b.clone())
        }
    };
    // floor(log2(a/b))
    let mut t = a.bits() as i64 - b.bits() as i64;
    let (x, y) = scaled(t);
    if x < y {
        t -= 1;
    }
    let e = (t - target_p as i64 + 1).max(fmt.e_min_q() as i64);
    let (x, y) = scaled(e);
    let m = &x / &y;
    // compare 2x with (2m + 1) y
    let mid = (&m * 2u32 + 1u32) * &y;
    let up = match (&x * 2u32).cmp(&mid) {
        Ordering::Less => false,
        Ordering::Greater => true,
        Ordering::Equal => match fmt.ties() {
            Ties::Even => m.is_odd(),
            Ties::Away => true,
        },
    };
    let m = if up { m + 1u32 } else { m };
    let (m, e) = if m.bits() > target_p as u64 { (m >> 1usize, e + 1) } else { (m, e) };
    let m: u128 = m.try_into().expect("significand fits in target_p bits");
    Fpn::from_parts(fmt, neg, m, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn x(s: &str) -> ExactReal {
        s.parse().unwrap()
    }

    #[test]
    fn known_digits_are_enclosed() {
        let pi = pi_enclosure(10);
        assert!(pi.lo() <= &x("3.14160") && pi.hi() >= &x("3.14159"));
        assert!(pi.width() <= ExactReal::pow2(-10));
        let ln2 = ln2_enclosure(10);
        assert!(ln2.lo() <= &x("0.693148") && ln2.hi() >= &x("0.693147"));
        let fine = pi_enclosure(300);
        assert!(fine.lo() > &x("3.14159265358979323846264338327950288419716939937510582097494459"));
        assert!(fine.hi() < &x("3.14159265358979323846264338327950288419716939937510582097494460"));
        let fine = ln2_enclosure(300);
        assert!(fine.lo() > &x("0.69314718055994530941723212145817656807550013436025525412068000"));
        assert!(fine.hi() < &x("0.69314718055994530941723212145817656807550013436025525412068001"));
    }

    #[test]
    fn widths_meet_the_request() {
        for bits in [32, 64, 128, 256, 400] {
            assert!(pi_enclosure(bits).width() <= ExactReal::pow2(-(bits as i64)));
            assert!(ln2_enclosure(bits).width() <= ExactReal::pow2(-(bits as i64)));
        }
    }

    #[test]
    fn refinement_is_nested() {
        for b in [20u32, 64, 150] {
            assert!(pi_enclosure(b).contains_enclosure(&pi_enclosure(2 * b)));
            assert!(ln2_enclosure(b).contains_enclosure(&ln2_enclosure(2 * b)));
        }
    }

    #[test]
    fn self_validating_at_a_thousand_bits() {
        for c in [Constant::Pi, Constant::Ln2] {
            let coarse = c.enclosure(1000);
            let fine = c.enclosure(2000);
            let mid = (fine.lo() + fine.hi()).mul_pow2(-1);
            assert!(coarse.contains(&mid));
        }
    }

    #[test]
    fn rounded_constants() {
        let single = Format::single();
        assert_eq!(round_constant(&Constant::Pi, single, 24).unwrap().to_string(), "13176795 * 2^-22");
        let r = resolve(&Constant::Pi, 160, |v| round(&v.recip().unwrap(), Format::double(), 53)).unwrap();
        assert_eq!(r.to_string(), "5734161139222659 * 2^-54");
        let r = resolve(&Constant::Ln2, 160, |v| round(&v.recip().unwrap(), Format::double(), 53)).unwrap();
        let c1 = round(&r.to_exact().recip().unwrap(), Format::double(), 51).unwrap();
        assert_eq!(c1.to_string(), "6243314768165360 * 2^-53");
    }

    #[test]
    fn stable_under_refinement() {
        for fmt in Format::presets() {
            for c in [Constant::Pi, Constant::Ln2] {
                let p = fmt.p();
                let a = safe_round(&c.enclosure(3 * p), fmt, p).unwrap();
                let b = safe_round(&c.enclosure(3 * p + 64), fmt, p).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn fixed_enclosures() {
        let exact = RealEnclosure::exact(x("5 * 2^-3"));
        assert_eq!(safe_round(&exact, Format::single(), 24).unwrap().to_exact(), x("5 * 2^-3"));
        let straddle = RealEnclosure::new(x("1"), &x("1") + &ExactReal::pow2(-23)).unwrap();
        assert!(matches!(safe_round(&straddle, Format::single(), 24), Err(Error::AmbiguousRounding(_))));
        let c = Constant::Fixed { name: "u".into(), enclosure: straddle };
        assert!(matches!(round_constant(&c, Format::single(), 24), Err(Error::AmbiguousRounding(_))));
    }

    #[test]
    fn enclosure_text_form() {
        let e: RealEnclosure = "# pi, roughly\nlo = 3\nhi = 13 * 2^-2\n".parse().unwrap();
        assert_eq!(e.to_string(), "[3 * 2^0, 13 * 2^-2]");
        assert!("lo = 4\nhi = 3".parse::<RealEnclosure>().is_err());
        assert!("lo = 4".parse::<RealEnclosure>().is_err());
    }

    #[test]
    fn constant_names() {
        assert_eq!("pi".parse::<Constant>().unwrap(), Constant::Pi);
        assert_eq!("2pi".parse::<Constant>().unwrap(), Constant::Pi.scaled(1));
        assert_eq!("pi/2".parse::<Constant>().unwrap(), Constant::Pi.scaled(-1));
        assert_eq!("ln2*2^-3".parse::<Constant>().unwrap(), Constant::Ln2.scaled(-3));
        assert!("e".parse::<Constant>().is_err());
        let third: Constant = "exact:1/3".parse().unwrap();
        assert!(!third.is_refinable());
        assert_eq!(third.enclosure(10).lo(), &ExactReal::ratio(1, 3));
        assert_eq!(third.name().parse::<Constant>().unwrap(), third);
        let two_pi = Constant::Pi.scaled(1).enclosure(100);
        assert!(two_pi.width() <= ExactReal::pow2(-100));
        assert_eq!(two_pi.lo(), &pi_enclosure(101).lo().mul_pow2(1));
    }

    #[test]
    fn rational_rounding_examples() {
        let d = Format::double();
        let r = round_rational(&1.into(), &3.into(), d, 53).unwrap();
        assert_eq!(r.to_string(), "6004799503160661 * 2^-54");
        for k in [-7i64, 1, 3, (1 << 53) - 1] {
            assert_eq!(round_rational(&k.into(), &1.into(), d, 53).unwrap(), Fpn::from_int(d, k as i128).unwrap());
        }
        // 1/R for the double π row
        let r = Fpn::parse_exact("5734161139222659 * 2^-54", d).unwrap();
        let (m, e) = (BigInt::from(r.significand()), r.exponent());
        let c1 = round_rational(&(BigInt::one() << (-e) as usize), &m, d, 51).unwrap();
        assert_eq!(c1.to_string(), "7074237752028440 * 2^-51");
    }

    proptest! {
        #[test]
        fn two_rounding_paths_agree(num in -(1i128 << 100)..(1i128 << 100), den in 1i128..(1i128 << 90),
                                    p in 2u32..=53, away in any::<bool>()) {
            let fmt = if away { Format::double().with_ties(Ties::Away) } else { Format::double() };
            let v = ExactReal::ratio(num, den);
            let a = round(&v, fmt, p).unwrap();
            let b = round_rational(&num.into(), &den.into(), fmt, p).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn tiny_quotients_hit_subnormals(num in 1i64..1000, shift in 1060u32..1090) {
            let fmt = Format::double();
            let den = BigInt::one() << shift as usize;
            let a = round(&ExactReal::ratio(num, den.clone()), fmt, 53).unwrap();
            let b = round_rational(&num.into(), &den, fmt, 53).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}

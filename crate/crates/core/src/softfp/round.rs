//! Correct rounding of exact values. This path works on arbitrary-precision
//! integers and is independent of the fixed-width kernel in `ops`, which is
//! what makes it usable as that kernel's oracle.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::softfp::{ExactReal, Format, Fpn, Ties};

/// Rounds `v` to the nearest number with `target_p` significant bits whose
/// quantum is at least `λ` of `fmt`, ties per `fmt`. The result is expressed
/// canonically in `fmt`.
pub fn round(v: &ExactReal, fmt: Format, target_p: u32) -> Result<Fpn> {
    round_flagged(v, fmt, target_p).map(|(x, _)| x)
}

/// [`round`] plus a flag telling whether any rounding error occurred.
pub fn round_flagged(v: &ExactReal, fmt: Format, target_p: u32) -> Result<(Fpn, bool)> {
    if target_p < 2 || target_p > fmt.p() {
        return Err(Error::InvalidFormat(format!(
            "cannot round to {target_p} digits in {fmt}"
        )));
    }
    if v.is_zero() {
        return Ok((Fpn::zero(fmt), false));
    }
    let neg = v.is_negative();
    let (num, den, shift) = v.parts();
    let num = num.magnitude().clone();
    let den = den.magnitude().clone();

    let ilog = v.ilog2().expect("nonzero");
    let e = (ilog - target_p as i64 + 1).max(fmt.e_min_q() as i64);

    // |v| / 2^e = n / d
    let k = shift - e;
    let (n, d) = if k >= 0 {
        (num << (k as usize), den)
    } else {
        (num, den << ((-k) as usize))
    };
    let (q, r) = n.div_rem(&d);
    let inexact = !r.is_zero();
    let round_up = match (&r << 1usize).cmp(&d) {
        Ordering::Less => false,
        Ordering::Greater => true,
        Ordering::Equal => match fmt.ties() {
            Ties::Even => q.is_odd(),
            Ties::Away => true,
        },
    };
    let mut q: BigUint = if round_up { q + BigUint::one() } else { q };
    let mut e = e;
    if q.bits() > target_p as u64 {
        q >>= 1usize;
        e += 1;
    }
    let m = q.to_u128().expect("significand fits in target_p bits");
    Ok((Fpn::canonical(fmt, neg, m, e)?, inexact))
}

/// True iff `v = m * 2^e` for integers `|m| < 2^digits` and `e >= e_min_q`.
/// Zero is representable. Overflow is not considered.
pub fn is_representable(v: &ExactReal, digits: u32, fmt: Format) -> bool {
    match v.as_dyadic() {
        None => false,
        Some((mant, exp)) => {
            mant.is_zero() || (exp >= fmt.e_min_q() as i64 && mant.bits() <= digits as u64)
        }
    }
}

/// Like [`is_representable`] for a significand given as a big integer at a
/// fixed exponent; used by checks that build values without an `ExactReal`.
pub fn is_representable_int(m: &BigInt, e: i64, digits: u32, fmt: Format) -> bool {
    is_representable(&ExactReal::dyadic(m.clone(), e), digits, fmt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(s: &str) -> ExactReal {
        s.parse().unwrap()
    }

    /// Brute-force nearest: compares the two neighbouring candidates by
    /// cross-multiplication.
    fn oracle_nearest(v: &ExactReal, p: u32) -> (BigInt, i64) {
        let l = v.ilog2().unwrap();
        let e = l - p as i64 + 1;
        let lo = v.abs().mul_pow2(-e).floor();
        let hi: BigInt = &lo + 1;
        let dl = &v.abs() - &ExactReal::dyadic(lo.clone(), e);
        let dh = &ExactReal::dyadic(hi.clone(), e) - &v.abs();
        let pick = match dl.cmp(&dh) {
            Ordering::Less => lo,
            Ordering::Greater => hi,
            Ordering::Equal => {
                if lo.is_even() {
                    lo
                } else {
                    hi
                }
            }
        };
        (pick, e)
    }

    #[test]
    fn one_third_in_double() {
        let third = ExactReal::ratio(1, 3);
        let r = round(&third, Format::double(), 53).unwrap();
        assert_eq!(r.to_string(), "6004799503160661 * 2^-54");
        let (m, e) = oracle_nearest(&third, 53);
        assert_eq!(ExactReal::dyadic(m, e), r.to_exact());
    }

    #[test]
    fn table_c1_from_r() {
        let r = x("5734161139222659 * 2^-54");
        let c1 = round(&r.recip().unwrap(), Format::double(), 51).unwrap();
        assert_eq!(c1.to_string(), "7074237752028440 * 2^-51");
    }

    #[test]
    fn representable_values_are_fixed_points() {
        let fmt = Format::new(6, -12, 12).unwrap();
        for e in -12..=4 {
            for m in 0..64i64 {
                let v = ExactReal::dyadic(m, e);
                let (r, inexact) = round_flagged(&v, fmt, 6).unwrap();
                assert!(!inexact);
                assert_eq!(r.to_exact(), v);
            }
        }
    }

    #[test]
    fn ties() {
        let fmt = Format::double();
        let halfway = &ExactReal::one() + &ExactReal::pow2(-53);
        assert_eq!(round(&halfway, fmt, 53).unwrap().to_exact(), ExactReal::one());
        let away = fmt.with_ties(Ties::Away);
        assert_eq!(
            round(&halfway, away, 53).unwrap().to_exact(),
            &ExactReal::one() + &ExactReal::pow2(-52)
        );
        let below_lambda = ExactReal::pow2(-1076);
        assert!(round(&below_lambda, fmt, 53).unwrap().is_zero());
        assert_eq!(round(&ExactReal::pow2(-1075), away, 53).unwrap().to_exact(), fmt.lambda());
        assert!(round(&ExactReal::pow2(-1075), fmt, 53).unwrap().is_zero());
    }

    #[test]
    fn overflow_is_an_error() {
        let fmt = Format::double();
        let big = &ExactReal::pow2(1024) - &ExactReal::pow2(1024 - 54);
        assert!(matches!(round(&big, fmt, 53), Err(Error::Overflow(_))));
        let ok = &ExactReal::pow2(1024) - &ExactReal::pow2(1024 - 53);
        assert!(round(&ok, fmt, 53).is_ok());
    }

    #[test]
    fn representability_predicate() {
        let fmt = Format::double();
        assert!(is_representable(&ExactReal::dyadic(3, -4), 2, fmt));
        assert!(!is_representable(&ExactReal::from_int((1i64 << 53) + 1), 53, fmt));
        assert!(is_representable(&ExactReal::zero(), 1, fmt));
        assert!(!is_representable(&ExactReal::ratio(1, 3), 53, fmt));
        assert!(!is_representable(&ExactReal::pow2(-1075), 53, fmt));
    }
}

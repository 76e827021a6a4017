//! Error-free transforms.

use crate::error::{Error, Result};
use crate::softfp::ops::OpTally;
use crate::softfp::Fpn;

/// `hi + lo`, equal to the exact input of the transform that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pair {
    pub hi: Fpn,
    pub lo: Fpn,
}

/// Whether `a` is far enough "above" `b` for Fast2Sum to be exact.
fn fast2sum_ok(a: &Fpn, b: &Fpn) -> bool {
    a.is_zero()
        || b.is_zero()
        || a.cmp_abs(b) != std::cmp::Ordering::Less
        || a.max_repr_exponent() >= b.exponent() as i64
}

/// Fast2Sum: `s = ∘(a + b)`, `t = b - (s - a)`, three operations.
pub fn fast2sum(a: &Fpn, b: &Fpn) -> Result<Pair> {
    fast2sum_tallied(a, b, &mut OpTally::new())
}

pub fn fast2sum_tallied(a: &Fpn, b: &Fpn, tally: &mut OpTally) -> Result<Pair> {
    if !fast2sum_ok(a, b) {
        return Err(Error::Fast2SumPrecondition { a: a.to_string(), b: b.to_string() });
    }
    let s = tally.add(a, b)?.value;
    let z = tally.sub(&s, a)?.value;
    let t = tally.sub(b, &z)?.value;
    debug_assert_eq!(&s.to_exact() + &t.to_exact(), &a.to_exact() + &b.to_exact());
    Ok(Pair { hi: s, lo: t })
}

/// Fast2Mult: `h = ∘(ab)`, `l = ∘(ab - h)`, two operations. Fails when the
/// error term is not representable.
pub fn fast2mult(a: &Fpn, b: &Fpn) -> Result<Pair> {
    fast2mult_tallied(a, b, &mut OpTally::new())
}

pub fn fast2mult_tallied(a: &Fpn, b: &Fpn, tally: &mut OpTally) -> Result<Pair> {
    let h = tally.mul(a, b)?.value;
    let l = tally.fma(a, b, &h.neg())?;
    if l.inexact {
        return Err(Error::TailUnderflow { a: a.to_string(), b: b.to_string() });
    }
    debug_assert_eq!(&h.to_exact() + &l.value.to_exact(), &a.to_exact() * &b.to_exact());
    Ok(Pair { hi: h, lo: l.value })
}

/// Exact-arithmetic recomposition check used by tests and campaigns.
pub fn recomposes_sum(a: &Fpn, b: &Fpn, p: &Pair) -> bool {
    &p.hi.to_exact() + &p.lo.to_exact() == &a.to_exact() + &b.to_exact()
}

pub fn recomposes_product(a: &Fpn, b: &Fpn, p: &Pair) -> bool {
    &p.hi.to_exact() + &p.lo.to_exact() == &a.to_exact() * &b.to_exact()
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::softfp::Format;
    use proptest::prelude::*;

    fn f(fmt: Format, m: i64, e: i64) -> Fpn {
        Fpn::from_parts(fmt, m < 0, m.unsigned_abs() as u128, e).unwrap()
    }

    #[test]
    fn fast2sum_recovers_lost_bits() {
        let fmt = Format::double();
        let a = f(fmt, 1, 0);
        let b = f(fmt, 3, -54);
        let p = fast2sum(&a, &b).unwrap();
        assert!(recomposes_sum(&a, &b, &p));
        assert!(!p.lo.is_zero());
    }

    #[test]
    fn fast2sum_rejects_swapped_operands() {
        let fmt = Format::double();
        let a = f(fmt, 3, -60);
        let b = f(fmt, 1, 0);
        assert!(matches!(fast2sum(&a, &b), Err(Error::Fast2SumPrecondition { .. })));
    }

    #[test]
    fn fast2mult_tail_underflow_is_reported() {
        let fmt = Format::double();
        let a = f(fmt, (1 << 52) + 1, -600);
        let b = f(fmt, (1 << 52) + 1, -552);
        assert!(matches!(fast2mult(&a, &b), Err(Error::TailUnderflow { .. })));
        let p = fast2mult(&f(fmt, (1 << 52) + 1, -52), &f(fmt, (1 << 52) + 1, -52)).unwrap();
        assert_eq!(p.lo, f(fmt, 1, -104));
    }

    #[test]
    fn tallies_count_operations() {
        let fmt = Format::double();
        let mut t = OpTally::new();
        fast2sum_tallied(&f(fmt, 1, 0), &f(fmt, 1, -60), &mut t).unwrap();
        fast2mult_tallied(&f(fmt, 3, 0), &f(fmt, 5, 0), &mut t).unwrap();
        assert_eq!(t.ops, 5);
    }

    proptest! {
        #[test]
        fn fast2sum_is_error_free(ma in 1i64..(1 << 24), ea in -40i64..40, mb in -(1i64 << 24)..(1 << 24), eb in -40i64..40) {
            let fmt = Format::single();
            let a = f(fmt, ma, ea);
            let b = f(fmt, mb, eb);
            let (a, b) = if a.cmp_abs(&b) == std::cmp::Ordering::Less { (b, a) } else { (a, b) };
            let p = fast2sum(&a, &b).unwrap();
            prop_assert!(recomposes_sum(&a, &b, &p));
        }

        #[test]
        fn fast2mult_is_error_free(ma in -(1i64 << 53)..(1 << 53), mb in -(1i64 << 53)..(1 << 53), ea in -200i64..200, eb in -200i64..200) {
            let fmt = Format::double();
            let a = f(fmt, ma, ea);
            let b = f(fmt, mb, eb);
            let p = fast2mult(&a, &b).unwrap();
            prop_assert!(recomposes_product(&a, &b, &p));
        }
    }
}

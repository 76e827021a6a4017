//! Correctly rounded `a * b + c`, and `+ - *` as special cases of it.
//!
//! The exact product of two significands has at most `2 * MAX_PRECISION`
//! bits. Both terms are aligned on a common grid inside a 256-bit
//! accumulator; when their exponents are too far apart the smaller term is
//! truncated and replaced by a sticky unit one position below the grid,
//! which keeps the rounding decision and the inexact flag exact.

use bnum::types::U256;

use crate::error::Result;
use crate::softfp::{fpn::bits_u128, Format, Fpn, Ties};

/// Window, in bits, kept above the alignment grid.
const WINDOW: i64 = 248;

/// A rounded result and whether rounding changed the exact value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rounded {
    pub value: Fpn,
    pub inexact: bool,
}

impl Rounded {
    pub fn is_exact(&self) -> bool {
        !self.inexact
    }
}

#[derive(Clone, Copy)]
struct Term {
    neg: bool,
    mag: U256,
    exp: i64,
}

impl Term {
    fn from_fpn(x: &Fpn) -> Self {
        Term { neg: x.is_negative(), mag: U256::from(x.significand()), exp: x.exponent() as i64 }
    }

    fn product(a: &Fpn, b: &Fpn) -> Self {
        Term {
            neg: a.is_negative() != b.is_negative(),
            mag: U256::from(a.significand()) * U256::from(b.significand()),
            exp: a.exponent() as i64 + b.exponent() as i64,
        }
    }

    fn top(&self) -> i64 {
        self.exp + self.mag.bits() as i64
    }
}

fn low_mask(bits: u32) -> U256 {
    if bits >= 256 {
        U256::MAX
    } else {
        (U256::ONE << bits) - U256::ONE
    }
}

/// Places `t` on grid `grid`, returning the magnitude and whether nonzero
/// bits fell below the grid.
fn align(t: &Term, grid: i64) -> (U256, bool) {
    if t.exp >= grid {
        (t.mag << ((t.exp - grid) as u32), false)
    } else {
        let d = grid - t.exp;
        if d >= 256 {
            (U256::ZERO, !t.mag.is_zero())
        } else {
            let d = d as u32;
            (t.mag >> d, !(t.mag & low_mask(d)).is_zero())
        }
    }
}

fn fused(x: Term, y: Term, fmt: Format, target_p: u32) -> Result<Rounded> {
    let (x, y) = match (x.mag.is_zero(), y.mag.is_zero()) {
        (true, true) => return Ok(Rounded { value: Fpn::zero(fmt), inexact: false }),
        (true, false) => return round_grid(y.neg, y.mag, y.exp, fmt, target_p),
        (false, true) => return round_grid(x.neg, x.mag, x.exp, fmt, target_p),
        _ => (x, y),
    };
    let top = x.top().max(y.top());
    let grid = x.exp.min(y.exp).max(top - WINDOW);
    let (mut mx, sx) = align(&x, grid);
    let (mut my, sy) = align(&y, grid);
    let mut grid = grid;
    if sx || sy {
        // One half-unit below the grid stands for the discarded tail.
        mx = (mx << 1u32) | U256::from(sx as u8);
        my = (my << 1u32) | U256::from(sy as u8);
        grid -= 1;
    }
    let (neg, mag) = if x.neg == y.neg {
        (x.neg, mx + my)
    } else if mx >= my {
        (x.neg, mx - my)
    } else {
        (y.neg, my - mx)
    };
    round_grid(neg, mag, grid, fmt, target_p)
}

/// Rounds `±mag * 2^grid` to `target_p` bits in `fmt`.
fn round_grid(neg: bool, mag: U256, grid: i64, fmt: Format, target_p: u32) -> Result<Rounded> {
    if mag.is_zero() {
        return Ok(Rounded { value: Fpn::zero(fmt), inexact: false });
    }
    let top = grid + mag.bits() as i64;
    let eq = (top - target_p as i64).max(fmt.e_min_q() as i64);
    if eq <= grid {
        let m = mag << ((grid - eq) as u32);
        let m = u128::try_from(m).expect("fits in target_p bits");
        return Ok(Rounded { value: Fpn::canonical(fmt, neg, m, eq)?, inexact: false });
    }
    let d = eq - grid;
    let (q, round_up, inexact) = if d > 256 {
        // far below half a quantum
        (U256::ZERO, false, true)
    } else {
        let d = d as u32;
        let q = if d == 256 { U256::ZERO } else { mag >> d };
        let rem = mag & low_mask(d);
        let half = U256::ONE << (d - 1);
        let up = match rem.cmp(&half) {
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Equal => match fmt.ties() {
                Ties::Even => q.bit(0),
                Ties::Away => true,
            },
        };
        (q, up, !rem.is_zero())
    };
    let mut m = u128::try_from(q).expect("fits in target_p bits");
    let mut e = eq;
    if round_up {
        m += 1;
        if bits_u128(m) > target_p {
            m >>= 1;
            e += 1;
        }
    }
    Ok(Rounded { value: Fpn::canonical(fmt, neg && m != 0, m, e)?, inexact })
}

/// `∘(a * b + c)` in `fmt`, one rounding.
pub fn fma_in(fmt: Format, a: &Fpn, b: &Fpn, c: &Fpn) -> Result<Rounded> {
    fused(Term::product(a, b), Term::from_fpn(c), fmt, fmt.p())
}

/// `∘(a * b + c)` in the format of `a`.
pub fn fma(a: &Fpn, b: &Fpn, c: &Fpn) -> Result<Rounded> {
    fma_in(a.format(), a, b, c)
}

/// `∘(a + b)`.
pub fn add(a: &Fpn, b: &Fpn) -> Result<Rounded> {
    let fmt = a.format();
    fused(Term::from_fpn(a), Term::from_fpn(b), fmt, fmt.p())
}

/// `∘(a - b)`; negation itself never rounds.
pub fn sub(a: &Fpn, b: &Fpn) -> Result<Rounded> {
    add(a, &b.neg())
}

/// `∘(a * b)`.
pub fn mul(a: &Fpn, b: &Fpn) -> Result<Rounded> {
    let fmt = a.format();
    fused(Term::product(a, b), Term::from_fpn(&Fpn::zero(fmt)), fmt, fmt.p())
}

/// Rounds an exact fma result to fewer than `p` digits, e.g. `∘_{p-2}`.
pub fn fma_to_digits(a: &Fpn, b: &Fpn, c: &Fpn, target_p: u32) -> Result<Rounded> {
    let fmt = a.format();
    assert!(target_p >= 2 && target_p <= fmt.p());
    fused(Term::product(a, b), Term::from_fpn(c), fmt, target_p)
}

/// Counts the rounded operations issued through it. One tally lives per
/// computation; nothing is shared between calls.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpTally {
    /// Rounded operations issued.
    pub ops: u32,
    /// How many of them were inexact.
    pub inexact: u32,
}

impl OpTally {
    pub fn new() -> Self {
        Self::default()
    }

    fn record(&mut self, r: Result<Rounded>) -> Result<Rounded> {
        self.ops += 1;
        if let Ok(r) = &r {
            self.inexact += r.inexact as u32;
        }
        r
    }

    pub fn fma(&mut self, a: &Fpn, b: &Fpn, c: &Fpn) -> Result<Rounded> {
        self.record(fma(a, b, c))
    }

    pub fn add(&mut self, a: &Fpn, b: &Fpn) -> Result<Rounded> {
        self.record(add(a, b))
    }

    pub fn sub(&mut self, a: &Fpn, b: &Fpn) -> Result<Rounded> {
        self.record(sub(a, b))
    }

    pub fn mul(&mut self, a: &Fpn, b: &Fpn) -> Result<Rounded> {
        self.record(mul(a, b))
    }
}

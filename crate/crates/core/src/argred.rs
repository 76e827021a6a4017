//! The reduction pipeline: `x ↦ (z, v1 + w)` with `v1 + w ≈ x - z C`.
//!
//! ```text
//! z  = ∘(x R + σ) ⊖ σ,            σ = 3 * 2^(p-N-2)
//! u  = ∘(x - z C1)                 exact
//! v1 = ∘(u - z C2)
//! (p1, p2) = Fast2Mult(z, C2)
//! (t1, t2) = Fast2Sum(u, -p1)
//! v2 = ∘(∘(∘(t1 - v1) + t2) - p2)  v1 + v2 = x - z C1 - z C2 exactly
//! w  = ∘(v2 - z C3)
//! ```

use std::fmt;

use num_bigint::BigInt;
use serde::Serialize;

use crate::constgen::ConstantSet;
use crate::error::{Error, Result};
use crate::softfp::eft::{fast2mult_tallied, fast2sum_tallied};
use crate::softfp::{ops, ExactReal, Format, Fpn, OpTally};

/// The shift constant `σ = 3 * 2^(p-N-2)`.
pub fn sigma(fmt: Format, n: i32) -> Result<Fpn> {
    Fpn::from_parts(fmt, false, 3, fmt.p() as i64 - n as i64 - 2)
}

/// `2^(p-N-2) - 2^-N`, the largest allowed `|x R|`.
pub fn xr_bound(fmt: Format, n: i32) -> ExactReal {
    let n = n as i64;
    &ExactReal::pow2(fmt.p() as i64 - n - 2) - &ExactReal::pow2(-n)
}

/// Errors unless `|x R| <= 2^(p-N-2) - 2^-N`.
pub fn check_range(x: &Fpn, cs: &ConstantSet, n: i32) -> Result<()> {
    let xr = (&x.to_exact() * &cs.r.to_exact()).abs();
    let bound = xr_bound(cs.fmt, n);
    if xr > bound {
        return Err(Error::Range(format!(
            "argument too large for N = {n}: need |xR| <= 2^{{p-N-2}} - 2^{{-N}} = 2^{} - 2^{}, got |xR| ~ 2^{:.3}",
            cs.fmt.p() as i64 - n as i64 - 2,
            -n,
            xr.log2_abs()
        )));
    }
    Ok(())
}

/// `z` and what is known about it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extraction {
    pub z: Fpn,
    /// `z 2^N`.
    pub k: BigInt,
    /// Bit length of `|k|`.
    pub ell: u32,
    /// `x R - z`.
    pub s: ExactReal,
}

impl Extraction {
    /// Whether `|z| >= 2^(1-N)`, the case with guaranteed structure.
    pub fn is_large(&self, n: i32) -> bool {
        self.z.to_exact().abs() >= ExactReal::pow2(1 - n as i64)
    }

    /// The guaranteed structure of a large `z`: `2 <= ℓ <= p-2`,
    /// `2^(ℓ-1) <= |z 2^N| < 2^ℓ`, and `|x R - z| <= 2^(-N-1)`.
    pub fn structure_holds(&self, p: u32, n: i32) -> bool {
        (2..=p.saturating_sub(2)).contains(&self.ell) && self.s.abs() <= ExactReal::pow2(-(n as i64) - 1)
    }
}

/// `z = ∘(x R + σ) ⊖ σ`.
pub fn extract_z(x: &Fpn, cs: &ConstantSet, n: i32) -> Result<Extraction> {
    check_range(x, cs, n)?;
    let sig = sigma(cs.fmt, n)?;
    let t = ops::fma(x, &cs.r, &sig)?.value;
    let z = ops::sub(&t, &sig)?.value;
    let scaled = z.to_exact().mul_pow2(n as i64);
    debug_assert!(scaled.is_integer());
    let k = scaled.floor();
    let ell = k.bits() as u32;
    let s = &(&x.to_exact() * &cs.r.to_exact()) - &z.to_exact();
    Ok(Extraction { z, k, ell, s })
}

/// `u = ∘(x - z C1)` and whether it was exact.
pub fn first_step(x: &Fpn, z: &Fpn, cs: &ConstantSet) -> Result<(Fpn, bool)> {
    let r = ops::fma(&z.neg(), &cs.c1, x)?;
    Ok((r.value, r.is_exact()))
}

/// Everything the second step computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SecondStep {
    pub v1: Fpn,
    pub v2: Fpn,
    pub p1: Fpn,
    pub p2: Fpn,
    pub t1: Fpn,
    pub t2: Fpn,
    /// Rounded operations issued.
    pub ops: u32,
    /// Whether the three operations producing `v2` were all exact.
    pub last_line_exact: bool,
}

impl SecondStep {
    /// `t1` and `v1` are integer multiples of `2^(-N-1) ulp2(C1)`.
    pub fn multiples_hold(&self, cs: &ConstantSet, n: i32) -> bool {
        let unit = ExactReal::pow2(cs.c1.ulp2_exp() - n as i64 - 1);
        [self.t1, self.v1]
            .iter()
            .all(|v| v.to_exact().div(&unit).map(|k| k.is_integer()).unwrap_or(false))
    }
}

/// The nine-operation second step. `u` comes from [`first_step`].
pub fn second_step(z: &Fpn, u: &Fpn, cs: &ConstantSet) -> Result<SecondStep> {
    let mut tally = OpTally::new();
    let v1 = tally.fma(&z.neg(), &cs.c2, u)?.value;
    let prod = fast2mult_tallied(z, &cs.c2, &mut tally)?;
    let sum = fast2sum_tallied(u, &prod.hi.neg(), &mut tally).map_err(|e| match e {
        Error::Fast2SumPrecondition { a, b } => Error::Hypothesis {
            theorem: "thm6",
            hypothesis: "Fast2Sum works correctly",
            detail: format!("Fast2Sum({a}, {b}) precondition fails"),
        },
        e => e,
    })?;
    let before = tally.inexact;
    let a = tally.sub(&sum.hi, &v1)?.value;
    let b = tally.add(&a, &sum.lo)?.value;
    let v2 = tally.sub(&b, &prod.lo)?.value;
    Ok(SecondStep {
        v1,
        v2,
        p1: prod.hi,
        p2: prod.lo,
        t1: sum.hi,
        t2: sum.lo,
        ops: tally.ops,
        last_line_exact: tally.inexact == before,
    })
}

/// `w = ∘(v2 - z C3)`.
pub fn third_step(v2: &Fpn, z: &Fpn, cs: &ConstantSet) -> Result<Fpn> {
    Ok(ops::fma(&z.neg(), &cs.c3, v2)?.value)
}

/// Upper bound on `|v1 + w - (x - z C)|` over the enclosure of `C`.
pub fn residual(x: &Fpn, z: &Fpn, v1: &Fpn, w: &Fpn, cs: &ConstantSet) -> ExactReal {
    let got = &v1.to_exact() + &w.to_exact();
    let zx = z.to_exact();
    let at = |c: &ExactReal| (&(&x.to_exact() - &(&zx * c)) - &got).abs();
    let (a, b) = (at(cs.enclosure.lo()), at(cs.enclosure.hi()));
    if a > b {
        a
    } else {
        b
    }
}

/// All outputs and diagnostics of one reduction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionOutput {
    pub x: Fpn,
    pub n: i32,
    pub z: Fpn,
    pub u: Fpn,
    pub v1: Fpn,
    pub v2: Fpn,
    pub w: Fpn,
    pub ell: u32,
    pub s: ExactReal,
    pub exact_first: bool,
    pub exact_second: bool,
    pub rounding_ops_second: u32,
    pub residual: ExactReal,
}

/// Runs the whole pipeline on `x`.
pub fn reduce(x: &Fpn, cs: &ConstantSet, n: i32) -> Result<ReductionOutput> {
    let ex = extract_z(x, cs, n)?;
    let z = ex.z;
    let (u, exact_first) = first_step(x, &z, cs)?;
    let second = second_step(&z, &u, cs)?;
    let w = third_step(&second.v2, &z, cs)?;

    let zx = z.to_exact();
    let target = &(&x.to_exact() - &(&zx * &cs.c1.to_exact())) - &(&zx * &cs.c2.to_exact());
    let exact_second = &second.v1.to_exact() + &second.v2.to_exact() == target;
    let residual = residual(x, &z, &second.v1, &w, cs);
    Ok(ReductionOutput {
        x: *x,
        n,
        z,
        u,
        v1: second.v1,
        v2: second.v2,
        w,
        ell: ex.ell,
        s: ex.s,
        exact_first,
        exact_second,
        rounding_ops_second: second.ops,
        residual,
    })
}

/// Text fields of a [`ReductionOutput`], for JSON.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct ReductionRecord {
    pub x: String,
    #[serde(rename = "N")]
    pub n: i32,
    pub z: String,
    pub u: String,
    pub v1: String,
    pub v2: String,
    pub w: String,
    pub ell: u32,
    pub s: String,
    pub exact_first: bool,
    pub exact_second: bool,
    pub rounding_ops_second: u32,
    pub residual_log2: Option<f64>,
}

impl ReductionOutput {
    pub fn record(&self) -> ReductionRecord {
        ReductionRecord {
            x: self.x.to_string(),
            n: self.n,
            z: self.z.to_string(),
            u: self.u.to_string(),
            v1: self.v1.to_string(),
            v2: self.v2.to_string(),
            w: self.w.to_string(),
            ell: self.ell,
            s: self.s.to_string(),
            exact_first: self.exact_first,
            exact_second: self.exact_second,
            rounding_ops_second: self.rounding_ops_second,
            residual_log2: (!self.residual.is_zero()).then(|| self.residual.log2_abs()),
        }
    }
}

impl fmt::Display for ReductionOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let row = |f: &mut fmt::Formatter<'_>, k: &str, v: &Fpn| writeln!(f, "{k:<4}{v}    (~{:e})", v.to_f64());
        row(f, "x", &self.x)?;
        row(f, "z", &self.z)?;
        row(f, "u", &self.u)?;
        row(f, "v1", &self.v1)?;
        row(f, "v2", &self.v2)?;
        row(f, "w", &self.w)?;
        writeln!(f, "ell {}", self.ell)?;
        writeln!(f, "s   xR - z ~ {:e}", self.s.to_f64())?;
        writeln!(f, "first step exact:   {}", self.exact_first)?;
        writeln!(f, "second step exact:  {} ({} rounded ops)", self.exact_second, self.rounding_ops_second)?;
        if self.residual.is_zero() {
            write!(f, "|v1 + w - (x - zC)| = 0")
        } else {
            write!(f, "|v1 + w - (x - zC)| <= 2^{:.2}", self.residual.log2_abs())
        }
    }
}

//! Why the first step needs a short `C1` and an fma.
//!
//! The classical two-constant scheme computes `∘(x - ∘(z C1'))` with a
//! full-precision `C1' = ∘_p(C)`. Once `z` has more than a couple of bits,
//! `z C1'` no longer fits in `p` bits and the product rounds, so the
//! difference is wrong in its low bits; the cancellation then promotes the
//! error. With `C1 = ∘_{p-2}(1/R)` the fma first step `∘(x - z C1)` is exact.

use std::fmt;

use serde::Serialize;

use crate::argred::reduce;
use crate::constgen::{gen_constants, ConstantSet};
use crate::error::Result;
use crate::realnum::{round_constant, Constant};
use crate::softfp::{ops, round, ExactReal, Format, Fpn};

/// One `x` with `z` of a given bit length.
#[derive(Clone, Debug, Serialize)]
pub struct CodyWaiteCase {
    pub ell: u32,
    pub x: String,
    pub z: String,
    /// `∘(x - ∘(z C1'))`.
    pub naive: String,
    /// Whether `naive = x - z C1'` exactly.
    pub naive_exact: bool,
    /// `log2 |naive - (x - z C1')|`, absent when exact.
    pub naive_error_log2: Option<f64>,
    /// Correct bits of `naive` as an approximation of `x - z C`.
    pub naive_correct_bits: f64,
    /// `∘(x - z C1)` by one fma.
    pub fma_u: String,
    pub fma_exact: bool,
    /// Leading bits of `x` cancelled in the first step.
    pub cancelled_bits: i64,
    /// Correct bits of `v1 + w` from the full reduction.
    pub pipeline_correct_bits: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CodyWaiteReport {
    pub constant: String,
    pub format: String,
    #[serde(rename = "N")]
    pub n: i32,
    #[serde(rename = "C1_full")]
    pub c1_full: String,
    #[serde(rename = "C1")]
    pub c1: String,
    pub cases: Vec<CodyWaiteCase>,
    /// First case whose two-rounding step is inexact while the fma step
    /// is exact.
    pub witness: Option<usize>,
}

impl CodyWaiteReport {
    pub fn found(&self) -> bool {
        self.witness.is_some()
    }
}

/// `-log2(|a - b| / |b|)`, capped for exact agreement.
fn correct_bits(a: &ExactReal, b: &ExactReal, cap: f64) -> f64 {
    let err = (a - b).abs();
    if err.is_zero() || b.is_zero() {
        cap
    } else {
        (b.log2_abs() - err.log2_abs()).min(cap)
    }
}

fn case(x: Fpn, cs: &ConstantSet, c1_full: &Fpn) -> Result<CodyWaiteCase> {
    let out = reduce(&x, cs, cs.n)?;
    let z = out.z;
    let fmt = cs.fmt;
    let prod = ops::mul(&z, c1_full)?.value;
    let naive = ops::sub(&x, &prod)?.value;
    let want = &x.to_exact() - &(&z.to_exact() * &c1_full.to_exact());
    let err = (&naive.to_exact() - &want).abs();
    let c_mid = cs.enclosure.lo();
    let true_diff = &x.to_exact() - &(&z.to_exact() * c_mid);
    let cap = 4.0 * fmt.p() as f64;
    let got = &out.v1.to_exact() + &out.w.to_exact();
    Ok(CodyWaiteCase {
        ell: out.ell,
        x: x.to_string(),
        z: z.to_string(),
        naive: naive.to_string(),
        naive_exact: err.is_zero(),
        naive_error_log2: (!err.is_zero()).then(|| err.log2_abs()),
        naive_correct_bits: correct_bits(&naive.to_exact(), &true_diff, cap),
        fma_u: out.u.to_string(),
        fma_exact: out.exact_first,
        cancelled_bits: x.binade().unwrap_or(0) - out.u.binade().unwrap_or(0),
        pipeline_correct_bits: correct_bits(&got, &true_diff, cap),
    })
}

/// Walks `z` through growing bit lengths in double precision with `C = π`
/// and `N = 0`, taking `x` as the double nearest `z C1'`, and records both
/// first steps side by side.
pub fn demo_codywaite() -> Result<CodyWaiteReport> {
    demo_for(&Constant::Pi, Format::double(), 0)
}

/// [`demo_codywaite`] for another constant, format or `N`.
pub fn demo_for(c: &Constant, fmt: Format, n: i32) -> Result<CodyWaiteReport> {
    let cs = gen_constants(c, fmt, n, 2)?;
    let p = fmt.p();
    let c1_full = round_constant(c, fmt, p)?;
    let mut cases = Vec::new();
    let mut witness = None;
    let mut ells: Vec<u32> = (2..=p - 2).step_by(4).collect();
    if *ells.last().unwrap() != p - 2 {
        ells.push(p - 2);
    }
    for ell in ells {
        // The first z of this length whose naive step is inexact, else the
        // last one tried.
        let mut chosen = None;
        for j in 0..64u64 {
            let k = (1u128 << (ell - 1)) + j as u128;
            if k >= 1u128 << ell {
                break;
            }
            let z = ExactReal::dyadic(k, -(n as i64));
            let x = round(&(&z * &c1_full.to_exact()), fmt, p)?;
            let row = case(x, &cs, &c1_full)?;
            let stop = !row.naive_exact;
            chosen = Some(row);
            if stop {
                break;
            }
        }
        let row = chosen.expect("at least one z");
        if witness.is_none() && !row.naive_exact && row.fma_exact {
            witness = Some(cases.len());
        }
        cases.push(row);
    }
    Ok(CodyWaiteReport {
        constant: c.name(),
        format: fmt.to_string(),
        n,
        c1_full: c1_full.to_string(),
        c1: cs.c1.to_string(),
        cases,
        witness,
    })
}

impl fmt::Display for CodyWaiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "C = {} in {}, N = {}", self.constant, self.format, self.n)?;
        writeln!(f, "two roundings: ∘(x - ∘(z C1')), C1' = {}", self.c1_full)?;
        writeln!(f, "fma:           ∘(x - z C1),      C1  = {}", self.c1)?;
        writeln!(f)?;
        writeln!(
            f,
            "{:>3}  {:>18}  {:>9}  {:>11}  {:>9}  {:>9}  {:>9}",
            "ℓ", "z", "cancelled", "naive exact", "naive ok", "fma exact", "2-step ok"
        )?;
        for c in &self.cases {
            writeln!(
                f,
                "{:>3}  {:>18}  {:>9}  {:>11}  {:>9.1}  {:>9}  {:>9.1}",
                c.ell,
                c.z.split(" * ").next().unwrap_or(&c.z),
                c.cancelled_bits,
                c.naive_exact,
                c.naive_correct_bits,
                c.fma_exact,
                c.pipeline_correct_bits
            )?;
        }
        writeln!(f, "(ok columns: correct bits of the result against x - z C)")?;
        match self.witness {
            Some(i) => {
                let c = &self.cases[i];
                writeln!(f)?;
                writeln!(f, "witness: x = {}, z = {}", c.x, c.z)?;
                writeln!(
                    f,
                    "  two roundings: {} (off by 2^{:.2})",
                    c.naive,
                    c.naive_error_log2.unwrap_or(f64::NEG_INFINITY)
                )?;
                write!(f, "  fma:           {} (exact)", c.fma_u)
            }
            None => write!(f, "no witness found"),
        }
    }
}

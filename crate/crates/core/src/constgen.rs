//! Constant sets `(R, C1, C2, C3)` for reducing by a constant `C`, and an
//! audit of every hypothesis the reduction theorems place on them.
//!
//! ```text
//! R  = ∘_p(1/C)
//! C1 = ∘_{p-q}(1/R)
//! C2 = round_int((C - C1) / (8 ulp2(C1))) * 8 ulp2(C1)
//! C3 = ∘_{p-2}(C - C1 - C2)
//! ```

use std::fmt;

use num_bigint::BigInt;
use num_traits::One;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::realnum::{resolve, round_rational, Constant, RealEnclosure};
use crate::softfp::{round, ExactReal, Format, Fpn, Ties};

/// Largest R adjustment tried by [`adjust_r_for_rc1_le_1`], in ulps.
pub const MAX_R_NUDGE: i32 = 8;

/// Everything needed to reduce by one constant in one format.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstantSet {
    pub constant: Constant,
    pub fmt: Format,
    /// Table index width: `z` is a multiple of `2^-N`.
    pub n: i32,
    /// Trailing zero bits of `C1` (it has `p - q` significant bits).
    pub q: u32,
    pub r: Fpn,
    pub c1: Fpn,
    pub c2: Fpn,
    pub c3: Fpn,
    /// Ulps by which `R` was moved away from `∘_p(1/C)`.
    pub r_nudge: i32,
    /// Enclosure of `C`, fine enough to measure third-step residuals.
    pub enclosure: RealEnclosure,
}

/// Accuracy, in bits below `C`, of the enclosure stored in a set.
fn enclosure_bits(c: &Constant, fmt: Format) -> u32 {
    let mag = c.enclosure(64).hi().ilog2().unwrap_or(0);
    (4 * fmt.p() as i64 + 64 - mag.min(0)) as u32
}

/// `1/R` as a fraction of integers.
fn recip_parts(r: &Fpn) -> (BigInt, BigInt) {
    let m = BigInt::from(r.significand());
    let e = r.exponent() as i64;
    if e < 0 {
        (BigInt::one() << ((-e) as usize), m)
    } else {
        (BigInt::one(), m << (e as usize))
    }
}

/// `∘_{p-q}(1/R)`.
pub fn c1_from_r(r: &Fpn, q: u32) -> Result<Fpn> {
    let fmt = r.format();
    let (num, den) = recip_parts(r);
    round_rational(&num, &den, fmt, fmt.p() - q)
}

/// `8 ulp2(C1)`.
pub fn c2_quantum(c1: &Fpn) -> ExactReal {
    ExactReal::pow2(c1.ulp2_exp() + 3)
}

/// `C2` for a given `C1`, rounding to an integer multiple of
/// `8 ulp2(C1)` with ties to even.
///
/// When `q > 3` that multiple can need more than `p` bits; `C2` is then
/// `∘_p(C - C1)`, whose quantum is coarser, so it stays a multiple.
pub fn gen_c2(c: &Constant, c1: &Fpn) -> Result<Fpn> {
    let fmt = c1.format();
    let quantum = c2_quantum(c1);
    let c1x = c1.to_exact();
    let k = resolve(c, 3 * fmt.p(), |v| {
        Ok((v - &c1x).div(&quantum).expect("nonzero quantum").round_to_int(Ties::Even))
    })?;
    if k.magnitude().bits() <= fmt.p() as u64 {
        return Fpn::from_exact(fmt, &(&ExactReal::from_int(k) * &quantum));
    }
    resolve(c, 3 * fmt.p(), |v| round(&(v - &c1x), fmt, fmt.p()))
}

/// `∘_{p-2}(C - C1 - C2)`.
pub fn gen_c3(c: &Constant, c1: &Fpn, c2: &Fpn) -> Result<Fpn> {
    let fmt = c1.format();
    let head = &c1.to_exact() + &c2.to_exact();
    resolve(c, 4 * fmt.p(), |v| round(&(v - &head), fmt, fmt.p() - 2))
}

fn check_parameters(fmt: Format, n: i32, q: u32) -> Result<()> {
    let p = fmt.p();
    if p <= 4 {
        return Err(Error::InvalidFormat(format!("{fmt}: precision must exceed 4")));
    }
    if q < 2 || q + 1 >= p {
        return Err(Error::Config(format!("q = {q} outside 2 <= q < p - 1 = {}", p - 1)));
    }
    if Fpn::pow2(fmt, -(n as i64)).is_err() {
        return Err(Error::Config(format!("2^-{n} is not representable in {fmt}")));
    }
    if Fpn::from_parts(fmt, false, 3, p as i64 - n as i64 - 2).is_err() {
        return Err(Error::Config(format!("shift constant 3*2^{} overflows {fmt}", p as i64 - n as i64 - 2)));
    }
    Ok(())
}

/// Builds the constant set for `c` and audits it.
///
/// With `q = 2` the set is exactly the one defined above. For other `q`,
/// the first step is only covered for every `z` when `R C1 <= 1`, so `R`
/// is nudged by [`adjust_r_for_rc1_le_1`] when needed. Any failed
/// hypothesis of an applicable theorem is an error.
pub fn gen_constants(c: &Constant, fmt: Format, n: i32, q: u32) -> Result<ConstantSet> {
    let cs = gen_unaudited(c, fmt, n, q)?;
    let cs = if q != 2 && !rc1_le_1(&cs.r, &cs.c1) { adjust_r_for_rc1_le_1(&cs)? } else { cs };
    let report = audit(&cs, n);
    let failed = report.failures().next().map(|item| Error::Hypothesis {
        theorem: item.theorem,
        hypothesis: item.hypothesis,
        detail: item.detail.clone(),
    });
    match failed {
        None => Ok(cs),
        Some(e) => Err(e),
    }
}

/// [`gen_constants`] without the audit and without adjusting `R`.
pub fn gen_unaudited(c: &Constant, fmt: Format, n: i32, q: u32) -> Result<ConstantSet> {
    check_parameters(fmt, n, q)?;
    let p = fmt.p();
    let r = resolve(c, 3 * p, |v| {
        let inv = v.recip().ok_or_else(|| Error::Range(format!("{c} encloses zero")))?;
        round(&inv, fmt, p)
    })?;
    if r.is_negative() || r.is_zero() {
        return Err(Error::Range(format!("{c} must be positive")));
    }
    with_r(c, r, n, q, 0)
}

fn with_r(c: &Constant, r: Fpn, n: i32, q: u32, r_nudge: i32) -> Result<ConstantSet> {
    let fmt = r.format();
    let c1 = c1_from_r(&r, q)?;
    let c2 = gen_c2(c, &c1)?;
    let c3 = gen_c3(c, &c1, &c2)?;
    let enclosure = c.enclosure(enclosure_bits(c, fmt));
    Ok(ConstantSet { constant: c.clone(), fmt, n, q, r, c1, c2, c3, r_nudge, enclosure })
}

/// `R C1 <= 1`, exactly.
pub fn rc1_le_1(r: &Fpn, c1: &Fpn) -> bool {
    &r.to_exact() * &c1.to_exact() <= ExactReal::one()
}

/// Moves `R` by the fewest ulps (trying downward first at each distance)
/// such that `R C1 <= 1` with `C1` recomputed from the new `R`. `C2` and
/// `C3` are regenerated; the distance is recorded in `r_nudge`.
pub fn adjust_r_for_rc1_le_1(cs: &ConstantSet) -> Result<ConstantSet> {
    if rc1_le_1(&cs.r, &cs.c1) {
        return Ok(cs.clone());
    }
    let fmt = cs.fmt;
    for k in 1..=MAX_R_NUDGE {
        for step in [-k, k] {
            let v = &cs.r.to_exact() + &(&ExactReal::from_int(step) * &cs.r.ulp());
            let Ok(r) = Fpn::from_exact(fmt, &v) else { continue };
            if !r.is_normal() || r.is_negative() {
                continue;
            }
            let c1 = c1_from_r(&r, cs.q)?;
            if rc1_le_1(&r, &c1) {
                return with_r(&cs.constant, r, cs.n, cs.q, cs.r_nudge + step);
            }
        }
    }
    Err(Error::Hypothesis {
        theorem: "appendix",
        hypothesis: "R C1 <= 1",
        detail: format!("no R within {MAX_R_NUDGE} ulps of {} satisfies it", cs.r),
    })
}

/// `δ = R C1 - 1`, exactly.
pub fn delta(cs: &ConstantSet) -> ExactReal {
    &(&cs.r.to_exact() * &cs.c1.to_exact()) - &ExactReal::one()
}

/// One evaluated hypothesis (or conclusion, for the bound theorem).
#[derive(Clone, Debug, Serialize)]
pub struct AuditItem {
    pub theorem: &'static str,
    pub hypothesis: &'static str,
    /// Whether the theorem is relevant for this set. Failures of
    /// inapplicable theorems are reported but do not fail the audit.
    pub applies: bool,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub constant: String,
    pub format: String,
    #[serde(rename = "N")]
    pub n: i32,
    pub q: u32,
    pub items: Vec<AuditItem>,
}

impl AuditReport {
    pub fn pass(&self) -> bool {
        self.failures().next().is_none()
    }

    /// Failed items of applicable theorems.
    pub fn failures(&self) -> impl Iterator<Item = &AuditItem> {
        self.items.iter().filter(|i| i.applies && !i.pass)
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "audit {} {} N={} q={}", self.constant, self.format, self.n, self.q)?;
        for i in &self.items {
            let status = match (i.applies, i.pass) {
                (true, true) => "ok",
                (true, false) => "FAIL",
                (false, true) => "ok (n/a)",
                (false, false) => "no (n/a)",
            };
            writeln!(f, "  {:<9} {:<8} {}  [{}]", i.theorem, status, i.hypothesis, i.detail)?;
        }
        write!(f, "  overall: {}", if self.pass() { "pass" } else { "FAIL" })
    }
}

fn pow2_str(k: i64) -> String {
    format!("2^{k}")
}

/// Evaluates every constant-level hypothesis with exact arithmetic.
///
/// The set's own `N` is ignored in favor of `n`: `R`, `C1`, `C2` and `C3`
/// do not depend on it, only the hypotheses do.
pub fn audit(cs: &ConstantSet, n: i32) -> AuditReport {
    let fmt = cs.fmt;
    let p = fmt.p() as i64;
    let q = cs.q as i64;
    let lam_exp = fmt.e_min_q() as i64;
    let n64 = n as i64;
    let mut items = Vec::new();
    let mut push = |theorem, hypothesis, applies, pass: bool, detail: String| {
        items.push(AuditItem { theorem, hypothesis, applies, pass, detail })
    };

    let q2 = cs.q == 2;
    let r_nearest = cs.r_nudge == 0;
    let c1x = cs.c1.to_exact();

    let p_gt_3 = p > 3;
    let p_gt_4 = p > 4;
    let r_ok = !cs.r.is_negative() && !cs.r.is_zero() && cs.r.is_normal();
    let c1_expected = c1_from_r(&cs.r, cs.q).ok();
    let c1_rounded = c1_expected.as_ref() == Some(&cs.c1);
    let c1_not_pow2 = !cs.c1.is_power_of_two();
    let two_n = Fpn::pow2(fmt, -n64);
    let two_n_fpn = two_n.is_ok();
    let two_n_normal = two_n.map(|x| x.is_normal()).unwrap_or(false);
    let c1_ge = |k: i64| c1x >= ExactReal::pow2(k + lam_exp);
    let c1_desc = format!("C1 = {}", cs.c1);
    let rc1 = rc1_le_1(&cs.r, &cs.c1);

    // z extraction
    push("thm3", "p > 3", true, p_gt_3, format!("p = {p}"));
    push("thm3", "R is a positive normal p-bit FPN", true, r_ok, format!("R = {}", cs.r));
    push("thm3", "2^-N is a FPN", true, two_n_fpn, format!("N = {n}"));

    // first step, q = 2
    let k5 = p + (-1i64).max(n64);
    push("thm5", "p > 3", q2, p_gt_3, format!("p = {p}"));
    push("thm5", "R is a positive normal p-bit FPN", q2, r_ok, format!("R = {}", cs.r));
    push(
        "thm5",
        "C1 is 1/R rounded to nearest with p-2 bits",
        q2,
        q2 && c1_rounded,
        format!("q = {q}, {c1_desc}"),
    );
    push("thm5", "C1 is not exactly a power of 2", q2, c1_not_pow2, c1_desc.clone());
    push(
        "thm5",
        "C1 >= 2^(p+max(-1,N)) λ",
        q2,
        c1_ge(k5),
        format!("bound {}", pow2_str(k5 + lam_exp)),
    );
    push("thm5", "2^-N is a FPN", q2, two_n_fpn, format!("N = {n}"));

    // second step, q = 2
    let k6 = p + (-1i64).max(p + n64 - 2);
    let quantum = c2_quantum(&cs.c1);
    let c2_mult = cs.c2.to_exact().div(&quantum).map(|k| k.is_integer()).unwrap_or(false);
    let c2_small = cs.c2.to_exact().abs() <= &ExactReal::from_int(4) * &cs.c1.ulp();
    push("thm6", "p > 4", q2, p_gt_4, format!("p = {p}"));
    push("thm6", "R is a positive normal p-bit FPN", q2, r_ok, format!("R = {}", cs.r));
    push(
        "thm6",
        "C1 is 1/R rounded to nearest with p-2 bits",
        q2,
        q2 && c1_rounded,
        format!("q = {q}, {c1_desc}"),
    );
    push("thm6", "C1 is not exactly a power of 2", q2, c1_not_pow2, c1_desc.clone());
    push("thm6", "2^-N is a normal p-bit FPN", q2, two_n_normal, format!("N = {n}"));
    push(
        "thm6",
        "C1 >= 2^(p+max(-1,p+N-2)) λ",
        q2,
        c1_ge(k6),
        format!("bound {}", pow2_str(k6 + lam_exp)),
    );
    push(
        "thm6",
        "C2 is a FPN and an integer multiple of 8 ulp2(C1)",
        q2,
        c2_mult,
        format!("C2 = {}, 8 ulp2(C1) = {}", cs.c2, quantum),
    );
    push(
        "thm6",
        "|C2| <= 4 ulp(C1)",
        q2,
        c2_small,
        format!("C2 = {}, ulp(C1) = {}", cs.c2, cs.c1.ulp()),
    );

    // bound on C - C1, q = 2 and R the nearest value to 1/C
    let thm7 = q2 && r_nearest;
    let c1_ge_7 = c1_ge(p - 1);
    let dist = cs.enclosure.max_distance(&c1x);
    let four_ulp = &ExactReal::from_int(4) * &cs.c1.ulp();
    push("thm7", "p > 3", thm7, p_gt_3, format!("p = {p}"));
    push(
        "thm7",
        "R is 1/C rounded to nearest with p bits",
        thm7,
        r_nearest,
        format!("R moved by {} ulps", cs.r_nudge),
    );
    push("thm7", "R is a positive normal p-bit FPN", thm7, r_ok, format!("R = {}", cs.r));
    push(
        "thm7",
        "C1 is 1/R rounded to nearest with p-2 bits",
        thm7,
        q2 && c1_rounded,
        format!("q = {q}"),
    );
    push("thm7", "C1 is not exactly a power of 2", thm7, c1_not_pow2, c1_desc.clone());
    push("thm7", "C1 >= 2^(p-1) λ", thm7, c1_ge_7, format!("bound {}", pow2_str(p - 1 + lam_exp)));
    push(
        "thm7",
        "conclusion: |C - C1| <= 4 ulp(C1)",
        thm7,
        dist <= four_ulp,
        format!("|C - C1| <= 2^{:.3} , 4 ulp(C1) = 2^{}", dist.log2_abs(), cs.c1.ulp_exp() + 2),
    );

    // first step, general q, valid when ℓ >= q
    let k4 = p - q + 1i64.max(n64 - 1);
    let general = !q2;
    push("thm4", "p > 3", general, p_gt_3, format!("p = {p}"));
    push("thm4", "R is a positive normal p-bit FPN", general, r_ok, format!("R = {}", cs.r));
    push("thm4", "2 <= q < p-1", general, q >= 2 && q < p - 1, format!("q = {q}"));
    push(
        "thm4",
        "C1 is 1/R rounded to nearest with p-q bits",
        general,
        c1_rounded,
        c1_desc.clone(),
    );
    push("thm4", "C1 is not exactly a power of 2", general, c1_not_pow2, c1_desc.clone());
    push(
        "thm4",
        "C1 >= 2^(p-q+max(1,N-1)) λ",
        general,
        c1_ge(k4),
        format!("bound {}", pow2_str(k4 + lam_exp)),
    );

    // first step, general q, every z
    push("appendix", "p > 3", general, p_gt_3, format!("p = {p}"));
    push("appendix", "2 <= q < p-1", general, q >= 2 && q < p - 1, format!("q = {q}"));
    push("appendix", "R is a positive normal p-bit FPN", general, r_ok, format!("R = {}", cs.r));
    push(
        "appendix",
        "C1 is 1/R rounded to nearest with p-q bits",
        general,
        c1_rounded,
        c1_desc.clone(),
    );
    push("appendix", "C1 is not exactly a power of 2", general, c1_not_pow2, c1_desc);
    push(
        "appendix",
        "C1 >= 2^(p-q+max(1,N-1)) λ",
        general,
        c1_ge(k4),
        format!("bound {}", pow2_str(k4 + lam_exp)),
    );
    push("appendix", "2^-N is a FPN", general, two_n_fpn, format!("N = {n}"));
    push(
        "appendix",
        "R C1 <= 1",
        general,
        rc1,
        format!("R C1 - 1 = 2^{:.3} * {}", delta(cs).log2_abs(), delta(cs).signum()),
    );

    AuditReport {
        constant: cs.constant.name(),
        format: fmt.to_string(),
        n,
        q: cs.q,
        items,
    }
}

/// One table column, as JSON.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct ConstantRecord {
    pub constant: String,
    pub precision: String,
    #[serde(rename = "N")]
    pub n: i32,
    pub q: u32,
    #[serde(rename = "R")]
    pub r: String,
    #[serde(rename = "C1")]
    pub c1: String,
    #[serde(rename = "C2")]
    pub c2: String,
    #[serde(rename = "C3")]
    pub c3: String,
}

impl ConstantSet {
    /// A set built from a given `R` and `C2` rather than from a constant:
    /// `C1 = ∘_{p-q}(1/R)`, `C` is taken to be exactly `C1 + C2`, and
    /// `C3 = 0`. Used by small-precision sweeps.
    pub fn synthetic(r: Fpn, q: u32, c2: Fpn, n: i32) -> Result<Self> {
        let fmt = r.format();
        let c1 = c1_from_r(&r, q)?;
        let c = &c1.to_exact() + &c2.to_exact();
        Ok(ConstantSet {
            constant: Constant::Fixed { name: "synthetic".into(), enclosure: RealEnclosure::exact(c.clone()) },
            fmt,
            n,
            q,
            r,
            c1,
            c2,
            c3: Fpn::zero(fmt),
            r_nudge: 0,
            enclosure: RealEnclosure::exact(c),
        })
    }

    pub fn record(&self) -> ConstantRecord {
        ConstantRecord {
            constant: self.constant.name(),
            precision: self.fmt.preset_name().map(str::to_string).unwrap_or_else(|| self.fmt.to_string()),
            n: self.n,
            q: self.q,
            r: self.r.to_string(),
            c1: self.c1.to_string(),
            c2: self.c2.to_string(),
            c3: self.c3.to_string(),
        }
    }

    /// `C1 + C2 + C3` exactly.
    pub fn c_approx(&self) -> ExactReal {
        &(&self.c1.to_exact() + &self.c2.to_exact()) + &self.c3.to_exact()
    }
}

/// Renders sets as a table: one row per constant, one column per set.
pub fn render_table(sets: &[ConstantSet]) -> String {
    let mut rows: Vec<Vec<String>> = vec![vec!["precision".into()]];
    for name in ["R", "C1", "C2", "C3"] {
        rows.push(vec![name.into()]);
    }
    for cs in sets {
        let rec = cs.record();
        rows[0].push(rec.precision);
        rows[1].push(rec.r);
        rows[2].push(rec.c1);
        rows[3].push(rec.c2);
        rows[4].push(rec.c3);
    }
    let cols = rows[0].len();
    let widths: Vec<usize> =
        (0..cols).map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(c: Constant, fmt: Format) -> ConstantSet {
        gen_constants(&c, fmt, 0, 2).unwrap()
    }

    #[test]
    fn double_pi_column() {
        let cs = set(Constant::Pi, Format::double());
        assert_eq!(cs.r.to_string(), "5734161139222659 * 2^-54");
        assert_eq!(cs.c1.to_string(), "7074237752028440 * 2^-51");
        assert_eq!(cs.c2.to_string(), "4967757600021504 * 2^-105");
        assert_eq!(cs.c3.to_string(), "7744522442262976 * 2^-155");
    }

    #[test]
    fn single_ln2_column() {
        let cs = set(Constant::Ln2, Format::single());
        assert_eq!(cs.r.to_string(), "12102203 * 2^-23");
        assert_eq!(cs.c1.to_string(), "11629080 * 2^-24");
        assert_eq!(cs.c2.to_string(), "-8577792 * 2^-52");
        assert_eq!(cs.c3.to_string(), "-8803384 * 2^-72");
    }

    #[test]
    fn c2_is_a_multiple_of_its_quantum() {
        let cs = set(Constant::Pi, Format::double());
        assert_eq!(c2_quantum(&cs.c1), ExactReal::pow2(-100));
        assert_eq!(cs.c2.significand() % 32, 0);
    }

    #[test]
    fn audits_pass_for_presets() {
        for fmt in Format::presets() {
            for c in [Constant::Pi, Constant::Ln2] {
                let cs = set(c, fmt);
                for n in 0..=10 {
                    let rep = audit(&cs, n);
                    assert!(rep.pass(), "{rep}");
                }
            }
        }
    }

    #[test]
    fn power_of_two_c1_fails_audit() {
        let mut cs = set(Constant::Pi, Format::double());
        cs.c1 = Fpn::from_int(Format::double(), 1).unwrap();
        let rep = audit(&cs, 0);
        assert!(!rep.pass());
        assert!(rep.failures().any(|i| i.hypothesis == "C1 is not exactly a power of 2"));
    }

    #[test]
    fn delta_and_c1_bounds() {
        for fmt in Format::presets() {
            for c in [Constant::Pi, Constant::Ln2] {
                let cs = set(c, fmt);
                let p = fmt.p() as i64;
                assert!(delta(&cs).abs() <= ExactReal::pow2(2 - p));
                // |1/R - C1| <= 2^(-e_R - 1 - (p - q))
                let e_r = cs.r.binade().unwrap();
                let err = (&cs.r.to_exact().recip().unwrap() - &cs.c1.to_exact()).abs();
                assert!(err <= ExactReal::pow2(-e_r - 1 - (p - 2)));
                assert_eq!(cs.c1.significand() % 4, 0);
            }
        }
    }

    #[test]
    fn rc1_adjustment() {
        let cs = set(Constant::Pi, Format::double_extended());
        assert!(rc1_le_1(&cs.r, &cs.c1));
        let same = adjust_r_for_rc1_le_1(&cs).unwrap();
        assert_eq!(same, cs);
        for (c, fmt) in [(Constant::Pi, Format::double()), (Constant::Ln2, Format::double())] {
            let cs = set(c, fmt);
            let adj = adjust_r_for_rc1_le_1(&cs).unwrap();
            assert!(rc1_le_1(&adj.r, &adj.c1));
            assert!(adj.r_nudge != 0 || rc1_le_1(&cs.r, &cs.c1));
            assert!(adj.r_nudge.abs() <= MAX_R_NUDGE);
            assert_eq!(adj.c1, c1_from_r(&adj.r, 2).unwrap());
        }
    }

    #[test]
    fn other_q_values() {
        let cs = gen_constants(&Constant::Pi, Format::double(), 0, 3).unwrap();
        assert_eq!(cs.c1.significand() % 8, 0);
        assert!(rc1_le_1(&cs.r, &cs.c1));
        assert!(audit(&cs, 0).pass());
        assert!(gen_constants(&Constant::Pi, Format::double(), 0, 1).is_err());
        assert!(gen_constants(&Constant::Pi, Format::double(), 0, 52).is_err());
    }

    #[test]
    fn every_q_yields_a_set() {
        for (c, fmt) in [(Constant::Pi, Format::single()), (Constant::Ln2, Format::double())] {
            for q in 2..fmt.p() - 1 {
                let cs = gen_unaudited(&c, fmt, 0, q).unwrap_or_else(|e| panic!("{c} {fmt} q = {q}: {e}"));
                assert!(cs.c1.significand().trailing_zeros() >= q);
                let k = cs.c2.to_exact().div(&c2_quantum(&cs.c1)).unwrap();
                assert!(k.is_integer(), "{c} {fmt} q = {q}: C2 = {}", cs.c2);
                let err = (cs.enclosure.lo() - &cs.c_approx()).abs();
                assert!(err < ExactReal::pow2(cs.c1.ulp_exp() + q as i64 - 2 * fmt.p() as i64 + 6), "{c} {fmt} q = {q}");
            }
        }
    }

    #[test]
    fn scaled_constants() {
        let half_pi = set(Constant::Pi.scaled(-1), Format::double());
        let pi = set(Constant::Pi, Format::double());
        assert_eq!(half_pi.r.to_exact(), pi.r.to_exact().mul_pow2(1));
        assert_eq!(half_pi.c1.to_exact(), pi.c1.to_exact().mul_pow2(-1));
    }

    #[test]
    fn table_rendering() {
        let sets = [set(Constant::Pi, Format::single()), set(Constant::Pi, Format::double())];
        let t = render_table(&sets);
        assert!(t.lines().nth(2).unwrap().contains("13176796 * 2^-22"));
        assert!(t.lines().nth(2).unwrap().contains("7074237752028440 * 2^-51"));
        let json = serde_json::to_string(&sets[1].record()).unwrap();
        let back: ConstantRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, sets[1].record());
        assert!(json.contains("\"C2\":\"4967757600021504 * 2^-105\""));
    }
}

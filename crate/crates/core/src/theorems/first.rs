//! Checks of the `z` extraction and of the exact first step `x - z C1`:
//! exhaustive sweeps at small precision, and random campaigns on the real
//! constant sets of any format.
//!
//! `R` runs over every normal significand in `[1/2, 1)` and `[1, 2)`, `x`
//! over every FPN of the configured number of binades (twelve by default) ending at the highest binade an
//! in-range `x` can reach, and `N` and `q` over the configured lists. Each
//! `(R, N, q)` is swept in a roomy format and, unless disabled, again in
//! the format with the largest `λ` its hypotheses allow, which pushes the
//! low end of the window into the subnormals.

use num_bigint::BigInt;
use num_traits::{One, Signed};

use std::sync::Mutex;

use super::sweep::{binade_values, fpns_in_window, par_random, par_tally, random_fpn, window_count};
use super::{inputs, Case, CheckConfig, CheckResult, Failure, Mode, Tally, Theorem, MAX_EXHAUSTIVE_CASES};
use crate::argred::{sigma, xr_bound};
use crate::constgen::{adjust_r_for_rc1_le_1, c1_from_r, gen_unaudited, rc1_le_1};
use crate::error::{Error, Result};
use crate::softfp::{ops, round::is_representable, ExactReal, Format, Fpn, Ties};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Thm3,
    Correct1,
    Correct2,
    Correct3,
}

impl Kind {
    fn theorem(self) -> Theorem {
        match self {
            Kind::Thm3 => Theorem::Thm3,
            Kind::Correct1 => Theorem::Correct1,
            Kind::Correct2 => Theorem::Correct2,
            Kind::Correct3 => Theorem::Correct3,
        }
    }

    /// Highest binade of `x` that can meet the hypotheses for `R >= 1/2`.
    fn top_binade(self, p: u32, n: i32) -> i64 {
        let t = p as i64 - n as i64 - 2;
        if self == Kind::Correct1 {
            t + 1
        } else {
            t
        }
    }

    /// Exponent `k` of the hypothesis `C1 >= 2^k λ`.
    fn c1_bound(self, p: u32, n: i32, q: u32) -> Option<i64> {
        let (p, n, q) = (p as i64, n as i64, q as i64);
        match self {
            Kind::Thm3 => None,
            Kind::Correct3 => Some(p + (-1i64).max(n)),
            Kind::Correct1 | Kind::Correct2 => Some(p - q + 1i64.max(n - 1)),
        }
    }
}

/// One `(format, R, N, q)` combination.
#[derive(Clone, Debug)]
struct Setup {
    fmt: Format,
    r: Fpn,
    c1: Option<Fpn>,
    n: i32,
    q: u32,
    /// Binades of `x`.
    window: i64,
    /// Failed constant-level hypothesis, if any.
    excluded: Option<String>,
}

impl Setup {
    fn new(kind: Kind, fmt: Format, r: Fpn, n: i32, q: u32, window: u32, weaken: bool) -> Result<Setup> {
        let r = r.convert(fmt)?;
        let c1 = match kind {
            Kind::Thm3 => None,
            _ => Some(c1_from_r(&r, q)?),
        };
        let mut s = Setup { fmt, r, c1, n, q, window: window as i64, excluded: None };
        s.excluded = s.failed_hypothesis(kind, weaken);
        Ok(s)
    }

    fn failed_hypothesis(&self, kind: Kind, weaken: bool) -> Option<String> {
        let p = self.fmt.p();
        let lam = self.fmt.e_min_q() as i64;
        if p <= 3 {
            return Some("p > 3".into());
        }
        if self.r.is_negative() || !self.r.is_normal() {
            return Some("R is a positive normal FPN".into());
        }
        if kind != Kind::Correct1 && Fpn::pow2(self.fmt, -(self.n as i64)).is_err() {
            return Some("2^-N is a FPN".into());
        }
        let Some(c1) = &self.c1 else { return None };
        if matches!(kind, Kind::Correct1 | Kind::Correct2) && !weaken && !(2..p - 1).contains(&self.q) {
            return Some("2 <= q < p-1".into());
        }
        if c1.is_power_of_two() {
            return Some("C1 is not exactly a power of 2".into());
        }
        let k = kind.c1_bound(p, self.n, self.q).expect("first-step theorem");
        if c1.to_exact() < ExactReal::pow2(k + lam) {
            return Some(format!("C1 >= 2^{k} λ"));
        }
        if kind == Kind::Correct2 && !rc1_le_1(&self.r, c1) {
            return Some("R C1 <= 1".into());
        }
        None
    }

    fn window(&self, kind: Kind) -> (i64, i64) {
        let top = kind.top_binade(self.fmt.p(), self.n);
        (top - self.window + 1, top)
    }

    fn replay(&self, kind: Kind, x: &Fpn, z: Option<&Fpn>) -> String {
        let ties = if self.fmt.ties() == Ties::Away { " --ties away" } else { "" };
        let mut s = format!(
            "argred verify --theorem {} --p {} --e-min-q {} --e-max {}{ties} --N {}",
            kind.theorem(),
            self.fmt.p(),
            self.fmt.e_min_q(),
            self.fmt.e_max(),
            self.n
        );
        if kind != Kind::Thm3 {
            s += &format!(" --q {}", self.q);
        }
        s += &format!(" --R '{}' --x '{x}'", self.r);
        if let Some(z) = z {
            s += &format!(" --z '{z}'");
        }
        s
    }
}

/// The largest `e_min_q` for which the constant-level hypotheses still
/// hold for this `R`.
fn tight_e_min_q(kind: Kind, roomy: &Setup) -> i64 {
    let p = roomy.fmt.p() as i64;
    let mut e = roomy.r.binade().expect("nonzero R") - p + 1;
    if kind != Kind::Correct1 {
        e = e.min(-(roomy.n as i64));
    }
    if let (Some(c1), Some(k)) = (&roomy.c1, kind.c1_bound(roomy.fmt.p(), roomy.n, roomy.q)) {
        e = e.min(c1.binade().expect("nonzero C1") - k);
    }
    e
}

fn setups(kind: Kind, cfg: &CheckConfig, roomy: Format, r: &Fpn, qs: &[u32]) -> Result<Vec<Setup>> {
    let mut out = Vec::new();
    for &n in &cfg.n {
        for &q in qs {
            let s = Setup::new(kind, roomy, *r, n, q, cfg.window, cfg.weaken_q)?;
            if cfg.underflow_tight {
                let e = tight_e_min_q(kind, &s);
                let fmt = Format::new(roomy.p(), e as i32, roomy.e_max())?.with_ties(roomy.ties());
                out.push(s);
                out.push(Setup::new(kind, fmt, *r, n, q, cfg.window, cfg.weaken_q)?);
            } else {
                out.push(s);
            }
        }
    }
    Ok(out)
}

/// `z = ∘(x R + σ) ⊖ σ`, the subtraction's exactness, and `x R`.
fn extract(x: &Fpn, s: &Setup) -> Result<(Fpn, bool, ExactReal)> {
    let sig = sigma(s.fmt, s.n)?;
    let t = ops::fma(x, &s.r, &sig)?.value;
    let z = ops::sub(&t, &sig)?;
    Ok((z.value, z.is_exact(), &x.to_exact() * &s.r.to_exact()))
}

/// Whether `x - z C1` is exact, by the kernel's flag and by the oracle.
fn first_step_routes(x: &Fpn, z: &Fpn, c1: &Fpn, fmt: Format) -> Result<(bool, bool)> {
    let kernel = ops::fma(&z.neg(), c1, x)?.is_exact();
    let exact = &x.to_exact() - &(&z.to_exact() * &c1.to_exact());
    Ok((kernel, is_representable(&exact, fmt.p(), fmt)))
}

fn scaled_z(z: &Fpn, n: i32) -> Option<BigInt> {
    let v = z.to_exact().mul_pow2(n as i64);
    v.is_integer().then(|| v.floor())
}

/// Checks one `x`, counting it as skipped when no case meets the hypotheses.
fn check_x(kind: Kind, s: &Setup, x: &Fpn, z_given: Option<&Fpn>, key: Vec<u64>, t: &mut Tally) -> Result<()> {
    t.cases += 1;
    let p = s.fmt.p();
    let n = s.n as i64;
    let half = ExactReal::pow2(-n - 1);
    let fail = |t: &mut Tally, what: String, z: Option<&Fpn>| {
        let mut inp = inputs([("R", s.r.to_string()), ("x", x.to_string()), ("N", s.n.to_string())]);
        if let Some(z) = z {
            inp.insert("z".into(), z.to_string());
        }
        if let Some(c1) = &s.c1 {
            inp.insert("C1".into(), c1.to_string());
        }
        t.fail(key.clone(), || Failure { what, inputs: inp, replay: s.replay(kind, x, z) });
    };

    if kind == Kind::Correct1 {
        let c1 = s.c1.as_ref().expect("constant");
        let xr = &x.to_exact() * &s.r.to_exact();
        let k0 = xr.mul_pow2(n).floor();
        let candidates: Vec<BigInt> = match z_given {
            Some(z) => match scaled_z(z, s.n) {
                Some(k) => vec![k],
                None => {
                    t.skipped += 1;
                    return Ok(());
                }
            },
            None => vec![k0.clone(), k0 + BigInt::one()],
        };
        let mut any = false;
        for k in candidates {
            let ell = k.abs().bits() as u32;
            if !(2..=p - 1).contains(&ell) || s.q > ell {
                continue;
            }
            let z = Fpn::from_exact(s.fmt, &ExactReal::dyadic(k, -n))?;
            if (&xr - &z.to_exact()).abs() > half {
                continue;
            }
            any = true;
            t.seen.insert(ell as i64);
            let (kernel, oracle) = first_step_routes(x, &z, c1, s.fmt)?;
            if !(kernel && oracle) {
                fail(t, format!("x - z C1 not exact (fma flag exact: {kernel}, oracle representable: {oracle})"), Some(&z));
            }
        }
        if !any {
            t.skipped += 1;
        }
        return Ok(());
    }

    let xr_abs = (&x.to_exact() * &s.r.to_exact()).abs();
    if xr_abs > xr_bound(s.fmt, s.n) {
        t.skipped += 1;
        return Ok(());
    }
    let (z, sub_exact, xr) = extract(x, s)?;
    if let Some(zg) = z_given {
        if zg != &z {
            return Err(Error::Config(format!("z = {zg} is not the value {z} produced by the fma")));
        }
    }
    match kind {
        Kind::Thm3 => {
            if z.to_exact().abs() < ExactReal::pow2(1 - n) {
                t.skipped += 1;
                return Ok(());
            }
            let k_exact = scaled_z(&z, s.n);
            let k_kernel = z.max_repr_exponent() >= -n;
            let ell = k_exact.as_ref().map(|k| k.abs().bits() as u32);
            let dist = (&xr - &z.to_exact()).abs();
            let mut bad = Vec::new();
            if k_exact.is_none() || !k_kernel {
                bad.push("z 2^N is not an integer".to_string());
            }
            match ell {
                Some(l) if (2..=p - 2).contains(&l) => {
                    t.seen.insert(l as i64);
                }
                Some(l) => bad.push(format!("ℓ = {l} outside [2, p-2]")),
                None => {}
            }
            if dist > half {
                bad.push(format!("|xR - z| = 2^{:.3} > 2^(-N-1)", dist.log2_abs()));
            }
            if !sub_exact {
                bad.push("σ subtraction inexact".into());
            }
            if !bad.is_empty() {
                fail(t, bad.join("; "), Some(&z));
            }
        }
        Kind::Correct2 | Kind::Correct3 => {
            let c1 = s.c1.as_ref().expect("constant");
            let (kernel, oracle) = first_step_routes(x, &z, c1, s.fmt)?;
            if !(kernel && oracle) {
                fail(t, format!("x - z C1 not exact (fma flag exact: {kernel}, oracle representable: {oracle})"), Some(&z));
            }
        }
        Kind::Correct1 => unreachable!(),
    }
    Ok(())
}

fn sweep(cfg: &CheckConfig, kind: Kind) -> Result<CheckResult> {
    if cfg.p < 4 {
        return Err(Error::Config(format!("{} needs p >= 4, got {}", cfg.theorem, cfg.p)));
    }
    if cfg.weaken_q && kind != Kind::Correct1 {
        return Err(Error::Config("weakening q is only supported for correct1".into()));
    }
    if cfg.n.is_empty() {
        return Err(Error::Config("no N given".into()));
    }
    if cfg.window == 0 {
        return Err(Error::Config("window must hold at least one binade".into()));
    }
    let qs: Vec<u32> = match kind {
        Kind::Thm3 | Kind::Correct3 => vec![2],
        Kind::Correct1 if cfg.weaken_q => vec![1],
        _ => {
            if let Some(q) = cfg.q.iter().find(|&&q| !(2..cfg.p - 1).contains(&q)) {
                return Err(Error::Config(format!("q = {q} outside 2 <= q < p-1")));
            }
            cfg.q.clone()
        }
    };

    if let Some(case) = &cfg.case {
        return single(cfg, kind, case, qs[0]);
    }
    if let Mode::Randomized { seed, trials } = cfg.mode {
        return randomized(cfg, kind, &qs, seed, trials);
    }

    let roomy = cfg.sweep_format()?;
    let rs: Vec<Fpn> = [-1, 0].into_iter().flat_map(|b| binade_values(roomy, b)).collect();
    let mut expected = 0u64;
    for r in &rs {
        for s in setups(kind, cfg, roomy, r, &qs)? {
            let (lo, hi) = s.window(kind);
            expected += window_count(s.fmt, lo, hi);
        }
    }
    if expected > MAX_EXHAUSTIVE_CASES {
        return Err(Error::Config(format!("{expected} cases exceed the exhaustive limit")));
    }

    let errors = std::sync::Mutex::new(None);
    let tally = par_tally(&rs, |ri, r| {
        let mut t = Tally::default();
        let run = |t: &mut Tally| -> Result<()> {
            for (si, s) in setups(kind, cfg, roomy, r, &qs)?.iter().enumerate() {
                let (lo, hi) = s.window(kind);
                let xs = fpns_in_window(s.fmt, lo, hi);
                if s.excluded.is_some() {
                    t.cases += xs.len() as u64;
                    t.skipped += xs.len() as u64;
                    continue;
                }
                for (xi, x) in xs.iter().enumerate() {
                    check_x(kind, s, x, None, vec![ri as u64, si as u64, xi as u64], t)?;
                }
            }
            Ok(())
        };
        if let Err(e) = run(&mut t) {
            errors.lock().unwrap().get_or_insert(e);
        }
        t
    });
    if let Some(e) = errors.into_inner().unwrap() {
        return Err(e);
    }

    let mut notes: Vec<String> = ell_note(&tally.seen).into_iter().collect();
    if kind == Kind::Correct1 && cfg.p > 2 && !tally.seen.contains(&(cfg.p as i64 - 1)) {
        notes.push(format!("ℓ = p-1 = {} never met", cfg.p - 1));
    }
    notes.push(format!(
        "{} R values x {} N x {} q x {} formats",
        rs.len(),
        cfg.n.len(),
        qs.len(),
        if cfg.underflow_tight { 2 } else { 1 }
    ));
    Ok(tally.finish(cfg, Some(expected), notes))
}

fn ell_note(seen: &std::collections::BTreeSet<i64>) -> Option<String> {
    let ells: Vec<String> = seen.iter().map(|l| l.to_string()).collect();
    (!ells.is_empty()).then(|| format!("ℓ values met: {}", ells.join(", ")))
}

/// Random `x` for the constant sets of `cfg.constants` in the campaign
/// format, `p + 12` binades below the largest in-range one.
fn randomized(cfg: &CheckConfig, kind: Kind, qs: &[u32], seed: u64, trials: u64) -> Result<CheckResult> {
    let fmt = cfg.campaign_format();
    let mut total = Tally::default();
    let mut notes = Vec::new();
    for (ci, c) in cfg.constants.iter().enumerate() {
        for (ni, &n) in cfg.n.iter().enumerate() {
            for (qi, &q) in qs.iter().enumerate() {
                let mut cs = gen_unaudited(c, fmt, n, q.max(2))?;
                if kind == Kind::Correct2 && !rc1_le_1(&cs.r, &cs.c1) {
                    cs = adjust_r_for_rc1_le_1(&cs)?;
                }
                let s = Setup::new(kind, fmt, cs.r, n, q, cfg.window, cfg.weaken_q)?;
                let label = format!("{} N = {n}{}", c.name(), if qs.len() > 1 { format!(" q = {q}") } else { String::new() });
                if let Some(h) = &s.excluded {
                    notes.push(format!("{label}: hypothesis fails: {h}"));
                    total.cases += trials;
                    total.skipped += trials;
                    continue;
                }
                // Correct1 also admits z one step beyond the extraction range.
                let bound = if kind == Kind::Correct1 { xr_bound(fmt, n).mul_pow2(1) } else { xr_bound(fmt, n) };
                let rx = s.r.to_exact();
                let top = bound.ilog2().expect("positive bound") - s.r.binade().expect("nonzero R");
                let lo = top - fmt.p() as i64 - 12;
                let stream_seed = seed ^ ((ci as u64) << 32) ^ ((ni as u64) << 16) ^ ((qi as u64) << 8);
                let errors = Mutex::new(None);
                let t = par_random(stream_seed, trials, |rng, _, first, count| {
                    let mut t = Tally::default();
                    for i in 0..count {
                        let x = loop {
                            let x = random_fpn(rng, fmt, lo, top);
                            if (&x.to_exact() * &rx).abs() <= bound {
                                break x;
                            }
                        };
                        let key = vec![ci as u64, ni as u64, qi as u64, first + i];
                        if let Err(e) = check_x(kind, &s, &x, None, key, &mut t) {
                            errors.lock().unwrap().get_or_insert(e);
                            break;
                        }
                    }
                    t
                });
                if let Some(e) = errors.into_inner().unwrap() {
                    return Err(e);
                }
                notes.push(format!("{label}: {} trials, {} outside hypotheses", t.cases, t.skipped));
                total = total.merge(t);
            }
        }
    }
    notes.extend(ell_note(&total.seen));
    let expected = trials * (cfg.constants.len() * cfg.n.len() * qs.len()) as u64;
    Ok(total.finish(cfg, Some(expected), notes))
}

fn single(cfg: &CheckConfig, kind: Kind, case: &Case, q: u32) -> Result<CheckResult> {
    let fmt = if cfg.format.p() == cfg.p { cfg.format.with_ties(cfg.ties) } else { cfg.sweep_format()? };
    let n = *cfg.n.first().ok_or_else(|| Error::Config("no N given".into()))?;
    let q = if kind == Kind::Thm3 || kind == Kind::Correct3 || cfg.weaken_q { q } else { cfg.q.first().copied().unwrap_or(q) };
    let r = Fpn::parse_exact(&Case::get(&case.r, "R")?, fmt)?;
    let x = Fpn::parse_exact(&Case::get(&case.x, "x")?, fmt)?;
    let z = case.z.as_deref().map(|z| Fpn::parse_exact(z, fmt)).transpose()?;
    let s = Setup::new(kind, fmt, r, n, q, cfg.window, cfg.weaken_q)?;
    let mut t = Tally::default();
    let mut notes = Vec::new();
    match &s.excluded {
        Some(h) => {
            t.cases += 1;
            t.skipped += 1;
            notes.push(format!("hypothesis fails: {h}"));
        }
        None => check_x(kind, &s, &x, z.as_ref(), vec![], &mut t)?,
    }
    if t.skipped > 0 && notes.is_empty() {
        notes.push("case is outside the hypotheses".into());
    }
    Ok(t.finish(cfg, None, notes))
}

/// Structure of `z = ∘(x R + σ) ⊖ σ` for `|z| >= 2^(1-N)`: `z 2^N` is an
/// integer of `ℓ` bits with `2 <= ℓ <= p-2`, and `|x R - z| <= 2^(-N-1)`.
pub fn check_thm3(cfg: &CheckConfig) -> Result<CheckResult> {
    sweep(cfg, Kind::Thm3)
}

/// `x - z C1` is exact for any `z` with `z 2^N` an `ℓ`-bit integer,
/// `q <= ℓ <= p-1` and `|x R - z| <= 2^(-N-1)`. Both nearest candidates
/// for `z` are tried.
pub fn check_correct1(cfg: &CheckConfig) -> Result<CheckResult> {
    sweep(cfg, Kind::Correct1)
}

/// `x - z C1` is exact for `z` from the fma when `R C1 <= 1`.
pub fn check_correct2(cfg: &CheckConfig) -> Result<CheckResult> {
    sweep(cfg, Kind::Correct2)
}

/// `x - z C1` is exact for `z` from the fma when `q = 2`.
pub fn check_correct3(cfg: &CheckConfig) -> Result<CheckResult> {
    sweep(cfg, Kind::Correct3)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(theorem: Theorem, p: u32) -> CheckConfig {
        let mut c = CheckConfig::new(theorem);
        c.p = p;
        c
    }

    #[test]
    fn small_precision_sweeps_pass() {
        for t in [Theorem::Thm3, Theorem::Correct1, Theorem::Correct2, Theorem::Correct3] {
            let r = super::super::run(&cfg(t, 6)).unwrap();
            assert!(r.pass, "{r}");
            assert_eq!(Some(r.cases), r.expected_cases);
            assert!(r.cases > r.skipped);
        }
    }

    #[test]
    fn tight_format_reaches_subnormals() {
        let c = cfg(Theorem::Correct3, 6);
        let roomy = c.sweep_format().unwrap();
        let r = binade_values(roomy, -1)[5];
        let s = &setups(Kind::Correct3, &c, roomy, &r, &[2]).unwrap()[1];
        assert!(s.fmt.e_min_q() > -200 && s.excluded.is_none());
        let (lo, _) = s.window(Kind::Correct3);
        assert!(lo < s.fmt.min_normal_exp());
        let below = Format::new(6, s.fmt.e_min_q() + 1, 200).unwrap();
        match Setup::new(Kind::Correct3, below, r, s.n, 2, 12, false) {
            Ok(s2) => assert!(s2.excluded.is_some(), "the tight λ is the largest allowed"),
            Err(_) => {} // R itself no longer fits
        }
    }

    #[test]
    fn replay_reproduces_a_case() {
        let mut c = cfg(Theorem::Correct3, 8);
        c.n = vec![1];
        c.case = Some(Case { r: Some("201 * 2^-8".into()), x: Some("-45 * 2^-1".into()), ..Default::default() });
        let r = check_correct3(&c).unwrap();
        assert_eq!((r.cases, r.skipped), (1, 0));
        assert!(r.pass);
    }

    #[test]
    fn random_campaigns_on_real_constants() {
        for t in [Theorem::Thm3, Theorem::Correct1, Theorem::Correct2, Theorem::Correct3] {
            let mut c = CheckConfig::new(t).randomized(5, 2_000);
            c.format = Format::single();
            c.n = vec![0, 4];
            let r = super::super::run(&c).unwrap();
            assert!(r.pass, "{r}");
            assert_eq!(Some(r.cases), r.expected_cases);
            assert!(r.skipped < r.cases / 2, "{r}");
        }
    }

    #[test]
    fn weakened_q_is_mined_not_failed() {
        let mut c = cfg(Theorem::Correct1, 6);
        c.weaken_q = true;
        c.n = vec![0];
        let r = check_correct1(&c).unwrap();
        assert!(r.pass);
        assert_eq!(r.failures_total, 0);
        assert!(r.notes.iter().any(|n| n.contains("counterexample")));
    }
}

//! The nine-operation second step: `v1 + v2 = x - z C1 - z C2` exactly.
//!
//! Randomized campaigns run on the real constant sets of a preset format.
//! The exhaustive sweep runs at small precision on synthetic sets whose
//! `C2` takes the extreme and middle values the hypotheses allow.

use std::sync::Mutex;

use super::sweep::{binade_values, fpns_in_window, par_random, par_tally, random_fpn, window_count};
use super::{inputs, Case, CheckConfig, CheckResult, Failure, Mode, Tally, Theorem, MAX_EXHAUSTIVE_CASES};
use crate::argred::{extract_z, first_step, second_step, xr_bound};
use crate::constgen::{audit, c1_from_r, c2_quantum, gen_constants, ConstantSet};
use crate::error::{Error, Result};
use crate::softfp::{ExactReal, Format, Fpn, Ties};

/// Ops the second step must issue.
pub const SECOND_STEP_OPS: u32 = 9;

fn replay(cs: &ConstantSet, x: &Fpn, synthetic: bool) -> String {
    let ties = if cs.fmt.ties() == Ties::Away { " --ties away" } else { "" };
    let fmt = match cs.fmt.preset_name() {
        Some(name) if !synthetic => format!("--format {name}"),
        _ => format!("--p {} --e-min-q {} --e-max {}", cs.fmt.p(), cs.fmt.e_min_q(), cs.fmt.e_max()),
    };
    let what = if synthetic {
        format!("--R '{}' --c2 '{}'", cs.r, cs.c2)
    } else {
        format!("--const {}", cs.constant.name())
    };
    format!("argred verify --theorem thm6 {fmt}{ties} {what} --N {} --x '{x}'", cs.n)
}

/// Checks every conclusion for one `x`. `x` must be in range.
fn check_x(cs: &ConstantSet, x: &Fpn, synthetic: bool, key: Vec<u64>, t: &mut Tally) -> Result<()> {
    t.cases += 1;
    let n = cs.n;
    let ex = extract_z(x, cs, n)?;
    let z = ex.z;
    let mut bad = Vec::new();
    let (u, u_exact) = first_step(x, &z, cs)?;
    if !u_exact {
        bad.push("first step inexact".to_string());
    }
    match second_step(&z, &u, cs) {
        Err(Error::Hypothesis { hypothesis, detail, .. }) => bad.push(format!("{hypothesis}: {detail}")),
        Err(Error::TailUnderflow { a, b }) => bad.push(format!("Fast2Mult({a}, {b}) tail not representable")),
        Err(e) => return Err(e),
        Ok(st) => {
            let zx = z.to_exact();
            let target = &(&x.to_exact() - &(&zx * &cs.c1.to_exact())) - &(&zx * &cs.c2.to_exact());
            let got = &st.v1.to_exact() + &st.v2.to_exact();
            if got != target {
                bad.push(format!("v1 + v2 = {got} differs from x - z C1 - z C2 = {target}"));
            }
            if !st.last_line_exact {
                bad.push("a rounding in v2 = ((t1 - v1) + t2) - p2 was inexact".into());
            }
            if st.ops != SECOND_STEP_OPS {
                bad.push(format!("{} rounded operations, not {SECOND_STEP_OPS}", st.ops));
            }
            // With z = 0, v1 = x may be any small FPN.
            if !z.is_zero() && !st.multiples_hold(cs, n) {
                bad.push("t1 or v1 is not a multiple of 2^(-N-1) ulp2(C1)".into());
            }
            t.seen.insert(ex.ell as i64);
        }
    }
    if !bad.is_empty() {
        let inp = inputs([
            ("x", x.to_string()),
            ("z", z.to_string()),
            ("R", cs.r.to_string()),
            ("C1", cs.c1.to_string()),
            ("C2", cs.c2.to_string()),
            ("N", n.to_string()),
        ]);
        t.fail(key, || Failure { what: bad.join("; "), inputs: inp, replay: replay(cs, x, synthetic) });
    }
    Ok(())
}

/// `C2` values used by the exhaustive sweep, as multiples of `8 ulp2(C1)`:
/// zero, one quantum, the largest allowed `4 ulp(C1)`, one quantum below it,
/// and a middle value, with both signs.
pub(crate) fn synthetic_c2_multiples(p: u32) -> Vec<i128> {
    let k = 1i128 << (p - 2);
    let mid = (k * 37 / 64).max(1);
    let mut v = vec![0, 1, k - 1, k, mid];
    v.sort_unstable();
    v.dedup();
    let mut out: Vec<i128> = v.iter().filter(|&&m| m != 0).map(|m| -m).collect();
    out.extend(v);
    out.sort_unstable();
    out
}

fn synthetic(r: Fpn, q: u32, mult: i128, n: i32) -> Result<ConstantSet> {
    let c1 = c1_from_r(&r, q)?;
    let c2 = Fpn::from_exact(r.format(), &(&ExactReal::from_int(mult) * &c2_quantum(&c1)))?;
    ConstantSet::synthetic(r, q, c2, n)
}

fn excluded(cs: &ConstantSet, n: i32) -> Option<String> {
    audit(cs, n)
        .items
        .iter()
        .find(|i| matches!(i.theorem, "thm5" | "thm6") && !i.pass)
        .map(|i| i.hypothesis.to_string())
}

fn exhaustive(cfg: &CheckConfig) -> Result<CheckResult> {
    if cfg.p <= 4 {
        return Err(Error::Config(format!("thm6 needs p > 4, got {}", cfg.p)));
    }
    let fmt = cfg.sweep_format()?;
    let rs: Vec<Fpn> = [-1, 0].into_iter().flat_map(|b| binade_values(fmt, b)).collect();
    let mults = synthetic_c2_multiples(cfg.p);
    let top = |n: i32| fmt.p() as i64 - n as i64 - 2;
    let per_r: u64 = cfg
        .n
        .iter()
        .map(|&n| window_count(fmt, top(n) - cfg.window as i64 + 1, top(n)))
        .sum::<u64>()
        * mults.len() as u64;
    let expected = per_r * rs.len() as u64;
    if expected > MAX_EXHAUSTIVE_CASES {
        return Err(Error::Config(format!("{expected} cases exceed the exhaustive limit")));
    }
    let errors = Mutex::new(None);
    let tally = par_tally(&rs, |ri, r| {
        let mut t = Tally::default();
        let mut run = || -> Result<()> {
            for (ni, &n) in cfg.n.iter().enumerate() {
                let xs = fpns_in_window(fmt, top(n) - cfg.window as i64 + 1, top(n));
                for (mi, &m) in mults.iter().enumerate() {
                    let cs = synthetic(*r, 2, m, n)?;
                    if excluded(&cs, n).is_some() {
                        t.cases += xs.len() as u64;
                        t.skipped += xs.len() as u64;
                        continue;
                    }
                    let bound = xr_bound(fmt, n);
                    let rx = r.to_exact();
                    for (xi, x) in xs.iter().enumerate() {
                        if (&x.to_exact() * &rx).abs() > bound {
                            t.cases += 1;
                            t.skipped += 1;
                            continue;
                        }
                        check_x(&cs, x, true, vec![ri as u64, ni as u64, mi as u64, xi as u64], &mut t)?;
                    }
                }
            }
            Ok(())
        };
        if let Err(e) = run() {
            errors.lock().unwrap().get_or_insert(e);
        }
        t
    });
    if let Some(e) = errors.into_inner().unwrap() {
        return Err(e);
    }
    let notes = vec![format!("C2 multiples of 8 ulp2(C1): {mults:?}")];
    Ok(tally.finish(cfg, Some(expected), notes))
}

fn randomized(cfg: &CheckConfig, seed: u64, trials: u64) -> Result<CheckResult> {
    let fmt = cfg.campaign_format();
    let mut total = Tally::default();
    let mut notes = Vec::new();
    for (ci, c) in cfg.constants.iter().enumerate() {
        for (ni, &n) in cfg.n.iter().enumerate() {
            let cs = gen_constants(c, fmt, n, 2)?;
            let bound = xr_bound(fmt, n);
            let rx = cs.r.to_exact();
            // |x| < bound / R; the top binade follows from R's binade.
            let top = bound.ilog2().expect("positive bound") - cs.r.binade().expect("nonzero R");
            let lo = top - fmt.p() as i64 - 12;
            let stream_seed = seed ^ ((ci as u64) << 32) ^ (ni as u64) << 16;
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
                    let key = vec![ci as u64, ni as u64, first + i];
                    if let Err(e) = check_x(&cs, &x, false, key, &mut t) {
                        errors.lock().unwrap().get_or_insert(e);
                        break;
                    }
                }
                t
            });
            if let Some(e) = errors.into_inner().unwrap() {
                return Err(e);
            }
            notes.push(format!("{} N = {n}: {} trials, ℓ up to {}", c.name(), t.cases, t.seen.last().copied().unwrap_or(0)));
            total = total.merge(t);
        }
    }
    if total.failures_total == 0 {
        notes.push(format!("every second step issued {SECOND_STEP_OPS} rounded operations"));
    }
    let expected = trials * (cfg.constants.len() * cfg.n.len()) as u64;
    Ok(total.finish(cfg, Some(expected), notes))
}

fn single(cfg: &CheckConfig, case: &Case) -> Result<CheckResult> {
    let n = *cfg.n.first().ok_or_else(|| Error::Config("no N given".into()))?;
    let fmt: Format = cfg.campaign_format();
    let x = Fpn::parse_exact(&Case::get(&case.x, "x")?, fmt)?;
    let (cs, synth) = match (&case.r, &case.c2) {
        (Some(r), Some(c2)) => {
            let r = Fpn::parse_exact(r, fmt)?;
            let c2 = Fpn::parse_exact(c2, fmt)?;
            (ConstantSet::synthetic(r, 2, c2, n)?, true)
        }
        (None, None) => {
            let c = cfg.constants.first().ok_or_else(|| Error::Config("no constant given".into()))?;
            (gen_constants(c, fmt, n, 2)?, false)
        }
        _ => return Err(Error::Config("give both --R and --c2, or neither".into())),
    };
    let mut t = Tally::default();
    let mut notes = Vec::new();
    if let Some(h) = excluded(&cs, n) {
        t.cases = 1;
        t.skipped = 1;
        notes.push(format!("hypothesis fails: {h}"));
    } else {
        check_x(&cs, &x, synth, vec![], &mut t)?;
    }
    Ok(t.finish(cfg, None, notes))
}

/// Exactness of `v1 + v2`, the operation count, the exactness of the last
/// line and the Fast2Sum precondition, on every case.
pub fn check_thm6(cfg: &CheckConfig) -> Result<CheckResult> {
    debug_assert_eq!(cfg.theorem, Theorem::Thm6);
    if let Some(case) = &cfg.case {
        return single(cfg, case);
    }
    match cfg.mode {
        Mode::Exhaustive => exhaustive(cfg),
        Mode::Randomized { seed, trials } => randomized(cfg, seed, trials),
    }
}

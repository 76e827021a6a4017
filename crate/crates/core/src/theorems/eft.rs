//! Random campaign over Fast2Sum and Fast2Mult with valid preconditions.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::sweep::{par_random, random_fpn};
use super::{inputs, Case, CheckConfig, CheckResult, Failure, Mode, Tally, Theorem};
use crate::error::{Error, Result};
use crate::softfp::{fast2mult, fast2sum, round, Format, Fpn, Ties};

/// Operands lie in binades `-span..=span`, chosen so that products and
/// their tails neither overflow nor underflow.
fn span(fmt: Format) -> i64 {
    let p = fmt.p() as i64;
    60.min((fmt.e_max() as i64 - 2) / 2).min((-(fmt.e_min_q() as i64) - 2 * p + 2) / 2)
}

/// An operand pair for Fast2Sum that meets its precondition: mostly
/// `|a| >= |b|` with a random overlap, sometimes `|a| < |b|` with `b`'s
/// exponent no larger than the last nonzero bit of `a`, sometimes zeros or
/// subnormals.
fn sum_operands(rng: &mut ChaCha8Rng, fmt: Format) -> (Fpn, Fpn) {
    let p = fmt.p() as i64;
    let span = span(fmt);
    match rng.random_range(0..16) {
        0 => {
            let a = random_fpn(rng, fmt, -span, span);
            (a, Fpn::zero(fmt))
        }
        1 => {
            let lo = fmt.e_min_q() as i64;
            let a = random_fpn(rng, fmt, fmt.min_normal_exp(), fmt.min_normal_exp() + 3);
            let m = rng.random_range(1u128..(1u128 << (p - 1)));
            let b = Fpn::from_parts(fmt, rng.random(), m, lo).expect("subnormal");
            (a, b)
        }
        2 | 3 => {
            let e = rng.random_range(-span..span);
            let a = Fpn::from_parts(fmt, rng.random(), rng.random_range(1u128..256) | 1, e).expect("small significand");
            let top = 1u128 << (p - 1);
            let mb = top | (rng.random::<u128>() & (top - 1));
            let b = Fpn::from_parts(fmt, rng.random(), mb, e).expect("same quantum");
            (a, b)
        }
        _ => {
            let a = random_fpn(rng, fmt, -span, span);
            let ba = a.binade().expect("nonzero");
            let bb = ba - rng.random_range(0..=p + 4);
            let b = random_fpn(rng, fmt, bb, bb);
            (a, b)
        }
    }
}

fn replay(fmt: Format, a: &Fpn, b: &Fpn) -> String {
    let ties = if fmt.ties() == Ties::Away { " --ties away" } else { "" };
    let f = fmt.preset_name().map(|n| format!("--format {n}")).unwrap_or_else(|| {
        format!("--p {} --e-min-q {} --e-max {}", fmt.p(), fmt.e_min_q(), fmt.e_max())
    });
    format!("argred verify --theorem eft {f}{ties} --x '{a}' --y '{b}'")
}

fn check_sum(a: &Fpn, b: &Fpn, key: Vec<u64>, t: &mut Tally) -> Result<()> {
    t.cases += 1;
    let fmt = a.format();
    let exact = &a.to_exact() + &b.to_exact();
    let what = match fast2sum(a, b) {
        Err(Error::Fast2SumPrecondition { .. }) => Some("precondition rejected".to_string()),
        Err(e) => return Err(e),
        Ok(pair) => {
            let hi_ok = pair.hi == round(&exact, fmt, fmt.p())?;
            let sum_ok = &pair.hi.to_exact() + &pair.lo.to_exact() == exact;
            (!(hi_ok && sum_ok)).then(|| format!("Fast2Sum gave ({}, {}): hi nearest {hi_ok}, exact {sum_ok}", pair.hi, pair.lo))
        }
    };
    if let Some(what) = what {
        t.fail(key, || Failure { what, inputs: inputs([("a", a.to_string()), ("b", b.to_string())]), replay: replay(fmt, a, b) });
    }
    Ok(())
}

fn check_mult(a: &Fpn, b: &Fpn, key: Vec<u64>, t: &mut Tally) -> Result<()> {
    t.cases += 1;
    let fmt = a.format();
    let exact = &a.to_exact() * &b.to_exact();
    let what = match fast2mult(a, b) {
        Err(Error::TailUnderflow { .. }) => Some("tail underflowed".to_string()),
        Err(e) => return Err(e),
        Ok(pair) => {
            let hi_ok = pair.hi == round(&exact, fmt, fmt.p())?;
            let prod_ok = &pair.hi.to_exact() + &pair.lo.to_exact() == exact;
            (!(hi_ok && prod_ok)).then(|| format!("Fast2Mult gave ({}, {}): hi nearest {hi_ok}, exact {prod_ok}", pair.hi, pair.lo))
        }
    };
    if let Some(what) = what {
        t.fail(key, || Failure { what, inputs: inputs([("a", a.to_string()), ("b", b.to_string())]), replay: replay(fmt, a, b) });
    }
    Ok(())
}

/// `hi = ∘(a ∘ b)` and `hi + lo = a ∘ b` exactly, for random Fast2Sum and
/// Fast2Mult calls alternating.
pub fn check_eft(cfg: &CheckConfig) -> Result<CheckResult> {
    debug_assert_eq!(cfg.theorem, Theorem::Eft);
    let fmt = cfg.campaign_format();
    if let Some(case) = &cfg.case {
        let a = Fpn::parse_exact(&Case::get(&case.x, "x")?, fmt)?;
        let b = Fpn::parse_exact(&Case::get(&case.y, "y")?, fmt)?;
        let mut t = Tally::default();
        check_mult(&a, &b, vec![0], &mut t)?;
        let mut notes = Vec::new();
        match fast2sum(&a, &b) {
            Err(Error::Fast2SumPrecondition { .. }) => notes.push("Fast2Sum precondition fails; only Fast2Mult checked".into()),
            _ => check_sum(&a, &b, vec![1], &mut t)?,
        }
        return Ok(t.finish(cfg, None, notes));
    }
    let Mode::Randomized { seed, trials } = cfg.mode else {
        return Err(Error::Config("eft is randomized only; give --trials".into()));
    };
    let span = span(fmt);
    if span < 4 {
        return Err(Error::Config(format!("{fmt} is too narrow for the eft campaign")));
    }
    let errors = std::sync::Mutex::new(None);
    let t = par_random(seed, trials, |rng, _, first, count| {
        let mut t = Tally::default();
        for i in 0..count {
            let key = vec![first + i];
            let r = if (first + i) % 2 == 0 {
                let (a, b) = sum_operands(rng, fmt);
                check_sum(&a, &b, key, &mut t)
            } else {
                let a = random_fpn(rng, fmt, -span, span);
                let b = random_fpn(rng, fmt, -span, span);
                check_mult(&a, &b, key, &mut t)
            };
            if let Err(e) = r {
                errors.lock().unwrap().get_or_insert(e);
                break;
            }
        }
        t
    });
    if let Some(e) = errors.into_inner().unwrap() {
        return Err(e);
    }
    let notes = vec![format!("{} Fast2Sum and {} Fast2Mult calls", trials.div_ceil(2), trials / 2)];
    Ok(t.finish(cfg, Some(trials), notes))
}

//! `|C - C1| <= 4 ulp(C1)` for `R = ∘_p(1/C)` and `C1 = ∘_{p-2}(1/R)`.

use rand::Rng;

use super::sweep::{par_random, par_tally};
use super::{inputs, CheckConfig, CheckResult, Failure, Mode, Tally, Theorem};
use crate::constgen::{audit, c1_from_r, gen_unaudited};
use crate::error::{Error, Result};
use crate::realnum::Constant;
use crate::softfp::{round, ExactReal, Format};

/// Checks the hypotheses and the bound for an exactly known `C`.
fn check_exact_c(c: &ExactReal, fmt: Format, key: Vec<u64>, t: &mut Tally) -> Result<()> {
    t.cases += 1;
    let p = fmt.p();
    let r = round(&c.recip().expect("nonzero C"), fmt, p)?;
    let c1 = c1_from_r(&r, 2)?;
    let excluded = !r.is_normal()
        || c1.is_power_of_two()
        || c1.to_exact() < ExactReal::pow2(p as i64 - 1 + fmt.e_min_q() as i64);
    if excluded {
        t.skipped += 1;
        return Ok(());
    }
    let dist = (c - &c1.to_exact()).abs();
    let four_ulp = &ExactReal::from_int(4) * &c1.ulp();
    if dist > four_ulp {
        let replay = format!(
            "argred verify --theorem thm7 --p {} --e-min-q {} --e-max {} --const 'exact:{c}' --trials 0",
            p,
            fmt.e_min_q(),
            fmt.e_max()
        );
        let inp = inputs([("C", c.to_string()), ("R", r.to_string()), ("C1", c1.to_string())]);
        t.fail(key, || Failure {
            what: format!("|C - C1| = 2^{:.3} > 4 ulp(C1) = 2^{}", dist.log2_abs(), c1.ulp_exp() + 2),
            inputs: inp,
            replay,
        });
    }
    Ok(())
}

/// The bound for a constant known by enclosure, using the farther end.
fn check_constant(c: &Constant, fmt: Format, key: Vec<u64>, t: &mut Tally) -> Result<()> {
    t.cases += 1;
    let cs = gen_unaudited(c, fmt, 0, 2)?;
    let report = audit(&cs, 0);
    let items: Vec<_> = report.items.iter().filter(|i| i.theorem == "thm7").collect();
    if items.iter().any(|i| !i.pass && !i.hypothesis.starts_with("conclusion")) {
        t.skipped += 1;
        return Ok(());
    }
    let dist = cs.enclosure.max_distance(&cs.c1.to_exact());
    let four_ulp = &ExactReal::from_int(4) * &cs.c1.ulp();
    let by_audit = items.iter().all(|i| i.pass);
    if dist > four_ulp || !by_audit {
        let fmt_flag = fmt.preset_name().map(|n| format!("--format {n}")).unwrap_or_else(|| {
            format!("--p {} --e-min-q {} --e-max {}", fmt.p(), fmt.e_min_q(), fmt.e_max())
        });
        let inp = inputs([("C", c.name()), ("R", cs.r.to_string()), ("C1", cs.c1.to_string())]);
        t.fail(key, || Failure {
            what: format!("|C - C1| <= 2^{:.3} exceeds 4 ulp(C1) = 2^{}", dist.log2_abs(), cs.c1.ulp_exp() + 2),
            inputs: inp,
            replay: format!("argred verify --theorem thm7 {fmt_flag} --const '{}' --trials 0", c.name()),
        });
    }
    t.seen.insert(dist.log2_abs().ceil() as i64 - cs.c1.ulp_exp());
    Ok(())
}

/// Every configured constant in every preset format, and in the campaign
/// format when it is not a preset.
fn presets(cfg: &CheckConfig) -> Result<Tally> {
    let mut formats = Format::presets().to_vec();
    if cfg.format.preset_name().is_none() {
        formats.push(cfg.format);
    }
    let mut t = Tally::default();
    for (ci, c) in cfg.constants.iter().enumerate() {
        for (fi, fmt) in formats.iter().enumerate() {
            check_constant(c, fmt.with_ties(cfg.ties), vec![0, ci as u64, fi as u64], &mut t)?;
        }
    }
    Ok(t)
}

/// The bound `|C - C1| <= 4 ulp(C1)`: always on the preset constant sets,
/// then on every `(p+6)`-bit `C` in `[1/2, 2)` (exhaustive) or on random
/// fractions in `[1/2, 2)` (randomized), at precision `cfg.p`.
pub fn check_thm7(cfg: &CheckConfig) -> Result<CheckResult> {
    debug_assert_eq!(cfg.theorem, Theorem::Thm7);
    if cfg.p <= 3 {
        return Err(Error::Config(format!("thm7 needs p > 3, got {}", cfg.p)));
    }
    let mut t = presets(cfg)?;
    let preset_cases = t.cases;
    let fmt = cfg.sweep_format()?;
    let mut notes = vec![format!("{preset_cases} preset constant sets")];
    let expected = match cfg.mode {
        Mode::Exhaustive => {
            let bits = cfg.p + 6;
            if bits > 30 {
                return Err(Error::Config(format!("exhaustive thm7 limited to p <= 24, got {}", cfg.p)));
            }
            let ms: Vec<u64> = ((1u64 << (bits - 1))..(1u64 << bits)).collect();
            let errors = std::sync::Mutex::new(None);
            let sweep = par_tally(&ms, |i, &m| {
                let mut t = Tally::default();
                for (j, e) in [-(bits as i64), 1 - bits as i64].into_iter().enumerate() {
                    let c = ExactReal::dyadic(m, e);
                    if let Err(err) = check_exact_c(&c, fmt, vec![1, j as u64, i as u64], &mut t) {
                        errors.lock().unwrap().get_or_insert(err);
                    }
                }
                t
            });
            if let Some(e) = errors.into_inner().unwrap() {
                return Err(e);
            }
            notes.push(format!("every {bits}-bit C in [1/2, 2) at p = {}", cfg.p));
            let n = 2 * ms.len() as u64;
            t = t.merge(sweep);
            preset_cases + n
        }
        Mode::Randomized { seed, trials } => {
            let sweep = par_random(seed, trials, |rng, _, first, count| {
                let mut t = Tally::default();
                for i in 0..count {
                    let den: u64 = rng.random_range(1u64 << 40..1u64 << 41);
                    let num: u64 = rng.random_range(den / 2..2 * den);
                    let c = ExactReal::ratio(num, den);
                    check_exact_c(&c, fmt, vec![2, first + i], &mut t).expect("roomy sweep format");
                }
                t
            });
            notes.push(format!("{trials} random fractions C in [1/2, 2) at p = {}", cfg.p));
            t = t.merge(sweep);
            preset_cases + trials
        }
    };
    Ok(t.finish(cfg, Some(expected), notes))
}

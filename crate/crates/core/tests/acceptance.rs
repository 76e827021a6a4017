//! Acceptance suite: one PASS/FAIL line per criterion, with its runtime
//! budget. Run with `cargo test -p argred --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use argred::argred::reduce;
use argred::constgen::gen_constants;
use argred::realnum::Constant;
use argred::softfp::{Format, Fpn, Ties};
use argred::theorems::{self, demo_codywaite, CheckConfig, CheckResult, Mode, Theorem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

struct Suite {
    failed: usize,
}

impl Suite {
    fn criterion(&mut self, id: &str, title: &str, budget: Duration, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if took <= budget => (true, d),
            Ok(d) => (false, format!("{d}; over budget: {took:.2?} > {budget:?}")),
            Err(d) => (false, d),
        };
        if !ok {
            self.failed += 1;
        }
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("{tag} [{id}] {title} ({took:.2?}, budget {budget:?}): {detail}");
    }
}

fn passed(r: CheckResult) -> Result<CheckResult, String> {
    if r.pass {
        Ok(r)
    } else {
        Err(format!("{r}"))
    }
}

fn run(cfg: &CheckConfig) -> Result<CheckResult, String> {
    passed(theorems::run(cfg).map_err(|e| format!("{}: {e}", cfg.cli_flags()))?)
}

fn exhaustive(t: Theorem, ties: Ties) -> CheckConfig {
    let mut c = CheckConfig::new(t).with_ties(ties);
    c.mode = Mode::Exhaustive;
    c
}

fn tables() -> Outcome {
    let mut matched = 0;
    for (constant, text) in [
        (Constant::Pi, include_str!("golden/pi.txt")),
        (Constant::Ln2, include_str!("golden/ln2.txt")),
    ] {
        for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
            let mut parts = line.splitn(4, ' ');
            let (_, fmt, name, want) = (parts.next(), parts.next().unwrap(), parts.next().unwrap(), parts.next().unwrap());
            let fmt = Format::preset(fmt).ok_or(format!("bad format in `{line}`"))?;
            let cs = gen_constants(&constant, fmt, 0, 2).map_err(|e| e.to_string())?;
            let got = match name {
                "R" => &cs.r,
                "C1" => &cs.c1,
                "C2" => &cs.c2,
                "C3" => &cs.c3,
                _ => return Err(format!("bad name in `{line}`")),
            };
            let want_fpn = Fpn::parse_exact(want, fmt).map_err(|e| format!("{line}: {e}"))?;
            if *got != want_fpn || got.to_string() != want {
                return Err(format!("{} {fmt} {name}: got {got}, table has {want}", constant.name()));
            }
            matched += 1;
        }
    }
    if matched != 32 {
        return Err(format!("{matched} golden entries, expected 32"));
    }
    Ok("32 of 32 entries bit-exact".into())
}

fn thm7() -> Outcome {
    let cfg = CheckConfig::new(Theorem::Thm7).randomized(1, 0);
    let r = run(&cfg)?;
    if r.cases != 8 {
        return Err(format!("{} constant sets checked, expected 8", r.cases));
    }
    Ok("8 preset sets within 4 ulp(C1)".into())
}

fn sterbenz(ties: Ties) -> Outcome {
    let mut total = 0;
    for beta in [2, 3] {
        for p in 2..=5 {
            let mut c = exhaustive(Theorem::Sterbenz, ties);
            c.beta = beta;
            c.p = p;
            c.window = 8;
            total += run(&c)?.cases;
        }
    }
    Ok(format!("{total} pairs, 0 failures"))
}

fn sterbenz2(ties: Ties) -> Outcome {
    let mut total = 0;
    let grid = (2..=6).flat_map(|a| (2..=6).map(move |b| (2, a, b))).chain((2..=3).flat_map(|a| (2..=3).map(move |b| (3, a, b))));
    for (beta, p1, p2) in grid {
        let mut c = exhaustive(Theorem::Sterbenz2, ties);
        c.beta = beta;
        c.p1 = p1;
        c.p2 = p2;
        total += run(&c)?.cases;
    }
    Ok(format!("{total} pairs over 29 (beta, p1, p2), 0 failures"))
}

fn first_step(ties: Ties) -> Outcome {
    let mut total = 0;
    for t in [Theorem::Thm3, Theorem::Correct3] {
        let mut c = exhaustive(t, ties);
        c.p = 8;
        c.window = 12;
        c.n = vec![0, 1, 2];
        let r = run(&c)?;
        if r.expected_cases != Some(r.cases) {
            return Err(format!("{t}: {} cases, expected {:?}", r.cases, r.expected_cases));
        }
        total += r.cases;
    }
    Ok(format!("{total} (R, N, x) cases, 0 failures"))
}

fn second_step(constant: Constant, ties: Ties) -> Outcome {
    let mut c = CheckConfig::new(Theorem::Thm6).randomized(42, 1_000_000).with_ties(ties);
    c.format = Format::double();
    c.constants = vec![constant];
    c.n = vec![0, 5, 10];
    let r = run(&c)?;
    if r.cases != 3_000_000 {
        return Err(format!("{} reductions, expected 3000000", r.cases));
    }
    if !r.notes.iter().any(|n| n.contains("9 rounded operations")) {
        return Err("campaign did not confirm the operation count".into());
    }
    Ok(format!("{} reductions exact, 9 ops each", r.cases))
}

/// Counts the second step's rounded operations directly on reductions of
/// random in-range arguments.
fn op_count() -> Outcome {
    let fmt = Format::double();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut n_checked = 0;
    for constant in [Constant::Pi, Constant::Ln2] {
        for n in [0, 5, 10] {
            let cs = gen_constants(&constant, fmt, n, 2).map_err(|e| e.to_string())?;
            for _ in 0..2_000 {
                let m: u64 = rng.random_range(1u64 << 52..1u64 << 53);
                let e = rng.random_range(-60..=-10 - n as i64);
                let x = Fpn::from_parts(fmt, rng.random(), m as u128, e).map_err(|e| e.to_string())?;
                let out = match reduce(&x, &cs, n) {
                    Ok(o) => o,
                    Err(argred::Error::Range(_)) => continue,
                    Err(e) => return Err(format!("x = {x}: {e}")),
                };
                if out.rounding_ops_second != 9 {
                    return Err(format!("x = {x}, N = {n}: {} operations", out.rounding_ops_second));
                }
                n_checked += 1;
            }
        }
    }
    Ok(format!("{n_checked} direct reductions plus every campaign reduction"))
}

fn eft() -> Outcome {
    let c = CheckConfig::new(Theorem::Eft).randomized(42, 1_000_000);
    let r = run(&c)?;
    Ok(format!("{} calls recompose exactly", r.cases))
}

fn cody_waite() -> Outcome {
    let report = demo_codywaite().map_err(|e| e.to_string())?;
    match report.witness {
        Some(i) => {
            let w = &report.cases[i];
            Ok(format!("x = {}, z = {}: two roundings off by 2^{:.2}, fma exact", w.x, w.z, w.naive_error_log2.unwrap_or(f64::NAN)))
        }
        None => Err(format!("no witness\n{report}")),
    }
}

fn main() -> ExitCode {
    let mut s = Suite { failed: 0 };
    let sec = Duration::from_secs;
    s.criterion("1", "table reproduction", sec(5), tables);
    s.criterion("2", "|C - C1| <= 4 ulp(C1) on preset sets", sec(1), thm7);
    for (tag, ties) in [("", Ties::Even), ("10/", Ties::Away)] {
        let suffix = if ties == Ties::Away { ", ties away" } else { "" };
        s.criterion(&format!("{tag}3"), &format!("exact subtraction, exhaustive{suffix}"), sec(60), || sterbenz(ties));
        s.criterion(&format!("{tag}4"), &format!("approximate exact subtraction, exhaustive{suffix}"), sec(300), || sterbenz2(ties));
        s.criterion(&format!("{tag}5"), &format!("z extraction and first step at p = 8{suffix}"), sec(600), || first_step(ties));
        for c in [Constant::Pi, Constant::Ln2] {
            let title = format!("second step, double, {}, 10^6 per N{suffix}", c.name());
            s.criterion(&format!("{tag}6"), &title, sec(120), || second_step(c.clone(), ties));
        }
    }
    s.criterion("7", "second step costs 9 rounded operations", sec(30), op_count);
    s.criterion("8", "Fast2Sum and Fast2Mult recompose exactly", sec(30), eft);
    s.criterion("9", "two-rounding first step witness", sec(60), cody_waite);
    if s.failed == 0 {
        println!("all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("{} criteria fail", s.failed);
        ExitCode::FAILURE
    }
}

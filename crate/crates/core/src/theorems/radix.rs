//! Exact subtraction in an arbitrary integer radix.
//!
//! Values are integers counted in units of the smallest subnormal `λ`, so a
//! number is `m β^e` with `e >= 0` and `|m| < β^p`, and every difference of
//! two numbers is again an integer. Whether that integer has a `p`-digit
//! representation is decided directly on the integer, independently of the
//! binary kernel.

use std::fmt;
use std::str::FromStr;

use super::{inputs, CheckConfig, CheckResult, Failure, Mode, Tally, Theorem, MAX_EXHAUSTIVE_CASES};
use crate::error::{Error, Result};

/// A number `m β^e` in units of `λ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RadixNumber {
    pub beta: u32,
    pub m: i128,
    pub e: u32,
}

impl RadixNumber {
    /// The integer `m β^e`.
    pub fn value(&self) -> i128 {
        self.m * (self.beta as i128).pow(self.e)
    }

    /// `v` with the fewest digits: factors of `β` moved into the exponent
    /// while the significand is too wide. Digits then tell representability.
    pub fn normalize(beta: u32, v: i128, p: u32) -> RadixNumber {
        let b = beta as i128;
        let limit = b.pow(p);
        let (mut m, mut e) = (v, 0);
        while m.abs() >= limit && m % b == 0 {
            m /= b;
            e += 1;
        }
        RadixNumber { beta, m, e }
    }

    /// Whether `|m| < β^p`.
    pub fn fits(&self, p: u32) -> bool {
        self.m.unsigned_abs() < (self.beta as u128).pow(p)
    }
}

impl fmt::Display for RadixNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*{}^{}", self.m, self.beta, self.e)
    }
}

impl FromStr for RadixNumber {
    type Err = Error;

    /// Parses `m*β^e`; a bare integer is read in radix 2 with `e = 0`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("expected `m*beta^e` with integers, got `{s}`"));
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        match t.split_once('*') {
            None => Ok(RadixNumber { beta: 2, m: t.parse().map_err(|_| bad())?, e: 0 }),
            Some((m, rest)) => {
                let (b, e) = rest.split_once('^').ok_or_else(bad)?;
                Ok(RadixNumber {
                    beta: b.parse().map_err(|_| bad())?,
                    m: m.parse().map_err(|_| bad())?,
                    e: e.parse().map_err(|_| bad())?,
                })
            }
        }
    }
}

/// Every `p`-digit number whose exponent is below `window`, both signs and
/// zero, in increasing order.
fn window_values(beta: u32, p: u32, window: u32) -> Vec<RadixNumber> {
    let b = beta as i128;
    let mut pos = Vec::new();
    for e in 0..window {
        let lo = if e == 0 { 1 } else { b.pow(p - 1) };
        for m in lo..b.pow(p) {
            pos.push(RadixNumber { beta, m, e });
        }
    }
    let mut out: Vec<_> = pos.iter().rev().map(|r| RadixNumber { m: -r.m, ..*r }).collect();
    out.push(RadixNumber { beta, m: 0, e: 0 });
    out.extend(pos);
    out
}

/// Closed-form size of [`window_values`].
fn window_count(beta: u32, p: u32, window: u32) -> u64 {
    let b = beta as u64;
    let first = b.pow(p) - 1;
    let rest = (window as u64 - 1) * (b.pow(p) - b.pow(p - 1));
    2 * (first + rest) + 1
}

struct Band {
    /// `x` is in range iff `b y <= (a + b) x` and `b x <= (a + b) y`.
    a: i128,
    b: i128,
}

impl Band {
    fn holds(&self, x: i128, y: i128) -> bool {
        self.b * y <= (self.a + self.b) * x && self.b * x <= (self.a + self.b) * y
    }
}

fn validate(cfg: &CheckConfig, digits: &[u32]) -> Result<()> {
    if cfg.beta < 2 {
        return Err(Error::Config(format!("radix must be at least 2, got {}", cfg.beta)));
    }
    if let Some(&p) = digits.iter().find(|&&p| p < 2) {
        return Err(Error::Config(format!("precision must be at least 2, got {p}")));
    }
    if cfg.window == 0 {
        return Err(Error::Config("window must hold at least one binade".into()));
    }
    let top = digits.iter().max().unwrap() + cfg.window + 1;
    if (cfg.beta as f64).powi(top as i32) > 1e30 {
        return Err(Error::Config("radix window too wide for 128-bit integers".into()));
    }
    if let Mode::Randomized { .. } = cfg.mode {
        return Err(Error::Config(format!("{} is exhaustive only", cfg.theorem)));
    }
    Ok(())
}

fn run(cfg: &CheckConfig, p_in: u32, p_out: u32, band: Band, mut notes: Vec<String>) -> Result<CheckResult> {
    let beta = cfg.beta;
    let flags = cfg.cli_flags();
    let check = |x: &RadixNumber, y: &RadixNumber, key: Vec<u64>, t: &mut Tally| {
        t.cases += 1;
        let (xv, yv) = (x.value(), y.value());
        if !band.holds(xv, yv) {
            t.skipped += 1;
            return;
        }
        let d = RadixNumber::normalize(beta, xv - yv, p_out);
        if !d.fits(p_out) {
            t.fail(key, || Failure {
                what: format!("x - y = {d} needs more than {p_out} digits"),
                inputs: inputs([("x", x.to_string()), ("y", y.to_string()), ("x - y", (xv - yv).to_string())]),
                replay: format!("argred verify {flags} --x '{x}' --y '{y}'"),
            });
        }
    };

    if let Some(case) = &cfg.case {
        let parse = |s: &Option<String>, name| -> Result<RadixNumber> {
            let mut r: RadixNumber = super::Case::get(s, name)?.parse()?;
            if !s.as_deref().unwrap_or("").contains('*') {
                r.beta = beta;
            }
            if r.beta != beta || !r.fits(p_in) {
                return Err(Error::Config(format!("`{r}` is not a {p_in}-digit radix-{beta} number")));
            }
            Ok(r)
        };
        let (x, y) = (parse(&case.x, "x")?, parse(&case.y, "y")?);
        let mut t = Tally::default();
        check(&x, &y, vec![], &mut t);
        return Ok(t.finish(cfg, None, notes));
    }

    let values = window_values(beta, p_in, cfg.window);
    let expected = window_count(beta, p_in, cfg.window).pow(2);
    if expected > MAX_EXHAUSTIVE_CASES {
        return Err(Error::Config(format!("{expected} cases exceed the exhaustive limit")));
    }
    let tally = super::sweep::par_tally(&values, |i, x| {
        let mut t = Tally::default();
        for (j, y) in values.iter().enumerate() {
            check(x, y, vec![i as u64, j as u64], &mut t);
        }
        t
    });
    notes.push(format!("{} pairs inside the hypothesis band", tally.cases - tally.skipped));
    Ok(tally.finish(cfg, Some(expected), notes))
}

/// `y/2 <= x <= 2y` implies `x - y` has a `p`-digit representation.
pub fn check_sterbenz(cfg: &CheckConfig) -> Result<CheckResult> {
    debug_assert_eq!(cfg.theorem, Theorem::Sterbenz);
    validate(cfg, &[cfg.p])?;
    run(cfg, cfg.p, cfg.p, Band { a: 1, b: 1 }, Vec::new())
}

/// For `p1`-digit `x` and `y` with `y/(1+β^(p2-p1)) <= x <= (1+β^(p2-p1)) y`,
/// `x - y` has a `p2`-digit representation.
pub fn check_sterbenz_approx2(cfg: &CheckConfig) -> Result<CheckResult> {
    debug_assert_eq!(cfg.theorem, Theorem::Sterbenz2);
    validate(cfg, &[cfg.p1, cfg.p2])?;
    let beta = cfg.beta as i128;
    let band = if cfg.p2 >= cfg.p1 {
        Band { a: beta.pow(cfg.p2 - cfg.p1), b: 1 }
    } else {
        Band { a: 1, b: beta.pow(cfg.p1 - cfg.p2) }
    };
    run(cfg, cfg.p1, cfg.p2, band, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(theorem: Theorem, beta: u32, p: u32, p1: u32, p2: u32) -> CheckConfig {
        let mut c = CheckConfig::new(theorem);
        c.beta = beta;
        c.p = p;
        c.p1 = p1;
        c.p2 = p2;
        c.window = 4;
        c
    }

    #[test]
    fn normalize_strips_radix_factors() {
        let r = RadixNumber::normalize(3, 81 * 5, 2);
        assert_eq!((r.m, r.e), (5, 4));
        assert!(r.fits(2));
        assert!(!RadixNumber::normalize(2, 0b10011, 4).fits(4));
        assert!(RadixNumber::normalize(2, 0b10010, 4).fits(4));
        assert_eq!("7*3^2".parse::<RadixNumber>().unwrap().value(), 63);
        assert_eq!("-5".parse::<RadixNumber>().unwrap().value(), -5);
    }

    #[test]
    fn window_count_matches() {
        for (beta, p, w) in [(2, 2, 1), (2, 5, 8), (3, 3, 4), (5, 2, 3)] {
            assert_eq!(window_values(beta, p, w).len() as u64, window_count(beta, p, w));
        }
    }

    #[test]
    fn sterbenz_small_radices() {
        for (beta, p) in [(2, 3), (3, 2), (10, 2)] {
            let r = check_sterbenz(&cfg(Theorem::Sterbenz, beta, p, 0, 0)).unwrap();
            assert!(r.pass, "{r}");
        }
    }

    #[test]
    fn both_orders_of_precision() {
        for (p1, p2) in [(4, 2), (2, 4), (3, 3)] {
            let r = check_sterbenz_approx2(&cfg(Theorem::Sterbenz2, 2, 0, p1, p2)).unwrap();
            assert!(r.pass, "{r}");
        }
    }

    /// A wider band than the theorem allows must produce failures, which
    /// shows the predicate can reject.
    #[test]
    fn wider_band_fails() {
        let c = cfg(Theorem::Sterbenz, 2, 3, 0, 0);
        let r = run(&c, 3, 3, Band { a: 3, b: 1 }, Vec::new()).unwrap();
        assert!(!r.pass);
        assert!(r.failures_total > 0);
        assert!(r.failures[0].replay.contains("--theorem sterbenz"));
    }

    #[test]
    fn replays_one_pair() {
        let mut c = cfg(Theorem::Sterbenz, 3, 3, 0, 0);
        c.case = Some(super::super::Case { x: Some("20*3^1".into()), y: Some("11*3^2".into()), ..Default::default() });
        let r = check_sterbenz(&c).unwrap();
        assert_eq!(r.cases, 1);
        assert!(r.pass);
    }
}
